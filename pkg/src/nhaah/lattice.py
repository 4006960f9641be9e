"""Real- and momentum-space AAH chains, rational approximants and the Fourier map.

Sites are numbered 1..L in every public function taking a site index, so that
``onsite_potential(cfg, n)`` is literally ``V0 * exp(-2*pi*i*(p/q)*n)``.  Arrays
returned by the builders are ordinary 0-based numpy arrays (entry ``k`` belongs
to site ``k + 1``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np

from .errors import ConfigError, DomainError, EmptyRequestError, PrecisionError, UnsupportedError

INVERSE_GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0

_NAMED_CONSTANTS = {"inverse golden mean", "golden", "inverse golden ratio"}


class Boundary(str, enum.Enum):
    PBC = "PBC"
    OBC = "OBC"


class Space(str, enum.Enum):
    REAL = "RealSpace"
    MOMENTUM = "MomentumSpace"


class Direction(str, enum.Enum):
    TO_MOMENTUM = "ToMomentum"
    TO_REAL = "ToReal"


# ---------------------------------------------------------------------------
# exact trigonometry on rational multiples of pi


def _reduce(j: int, q: int) -> int:
    return j % (2 * q)


def sinpi_ratio(j: int, q: int) -> float:
    """sin(pi*j/q) for integers, exact zero at multiples of q and full relative accuracy elsewhere."""
    j = _reduce(j, q)
    sign = 1.0
    if j >= q:
        j -= q
        sign = -1.0
    if j == 0:
        return 0.0
    # fold into (0, q/2] so the argument never exceeds pi/2
    if 2 * j > q:
        j = q - j
    if 2 * j == q:
        return sign
    return sign * math.sin(math.pi * j / q)


def cospi_ratio(j: int, q: int) -> float:
    """cos(pi*j/q), computed as sin(pi*(q - 2j)/(2q)) to keep the same guarantees."""
    return sinpi_ratio(q - 2 * j, 2 * q)


# ---------------------------------------------------------------------------
# rational approximants


def _interval_cf_terms(lo: Fraction, hi: Fraction, limit: int) -> list[int]:
    # continued-fraction terms shared by every number in [lo, hi]
    terms: list[int] = []
    while len(terms) < limit:
        a_lo, a_hi = math.floor(lo), math.floor(hi)
        if a_lo != a_hi:
            break
        terms.append(a_lo)
        f_lo, f_hi = lo - a_lo, hi - a_lo
        if f_lo == 0:
            break
        lo, hi = 1 / f_hi, 1 / f_lo
    return terms


def _alpha_interval(alpha, depth: int) -> tuple[Fraction, Fraction]:
    if isinstance(alpha, str):
        key = alpha.strip().lower().replace("_", " ")
        if key in _NAMED_CONSTANTS:
            digits = 40 + depth  # q_k grows like 1.618**k
            with localcontext() as ctx:
                ctx.prec = digits
                x = (Decimal(5).sqrt() - 1) / 2
            delta = Fraction(1, 10 ** (digits - 2))
            return Fraction(x) - delta, Fraction(x) + delta
        try:
            alpha = Decimal(alpha.strip())
        except Exception as exc:  # decimal raises its own InvalidOperation
            raise DomainError(f"cannot interpret alpha={alpha!r}") from exc
    if isinstance(alpha, Decimal):
        exp = alpha.as_tuple().exponent
        x = Fraction(alpha)
        delta = Fraction(1, 2) * Fraction(10) ** exp
        return x - delta, x + delta
    if isinstance(alpha, Fraction):
        return alpha, alpha
    if isinstance(alpha, (float, int)):
        x = Fraction(float(alpha))
        delta = Fraction(math.ulp(float(alpha))) / 2
        return x - delta, x + delta
    raise DomainError(f"unsupported alpha type {type(alpha).__name__}")


def continued_fraction_approximants(alpha, depth: int) -> list[tuple[int, int]]:
    """First ``depth`` convergents p/q of ``alpha`` in (0, 1).

    ``alpha`` may be a float, a :class:`~decimal.Decimal`, a decimal string or
    the name ``"inverse golden mean"``.  Only continued-fraction terms that are
    certified by the precision of the input are used; asking for more raises
    :class:`PrecisionError`.  The zeroth convergent ``0/1`` is not reported.
    """
    if depth <= 0:
        raise EmptyRequestError("depth must be a positive integer")
    lo, hi = _alpha_interval(alpha, depth)
    if not (0 < lo and hi < 1):
        raise DomainError("alpha must lie strictly inside (0, 1)")
    terms = _interval_cf_terms(lo, hi, depth + 1)
    if len(terms) < depth + 1:
        raise PrecisionError(
            f"alpha only certifies {max(len(terms) - 1, 0)} convergents, {depth} requested"
        )
    out = []
    p_prev, q_prev = 1, 0
    p, q = terms[0], 1
    for a in terms[1:]:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return out


# ---------------------------------------------------------------------------
# model configuration


@dataclass(frozen=True)
class LatticeConfig:
    """Parameters of a finite AAH chain.

    ``alpha`` is the irrational target that p/q approximates.  It is only used
    by ergodic averages; the Hamiltonians always use the exact ratio p/q.
    Under PBC the chain length must equal ``q`` unless ``exploratory`` is set.
    """

    J: float
    V0: float
    p: int
    q: int
    L: Optional[int] = None
    boundary: Boundary = Boundary.PBC
    jitter_seed: int = 0
    alpha: Optional[float] = None
    exploratory: bool = False

    def __post_init__(self):
        if self.L is None:
            object.__setattr__(self, "L", self.q)
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "J", float(self.J))
        object.__setattr__(self, "V0", float(self.V0))
        if not (math.isfinite(self.J) and self.J > 0):
            raise ConfigError("J must be a positive real")
        if not (math.isfinite(self.V0) and self.V0 >= 0):
            raise ConfigError("V0 must be a nonnegative real")
        if not (isinstance(self.p, int) and isinstance(self.q, int)) or self.p < 1 or self.q <= self.p:
            raise ConfigError("approximant must satisfy 1 <= p < q")
        if math.gcd(self.p, self.q) != 1:
            raise ConfigError(f"p={self.p} and q={self.q} are not coprime")
        if not isinstance(self.L, int) or self.L < 2:
            raise ConfigError("L must be an integer >= 2")
        if self.jitter_seed < 0:
            raise ConfigError("jitter_seed must be nonnegative")
        if self.boundary is Boundary.PBC and self.L != self.q and not self.exploratory:
            raise ConfigError(f"PBC requires L == q (got L={self.L}, q={self.q}); set exploratory=True to override")

    @classmethod
    def golden(cls, q: int, J: float = 1.0, V0: float = 0.5, **kw) -> "LatticeConfig":
        """Fibonacci approximant of the inverse golden mean with denominator ``q``."""
        for p_k, q_k in continued_fraction_approximants("inverse golden mean", 40):
            if q_k == q:
                return cls(J=J, V0=V0, p=p_k, q=q_k, alpha=INVERSE_GOLDEN_MEAN, **kw)
            if q_k > q:
                break
        raise ConfigError(f"{q} is not a Fibonacci denominator")

    @property
    def canonical(self) -> bool:
        return self.boundary is Boundary.OBC or self.L == self.q

    @property
    def ratio(self) -> float:
        return self.p / self.q

    def replace(self, **changes) -> "LatticeConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class ComplexAmplitudeVector:
    values: np.ndarray
    space: Space

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        object.__setattr__(self, "space", Space(self.space))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class TridiagonalChain:
    """Nearest-neighbour chain  H[n, n+1] = t[n],  H[n+1, n] = rho[n],  H[n, n] = V[n].

    ``corner`` is ``(t_wrap, rho_wrap)`` = ``(H[L-1, 0], H[0, L-1])``: the bond
    closing the ring, in the same upper/lower convention as ``t``/``rho``.
    ``None`` means open boundaries.
    """

    t: np.ndarray
    rho: np.ndarray
    V: np.ndarray
    corner: Optional[tuple[complex, complex]] = None
    symmetric_conjugate: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("t", "rho", "V"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        L = len(self.V)
        if len(self.t) != L - 1 or len(self.rho) != L - 1:
            raise ConfigError("t and rho must have length L - 1")
        if self.corner is not None:
            tw, rw = self.corner
            object.__setattr__(self, "corner", (complex(tw), complex(rw)))

    @property
    def L(self) -> int:
        return len(self.V)

    @property
    def periodic(self) -> bool:
        return self.corner is not None

    def to_dense(self) -> np.ndarray:
        L = self.L
        H = np.diag(self.V).astype(complex)
        idx = np.arange(L - 1)
        H[idx, idx + 1] += self.t
        H[idx + 1, idx] += self.rho
        if self.corner is not None:
            H[L - 1, 0] += self.corner[0]
            H[0, L - 1] += self.corner[1]
        return H

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        y = self.V * x
        y[:-1] += self.t * x[1:]
        y[1:] += self.rho * x[:-1]
        if self.corner is not None:
            y[-1] += self.corner[0] * x[0]
            y[0] += self.corner[1] * x[-1]
        return y

    def is_conjugate_symmetric(self, rtol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.t), initial=0.0)))
        return bool(np.all(np.abs(self.rho - np.conj(self.t)) <= rtol * scale))

    def has_balanced_moduli(self, rtol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.t), initial=0.0)))
        return bool(np.all(np.abs(np.abs(self.rho) - np.abs(self.t)) <= rtol * scale))

    def ring_hoppings(self) -> tuple[np.ndarray, np.ndarray]:
        """Length-L hopping lists with the closing bond last (zero for OBC)."""
        tw, rw = self.corner if self.corner is not None else (0.0, 0.0)
        return np.append(self.t, tw), np.append(self.rho, rw)

    def rotated_open(self, start: int) -> "TridiagonalChain":
        """Open chain read around the ring from 0-based site ``start``; the bond before it is cut."""
        t_ring, rho_ring = self.ring_hoppings()
        order = (start + np.arange(self.L)) % self.L
        return TridiagonalChain(t=t_ring[order[:-1]], rho=rho_ring[order[:-1]], V=self.V[order])


# ---------------------------------------------------------------------------
# potentials and Hamiltonians


def _check_site(config: LatticeConfig, n: int) -> None:
    if not (1 <= n <= config.L):
        raise IndexError(f"site {n} outside 1..{config.L}")


def onsite_potential(config: LatticeConfig, n: int) -> complex:
    """V_n = V0 exp(-2 pi i (p/q) n), 1-based ``n``."""
    _check_site(config, n)
    j = 2 * config.p * n  # phase is pi*j/q
    return config.V0 * complex(cospi_ratio(j, config.q), -sinpi_ratio(j, config.q))


def dual_potential(config: LatticeConfig, n: int) -> float:
    """W_n = 2 J cos(2 pi (p/q) n), 1-based ``n``."""
    _check_site(config, n)
    return 2.0 * config.J * cospi_ratio(2 * config.p * n, config.q)


def onsite_potentials(config: LatticeConfig) -> np.ndarray:
    return np.array([onsite_potential(config, n) for n in range(1, config.L + 1)])


def dual_potentials(config: LatticeConfig) -> np.ndarray:
    return np.array([dual_potential(config, n) for n in range(1, config.L + 1)])


def build_real_space(config: LatticeConfig) -> TridiagonalChain:
    L, J = config.L, config.J
    hop = np.full(L - 1, J, dtype=complex)
    corner = (J, J) if config.boundary is Boundary.PBC else None
    return TridiagonalChain(t=hop, rho=hop.copy(), V=onsite_potentials(config), corner=corner,
                            symmetric_conjugate=True)


def build_momentum_space(config: LatticeConfig) -> TridiagonalChain:
    if config.boundary is not Boundary.PBC:
        raise UnsupportedError("the momentum-space dual is only defined under PBC")
    if config.L != config.q:
        raise UnsupportedError("the momentum-space dual requires L == q")
    L = config.L
    return TridiagonalChain(t=np.zeros(L - 1), rho=np.full(L - 1, config.V0), V=dual_potentials(config),
                            corner=(0.0, config.V0))


def fourier_map(vec: ComplexAmplitudeVector, config: LatticeConfig,
                direction: Union[Direction, str]) -> ComplexAmplitudeVector:
    """phi_n = L^{-1/2} sum_l psi_l exp(2 pi i (p/q) l n) and its inverse.

    Output index n runs over 1..L in the natural order, so this is a DFT whose
    frequencies stride by p (mod q).
    """
    direction = Direction(direction)
    if config.boundary is not Boundary.PBC or config.L != config.q:
        raise UnsupportedError("fourier_map needs PBC with L == q")
    x = np.asarray(vec.values, dtype=complex)
    L = config.L
    if len(x) != L:
        raise ConfigError(f"vector length {len(x)} does not match L={L}")
    expected = Space.REAL if direction is Direction.TO_MOMENTUM else Space.MOMENTUM
    if vec.space is not expected:
        raise ConfigError(f"{direction.value} expects a {expected.value} vector")
    # entry for site l sits at FFT slot l mod L
    slots = np.roll(x, 1)
    gather = (config.p * np.arange(1, L + 1)) % L
    if direction is Direction.TO_MOMENTUM:
        out = np.fft.ifft(slots)[gather] * math.sqrt(L)
        return ComplexAmplitudeVector(out, Space.MOMENTUM)
    out = np.fft.fft(slots)[gather] / math.sqrt(L)
    return ComplexAmplitudeVector(out, Space.REAL)


def participation_ratio(values: Iterable[complex]) -> float:
    w = np.abs(np.asarray(values)) ** 2
    return float(w.sum() ** 2 / np.sum(w * w))
