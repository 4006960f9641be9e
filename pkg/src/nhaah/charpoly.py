"""Spectrum of the AAH ring from P(E) = prod_l (E - W_l) - V0^L.

The polynomial is never expanded into coefficients.  Every product over the L
factors is accumulated as a complex logarithm, and the Aberth-Ehrlich
iteration runs in *anchored* coordinates: each approximate root is stored as
its nearest pole W_a plus an offset d = E - W_a.  Pole differences W_a - W_b
are evaluated in closed form from the integer phases, so E - W_l and E_i - E_j
keep full relative precision even when roots sit 1e-24 away from a pole (the
extended phase puts pairs of roots that close to doubly degenerate W values).
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .chain import chain_determinant
from .errors import (DegenerateDerivativeError, DomainError, MultiplicityError, NearPoleError,
                     NonConvergenceError, UnsupportedError)
from .lattice import (Boundary, ComplexAmplitudeVector, Direction, LatticeConfig, Space,
                      build_real_space, fourier_map, participation_ratio)

_EPS = np.finfo(float).eps


class SpectrumMethod(str, enum.Enum):
    ABERTH_CHARPOLY = "AberthCharpoly"
    DETERMINANT_ORACLE = "DeterminantOracle"
    FREE_RING = "FreeRing"


@dataclass(frozen=True)
class ComplexSpectrum:
    """Eigenvalues with solver diagnostics.

    ``anchors``/``offsets`` are present for spectra produced by
    :func:`solve_spectrum` on canonical rings: ``eigenvalues[i]`` equals
    ``W[anchors[i]] + offsets[i]`` with the offset known to full relative
    precision.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int
    method: SpectrumMethod
    anchors: Optional[np.ndarray] = None
    offsets: Optional[np.ndarray] = None
    multiplicity: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=complex))
        object.__setattr__(self, "residuals", np.asarray(self.residuals, dtype=float))
        if self.multiplicity is None:
            object.__setattr__(self, "multiplicity", np.zeros(len(self.eigenvalues), dtype=bool))

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def anchored(self) -> bool:
        return self.anchors is not None


@dataclass(frozen=True)
class EigenPair:
    energy: complex
    psi: ComplexAmplitudeVector
    phi: ComplexAmplitudeVector
    pr_real: float
    pr_momentum: float


# ---------------------------------------------------------------------------
# pole table


def _sinpi_array(j: np.ndarray, q: int) -> np.ndarray:
    j = np.mod(j, 2 * q)
    sign = np.where(j >= q, -1.0, 1.0)
    j = np.where(j >= q, j - q, j)
    j = np.where(2 * j > q, q - j, j)
    out = np.sin(np.pi * j / q)
    out = np.where(j == 0, 0.0, out)
    out = np.where(2 * j == q, 1.0, out)
    return sign * out


@dataclass(frozen=True)
class PoleTable:
    """W_l = 2J cos(2 pi m_l / q) with m_l = p*l mod q, and all differences W_a - W_b."""

    W: np.ndarray
    phases: np.ndarray
    diff: np.ndarray


@functools.lru_cache(maxsize=16)
def _pole_table(p: int, q: int, J: float) -> PoleTable:
    m = (p * np.arange(1, q + 1)) % q
    W = 2.0 * J * _sinpi_array(q - 4 * m, 2 * q)  # cos(x) = sin(pi/2 - x)
    ms, md = m[:, None] + m[None, :], m[:, None] - m[None, :]
    diff = -4.0 * J * _sinpi_array(ms, q) * _sinpi_array(md, q)
    for arr in (W, m, diff):
        arr.setflags(write=False)
    return PoleTable(W=W, phases=m, diff=diff)


def pole_table(config: LatticeConfig) -> PoleTable:
    _require_dual(config)
    return _pole_table(config.p, config.q, config.J)


def _require_dual(config: LatticeConfig) -> None:
    if config.boundary is not Boundary.PBC or config.L != config.q:
        raise UnsupportedError("the characteristic polynomial P(E) needs PBC with L == q")


# ---------------------------------------------------------------------------
# scaled characteristic polynomial


def _wrap(z: np.ndarray) -> np.ndarray:
    # imaginary part of a complex log into (-pi, pi]
    return z.real + 1j * (np.pi - np.mod(np.pi - z.imag, 2 * np.pi))


@dataclass(frozen=True)
class ScaledCharpoly:
    """r = prod_l (E - W_l) / V0^L and s = sum_l 1/(E - W_l).

    Unpacks as ``r, s``.  ``log_r`` is the accumulated complex logarithm; when
    E hits a pole exactly, ``r = 0``, ``s = inf`` and ``pole_index`` names it.
    """

    r: complex
    s: complex
    log_r: complex
    pole_index: Optional[int] = None

    def __iter__(self) -> Iterator[complex]:
        return iter((self.r, self.s))


def charpoly_scaled(E: complex, config: LatticeConfig) -> ScaledCharpoly:
    if config.V0 <= 0:
        raise DomainError("charpoly_scaled needs V0 > 0")
    tab = pole_table(config)
    d = complex(E) - tab.W
    hit = np.flatnonzero(d == 0)
    if hit.size:
        return ScaledCharpoly(0j, complex(np.inf), complex(-np.inf), int(hit[0]))
    log_r = complex(_wrap(np.sum(np.log(d)) - config.L * math.log(config.V0)))
    with np.errstate(over="ignore"):
        r = complex(np.exp(log_r))
    return ScaledCharpoly(r, complex(np.sum(1.0 / d)), log_r)


def newton_ratio(E: complex, config: LatticeConfig) -> complex:
    """P(E)/P'(E) = (r - 1)/(r s), evaluated without forming P or P'."""
    val = charpoly_scaled(E, config)
    if val.pole_index is not None:
        raise NearPoleError(f"E coincides with W_{val.pole_index + 1}; perturb E")
    if val.s == 0:
        raise DegenerateDerivativeError("r*s = 0: P'(E) vanishes at this E")
    # (r - 1)/(r s) = -expm1(-log r)/s, stable for any |r|
    return complex(-np.expm1(-val.log_r) / val.s)


# ---------------------------------------------------------------------------
# anchored Aberth-Ehrlich


def _anchored_terms(a, d, tab: PoleTable, L: int, log_v0: float):
    rows = np.arange(len(a))
    Z = tab.diff[a] + d[:, None]  # z_i - W_l
    Z[rows, a] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_rest = np.sum(np.log(Z), axis=1) - L * log_v0
        inv = 1.0 / Z
    inv[rows, a] = 0.0
    return log_rest, inv.sum(axis=1)


def _inverse_newton_anchored(d, log_rest, s_rest):
    # P/P' = (d - exp(-log_rest)) / (1 + d s_rest); return its reciprocal
    num = 1.0 + d * s_rest
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        big = -log_rest.real > 700.0
        safe = np.where(big, 0.0, -log_rest)
        inv = num / (d - np.exp(safe))
        inv = np.where(big, -num * np.exp(log_rest), inv)
    return inv


def _reanchor(a, d, tab: PoleTable):
    Z = tab.diff[a] + d[:, None]
    a_new = np.argmin(np.abs(Z), axis=1)
    return a_new, Z[np.arange(len(a)), a_new]


def _pairwise(a, d, tab: PoleTable):
    return tab.diff[np.ix_(a, a)] + d[:, None] - d[None, :]


def _anchored_residuals(d, log_rest):
    # |r - 1| with r = d * exp(log_rest)
    with np.errstate(divide="ignore"):
        lr = _wrap(np.log(d.astype(complex)) + log_rest)
    return np.abs(np.expm1(lr))


def _jitter(L: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return 1e-3 * (rng.uniform(-1, 1, L) + 1j * rng.uniform(-1, 1, L))


def solve_spectrum(config: LatticeConfig, max_sweeps: int = 500) -> ComplexSpectrum:
    """All L roots of P(E) by Aberth-Ehrlich iteration on the product form.

    Initial guesses sit on the circle |E| = 2J + V0 + J/2, each scaled by a
    deterministic jitter of size 1e-3 drawn from ``config.jitter_seed``.
    Configurations without the momentum-space dual (OBC, or L != q) are
    solved from the real-space determinant instead.
    """
    if config.boundary is not Boundary.PBC or config.L != config.q:
        from .chain import solve_chain_spectrum

        return solve_chain_spectrum(build_real_space(config), seed=config.jitter_seed, max_sweeps=max_sweeps)
    L, J, V0 = config.L, config.J, config.V0
    tab = pole_table(config)
    if V0 == 0:
        return _free_ring(config, tab)
    scale = 2 * J + V0
    z0 = (scale + 0.5 * J) * np.exp(2j * np.pi * (np.arange(L) + 0.5) / L) * (1 + _jitter(L, config.jitter_seed))
    a = np.argmin(np.abs(z0[:, None] - tab.W[None, :]), axis=1)
    d = z0 - tab.W[a]
    log_v0 = math.log(V0)
    abs_tol = 1e-13 * scale
    sweeps = 0
    converged = np.zeros(L, dtype=bool)
    for sweeps in range(1, max_sweeps + 1):
        log_rest, s_rest = _anchored_terms(a, d, tab, L, log_v0)
        inv_n = _inverse_newton_anchored(d, log_rest, s_rest)
        D = _pairwise(a, d, tab)
        np.fill_diagonal(D, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            invD = 1.0 / D
            np.fill_diagonal(invD, 0.0)
            w = 1.0 / (inv_n - invD.sum(axis=1))
        w = np.where(np.isfinite(w) & np.isfinite(inv_n), w, 0.0)
        d = d - w
        a, d = _reanchor(a, d, tab)
        # absolute tolerance from the spectral scale, relative one from the offset
        step = np.abs(w)
        converged = (step <= abs_tol) & ((step <= 1e-10 * np.abs(d)) | (step == 0))
        if converged.all():
            break
    log_rest, _ = _anchored_terms(a, d, tab, L, log_v0)
    residuals = _anchored_residuals(d, log_rest)
    if not converged.all():
        worst = int(np.argmax(np.where(converged, -np.inf, residuals)))
        raise NonConvergenceError("Aberth iteration on P(E) did not converge", float(residuals[worst]), worst, sweeps)
    order = np.lexsort((np.round((tab.W[a] + d).imag, 12), np.round((tab.W[a] + d).real, 12)))
    a, d, residuals = a[order], d[order], residuals[order]
    return ComplexSpectrum(eigenvalues=tab.W[a] + d, residuals=residuals, iterations=sweeps,
                           method=SpectrumMethod.ABERTH_CHARPOLY, anchors=a, offsets=d,
                           multiplicity=_unresolved(_pairwise(a, d, tab), tab.diff[np.ix_(a, a)], d))


def _free_ring(config: LatticeConfig, tab: PoleTable) -> ComplexSpectrum:
    # V0 = 0: roots are 2J cos(2 pi l / L), l = 1..L, each equal to one pole
    L = config.L
    inv_p = pow(config.p, -1, config.q)
    l = np.arange(1, L + 1)
    a = (l * inv_p) % config.q - 1  # pole whose phase m equals l
    a = np.where(a < 0, a + config.q, a)
    d = np.zeros(L, dtype=complex)
    return ComplexSpectrum(eigenvalues=tab.W[a] + d, residuals=np.zeros(L), iterations=0,
                           method=SpectrumMethod.FREE_RING, anchors=a, offsets=d,
                           multiplicity=_unresolved(_pairwise(a, d, tab), tab.diff[np.ix_(a, a)], d))


def _unresolved(D: np.ndarray, DW: np.ndarray, d: np.ndarray) -> np.ndarray:
    L = len(d)
    scale = np.maximum(np.abs(DW), np.maximum(np.abs(d)[:, None], np.abs(d)[None, :]))
    bad = np.abs(D) <= 16 * _EPS * scale
    np.fill_diagonal(bad, False)
    return bad.any(axis=1) if L else np.zeros(0, dtype=bool)


# ---------------------------------------------------------------------------
# accurate differences


def root_differences(spectrum: ComplexSpectrum, config: Optional[LatticeConfig] = None) -> np.ndarray:
    """Matrix E_i - E_j, from the anchored representation when available."""
    if spectrum.anchored and config is not None:
        return _pairwise(spectrum.anchors, spectrum.offsets, pole_table(config))
    E = spectrum.eigenvalues
    return E[:, None] - E[None, :]


def pole_offsets(spectrum: ComplexSpectrum, config: LatticeConfig) -> np.ndarray:
    """Matrix E_i - W_l."""
    tab = pole_table(config)
    if spectrum.anchored:
        return tab.diff[spectrum.anchors] + spectrum.offsets[:, None]
    return spectrum.eigenvalues[:, None] - tab.W[None, :]


def check_simple(spectrum: ComplexSpectrum, config: Optional[LatticeConfig] = None, index=None) -> None:
    """Raise MultiplicityError if a root (or the given one) is not resolved from its neighbours."""
    if spectrum.anchored and config is not None:
        bad = spectrum.multiplicity
    else:
        D = root_differences(spectrum)
        scale = max(1.0, float(np.max(np.abs(spectrum.eigenvalues), initial=0.0)))
        close = np.abs(D) <= 1e-12 * scale
        np.fill_diagonal(close, False)
        bad = close.any(axis=1)
    idx = np.arange(len(spectrum)) if index is None else np.atleast_1d(index)
    hits = [int(i) for i in idx if bad[i]]
    if hits:
        raise MultiplicityError(f"roots {hits[:5]} are not resolved from a neighbour")


# ---------------------------------------------------------------------------
# independent checks


def determinant_oracle(E: complex, config: LatticeConfig, space="RealSpace") -> complex:
    """det(E - H) evaluated without the closed form of P(E).

    Real space: continuant recurrence of the ring (see
    :func:`nhaah.chain.chain_determinant`).  Momentum space: the product
    prod_l (E - W_l) - V0^L taken term by term.
    """
    space = Space(space)
    if space is Space.REAL:
        return chain_determinant(build_real_space(config), complex(E))
    _require_dual(config)
    W = pole_table(config).W
    with np.errstate(over="ignore"):
        return complex(np.prod(complex(E) - W) - config.V0 ** config.L)


def root_identity_check(spectrum: ComplexSpectrum, config: LatticeConfig) -> float:
    """Max relative deviation between the two sides of

        prod_{a != b} (E_b - E_a)/J  =  (V0/J)^L  sum_a J/(E_b - W_a)

    over all roots E_b, both sides accumulated as logarithms.
    """
    if config.V0 <= 0:
        raise DomainError("the root identity needs V0 > 0")
    check_simple(spectrum, config)
    L, J = len(spectrum), config.J
    D = root_differences(spectrum, config)
    np.fill_diagonal(D, 1.0)
    lhs = np.sum(np.log(D), axis=1) - (L - 1) * math.log(J)
    O = pole_offsets(spectrum, config)
    s = np.sum(1.0 / O, axis=1)
    rhs = L * math.log(config.V0 / J) + np.log(J * s)
    return float(np.max(np.abs(np.expm1(_wrap(lhs - rhs)))))


# ---------------------------------------------------------------------------
# eigenvectors


def eigenvector_pair(E: complex, config: LatticeConfig, anchor: Optional[int] = None,
                     offset: Optional[complex] = None) -> EigenPair:
    """Momentum- and real-space eigenvectors at a converged root E.

    phi follows phi_n / phi_{n-1} = V0/(E - W_n) around the ring, started at the
    site whose pole is closest to E (that single ratio is the one implied by
    closure of the ring, so it is never evaluated).  The recursion runs on
    logarithms and is exponentiated once after subtracting the maximum.
    Pass ``anchor``/``offset`` from an anchored spectrum to keep E - W_n exact.
    """
    _require_dual(config)
    tab = pole_table(config)
    L = config.L
    if anchor is not None:
        o = tab.diff[anchor] + (offset if offset is not None else complex(E) - tab.W[anchor])
    else:
        o = complex(E) - tab.W
    n0 = int(np.argmin(np.abs(o)))
    order = (n0 + np.arange(L)) % L
    if config.V0 == 0:
        log_phi = np.full(L, -np.inf, dtype=complex)
        log_phi[n0] = 0.0
    else:
        with np.errstate(divide="ignore"):
            step = math.log(config.V0) - np.log(o[order[1:]].astype(complex))
        if not np.all(np.isfinite(step)):
            bad = int(order[1:][~np.isfinite(step)][0]) + 1
            raise NearPoleError(f"E sits on a second pole W_{bad}; re-polish the root")
        log_phi = np.empty(L, dtype=complex)
        log_phi[order] = np.concatenate(([0.0], np.cumsum(step)))
    with np.errstate(invalid="ignore"):
        phi = np.exp(log_phi - np.max(log_phi.real))
    phi = np.nan_to_num(phi)
    phi /= np.linalg.norm(phi)
    phi_vec = ComplexAmplitudeVector(phi, Space.MOMENTUM)
    psi_vec = fourier_map(phi_vec, config, Direction.TO_REAL)
    psi = psi_vec.values / np.linalg.norm(psi_vec.values)
    psi_vec = ComplexAmplitudeVector(psi, Space.REAL)
    return EigenPair(energy=complex(E), psi=psi_vec, phi=phi_vec,
                     pr_real=participation_ratio(psi), pr_momentum=participation_ratio(phi))


def eigenpairs(spectrum: ComplexSpectrum, config: LatticeConfig) -> list[EigenPair]:
    out = []
    for i, E in enumerate(spectrum.eigenvalues):
        if spectrum.anchored:
            out.append(eigenvector_pair(E, config, int(spectrum.anchors[i]), spectrum.offsets[i]))
        else:
            out.append(eigenvector_pair(E, config))
    return out


# ---------------------------------------------------------------------------
# comparing spectra


@dataclass(frozen=True)
class SpectrumMatch:
    max_distance: float
    pairs: list[tuple[int, int]]
    consistent: bool


def match_spectra(a, b, tol: float = 1e-6, method: str = "greedy") -> SpectrumMatch:
    """Match two eigenvalue multisets; report the worst matched distance.

    ``greedy`` repeatedly pairs the globally closest remaining points; the
    mutual-consistency flag checks that every pair farther apart than ``tol``
    could not be improved by swapping partners.  ``optimal`` solves the
    assignment problem exactly.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("spectra of different sizes")
    C = np.abs(a[:, None] - b[None, :])
    if method == "optimal":
        from scipy.optimize import linear_sum_assignment

        rows, cols = linear_sum_assignment(C)
        pairs = list(zip(rows.tolist(), cols.tolist()))
    else:
        order = np.argsort(C, axis=None, kind="stable")
        used_a = np.zeros(len(a), dtype=bool)
        used_b = np.zeros(len(b), dtype=bool)
        pairs = []
        for flat in order:
            i, j = divmod(int(flat), len(b))
            if not used_a[i] and not used_b[j]:
                used_a[i] = used_b[j] = True
                pairs.append((i, j))
                if len(pairs) == len(a):
                    break
    dist = np.array([C[i, j] for i, j in pairs]) if pairs else np.zeros(0)
    consistent = True
    for (i, j), dij in zip(pairs, dist):
        if dij > tol:
            for k, l in pairs:
                if C[i, l] + C[k, j] < dij + C[k, l] - tol:
                    consistent = False
                    break
    return SpectrumMatch(float(dist.max(initial=0.0)), sorted(pairs), consistent)
