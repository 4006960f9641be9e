"""Lyapunov exponents and localization lengths.

Four independent routes to the same numbers:

* ergodic transfer average of the momentum-space ratio recursion (mu),
* closed forms in the metallic and insulating phases,
* the (generalized) Thouless sum over level spacings,
* a direct regression of log|psi_n| against the distance from the peak.

The generalized Thouless relation for arbitrary chains with rho = conj(t),
and the Green-function residue identity it rests on, live here as well.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .chain import TwistedVector, twisted_eigenvector
from .charpoly import ComplexSpectrum, EigenPair, check_simple, root_differences
from .errors import (BranchCutError, ChainTooShortError, DomainError, MultiplicityError,
                     NotLocalizedError, SkinEffectError)
from .integrals import on_cut, theta_of_energy
from .lattice import LatticeConfig, TridiagonalChain, build_real_space


class LyapunovMethod(str, enum.Enum):
    TRANSFER_PRODUCT = "TransferProduct"
    CLOSED_FORM_METALLIC = "ClosedFormMetallic"
    CLOSED_FORM_LOCALIZED = "ClosedFormLocalized"
    THOULESS_SUM = "ThoulessSum"
    DECAY_REGRESSION = "DecayRegression"
    GENERALIZED_THOULESS = "GeneralizedThouless"


@dataclass(frozen=True)
class LyapunovEstimate:
    """An inverse localization length (per site) and how it was obtained.

    ``value`` is reported as computed; it can be negative (e.g. the momentum
    exponent in the insulating phase, or a finite-size Thouless sum on an
    extended state), and ``xi`` is only defined when it is positive.
    """

    value: float
    method: LyapunovMethod
    energy: Optional[complex] = None
    stderr: float = 0.0
    skipped: int = 0
    flags: tuple[str, ...] = field(default=())

    @property
    def xi(self) -> Optional[float]:
        if self.value > 0 and math.isfinite(self.value):
            return 1.0 / self.value
        return None


# ---------------------------------------------------------------------------
# momentum-space exponent


def mu_transfer(E: complex, config: LatticeConfig, n_terms: int = 1_000_000,
                pole_tol: float = 1e-12) -> LyapunovEstimate:
    """mu(E) = lim (1/n) sum_k log|(E - 2J cos(2 pi alpha k))/V0|.

    Uses the irrational ``config.alpha`` (falling back to p/q when it is not
    set, in which case the orbit is periodic).  Terms within ``pole_tol`` of a
    pole are dropped and counted in ``skipped``.  ``stderr`` is the sample
    standard error of the mean, which over-estimates the error of an
    equidistributed sequence and is therefore a conservative band.
    """
    if n_terms < 1000:
        raise DomainError("n_terms must be at least 1000")
    if config.V0 <= 0:
        raise DomainError("mu_transfer needs V0 > 0")
    alpha = config.alpha if config.alpha is not None else config.ratio
    k = np.arange(1, n_terms + 1, dtype=float)
    phase = np.mod(alpha * k, 1.0)
    d = np.abs(complex(E) - 2.0 * config.J * np.cos(2.0 * np.pi * phase))
    keep = d > pole_tol
    terms = np.log(d[keep] / config.V0)
    n = terms.size
    return LyapunovEstimate(float(np.mean(terms)), LyapunovMethod.TRANSFER_PRODUCT, complex(E),
                            float(np.std(terms, ddof=1) / math.sqrt(n)), int(n_terms - n))


def mu_metallic_closed(config: LatticeConfig) -> LyapunovEstimate:
    """log(J/V0): positive (momentum-space localization) iff V0 < J."""
    if config.V0 == 0:
        return LyapunovEstimate(math.inf, LyapunovMethod.CLOSED_FORM_METALLIC, flags=("infinite",))
    return LyapunovEstimate(math.log(config.J / config.V0), LyapunovMethod.CLOSED_FORM_METALLIC)


def mu_localized_closed(E: complex, config: LatticeConfig, reflect: bool = True) -> LyapunovEstimate:
    """mu(E) = -log(V0/J) - Im(theta(E)) for E off the segment [-2J, 2J]."""
    if config.V0 <= 0:
        raise DomainError("mu_localized_closed needs V0 > 0")
    if on_cut(E, config.J):
        raise BranchCutError("E lies on the cut [-2J, 2J]; use the on-cut limit I(E) = log J instead")
    th = theta_of_energy(E, config.J, reflect=reflect).theta
    return LyapunovEstimate(-math.log(config.V0 / config.J) - th.imag, LyapunovMethod.CLOSED_FORM_LOCALIZED,
                            complex(E))


# ---------------------------------------------------------------------------
# Thouless sums


def _thouless_core(diffs: np.ndarray, hop_logs: np.ndarray) -> float:
    # (1/L) [ sum_beta log|E_n - E_beta| - sum_k log|t_k| ], L = len(diffs) + 1
    L = diffs.size + 1
    return float((np.sum(np.log(np.abs(diffs))) - np.sum(hop_logs)) / L)


def _row_without(D: np.ndarray, n: int) -> np.ndarray:
    return np.delete(D[n], n)


def lambda_thouless(spectrum: ComplexSpectrum, n: int, config: LatticeConfig) -> LyapunovEstimate:
    """(1/L) sum_{l != n} log(|E_n - E_l| / J) for root ``n`` (0-based).

    Level differences come from the anchored representation when the spectrum
    carries one, so nearly coincident roots keep their relative accuracy.
    """
    L = len(spectrum)
    if L < 2:
        raise DomainError("the Thouless sum needs at least two roots")
    check_simple(spectrum, config, index=n)
    D = root_differences(spectrum, config)
    value = _thouless_core(_row_without(D, n), np.full(L - 1, math.log(config.J)))
    return LyapunovEstimate(value, LyapunovMethod.THOULESS_SUM, complex(spectrum.eigenvalues[n]))


def lambda_thouless_all(spectrum: ComplexSpectrum, config: LatticeConfig) -> np.ndarray:
    check_simple(spectrum, config)
    L = len(spectrum)
    D = root_differences(spectrum, config)
    hop = np.full(L - 1, math.log(config.J))
    return np.array([_thouless_core(_row_without(D, n), hop) for n in range(L)])


def lambda_closed(config: LatticeConfig) -> LyapunovEstimate:
    """log(V0/J), the energy-independent exponent of the insulating phase."""
    if config.V0 <= config.J:
        raise NotLocalizedError(f"V0/J = {config.V0 / config.J:g} <= 1: states are extended")
    return LyapunovEstimate(math.log(config.V0 / config.J), LyapunovMethod.CLOSED_FORM_LOCALIZED)


def generalized_thouless(chain: TridiagonalChain, spectrum: ComplexSpectrum | Sequence[complex],
                         n: int) -> LyapunovEstimate:
    """(1/L) sum_{beta != n} log|E_n - E_beta| - (1/L) sum_{k=1}^{L-1} log|t_k|.

    Valid for nearest-neighbour chains whose hoppings have equal moduli
    |rho_k| = |t_k| (no skin effect); the spectrum is that of the chain itself.
    """
    if not chain.has_balanced_moduli():
        raise SkinEffectError("|rho_k| != |t_k|: the Thouless relation is not established")
    if chain.corner is not None and not np.isclose(abs(chain.corner[0]), abs(chain.corner[1]), rtol=1e-12):
        raise SkinEffectError("the closing bond has |rho| != |t|")
    E = spectrum.eigenvalues if isinstance(spectrum, ComplexSpectrum) else np.asarray(spectrum, dtype=complex)
    if len(E) != chain.L:
        raise DomainError("spectrum size does not match the chain")
    diffs = np.delete(E[n] - E, n)
    scale = max(1.0, float(np.max(np.abs(E))))
    if np.any(np.abs(diffs) <= 1e-12 * scale):
        raise MultiplicityError(f"root {n} is degenerate")
    return LyapunovEstimate(_thouless_core(diffs, np.log(np.abs(chain.t))), LyapunovMethod.GENERALIZED_THOULESS,
                            complex(E[n]))


# ---------------------------------------------------------------------------
# decay regression


@dataclass(frozen=True)
class DecayProfile:
    """log|psi_n| together with each site's distance from the peak."""

    log_abs: np.ndarray
    distance: np.ndarray
    peak: int


def fit_decay(profile: DecayProfile, exclude_near: float = 0.1, exclude_far: float = 0.1,
              min_sites: int = 10):
    """Least-squares slope of log|psi| against distance over the trimmed window.

    Sites are ranked by distance from the peak; the nearest ``exclude_near``
    and farthest ``exclude_far`` fractions (by count) are dropped.
    Returns ``(lambda, stderr, n_sites)`` with lambda = -slope.
    """
    L = profile.log_abs.size
    order = np.argsort(profile.distance, kind="stable")
    lo = int(math.floor(exclude_near * L))
    hi = L - int(math.floor(exclude_far * L))
    window = order[lo:hi]
    if window.size < min_sites:
        raise ChainTooShortError(f"regression window has {window.size} sites (< {min_sites})")
    fit = stats.linregress(profile.distance[window].astype(float), profile.log_abs[window])
    return -float(fit.slope), float(fit.stderr), int(window.size)


def ring_profile(chain: TridiagonalChain, E: complex, peak: int) -> DecayProfile:
    """Tail-accurate profile of a localized ring eigenvector.

    The ring is cut opposite ``peak`` and the open chain's eigenvector at E is
    built by ratio recursions from both cut ends inward; the amplitude there
    is exponentially small, so the cut perturbs the state only at that level
    while every component keeps full relative accuracy.
    """
    L = chain.L
    start = (peak + L // 2 + 1) % L  # site just past the antipode opens the chain
    tv: TwistedVector = twisted_eigenvector(chain.rotated_open(start), E)
    sites = (start + np.arange(L)) % L
    log_abs = np.empty(L)
    log_abs[sites] = tv.log_abs
    true_peak = int(np.argmax(log_abs))
    d = np.abs(np.arange(L) - true_peak)
    return DecayProfile(log_abs, np.minimum(d, L - d), true_peak)


def open_profile(chain: TridiagonalChain, E: complex) -> DecayProfile:
    """Profile of an open-chain eigenvector, distances measured along the chain."""
    tv = twisted_eigenvector(chain, E)
    peak = int(np.argmax(tv.log_abs))
    return DecayProfile(tv.log_abs, np.abs(np.arange(chain.L) - peak), peak)


def lambda_decay_regression(pair: EigenPair, config: LatticeConfig, exclude_near: float = 0.1,
                            exclude_far: float = 0.1) -> LyapunovEstimate:
    """-slope of log|psi_n| versus ring distance from the peak of |psi|."""
    L = config.L
    if pair.pr_real >= L / 4:
        raise NotLocalizedError(f"participation ratio {pair.pr_real:.1f} >= L/4: state is extended")
    peak = int(np.argmax(np.abs(pair.psi.values)))
    chain = build_real_space(config)
    if chain.periodic:
        profile = ring_profile(chain, pair.energy, peak)
    else:
        profile = open_profile(chain, pair.energy)
    lam, err, _ = fit_decay(profile, exclude_near, exclude_far)
    return LyapunovEstimate(lam, LyapunovMethod.DECAY_REGRESSION, pair.energy, err)


# ---------------------------------------------------------------------------
# residue relation


def _gauge_weights(t: np.ndarray) -> np.ndarray:
    # psi'_n = exp(-i chi_n) psi_n turns rho = conj(t) into a complex-symmetric chain
    chi = np.concatenate(([0.0], -np.cumsum(np.angle(t))))
    return np.exp(-2j * chi)


def residue_relation_check(chain: TridiagonalChain, max_L: int = 8) -> float:
    """Max relative deviation of psi_1 psi_L w_L = prod(t) / prod_{beta != alpha}(E_alpha - E_beta).

    Eigenvectors come from a dense eigensolver and are normalized by the
    bilinear form sum_n w_n psi_n^2 = 1, where w_n = exp(-2 i chi_n) is the gauge
    weight that maps the chain onto a complex-symmetric one (w = 1 for real t,
    where the normalization is the plain sum of squares).
    """
    if chain.corner is not None:
        raise DomainError("the residue relation is stated for open chains")
    L = chain.L
    if L > max_L:
        raise DomainError(f"L = {L} exceeds the dense-check limit {max_L}")
    if not chain.has_balanced_moduli():
        raise SkinEffectError("|rho_k| != |t_k|")
    if not chain.is_conjugate_symmetric():
        raise DomainError("the residue relation needs rho = conj(t)")
    E, vecs = np.linalg.eig(chain.to_dense())
    scale = max(1.0, float(np.max(np.abs(E))))
    D = E[:, None] - E[None, :]
    np.fill_diagonal(D, 1.0)
    if np.any(np.abs(D) <= 1e-12 * scale):
        raise MultiplicityError("spectrum is not simple")
    w = _gauge_weights(chain.t)
    log_prod_t = np.sum(np.log(chain.t.astype(complex))) if L > 1 else 0.0
    worst = 0.0
    for a in range(L):
        psi = vecs[:, a]
        norm = np.sum(w * psi * psi)
        if abs(norm) <= 1e-10 * np.sum(np.abs(psi) ** 2):
            raise MultiplicityError("self-orthogonal eigenvector: matrix is (nearly) defective")
        lhs = psi[0] * psi[-1] * w[-1] / norm
        rhs = np.exp(log_prod_t - np.sum(np.log(D[a])))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return float(worst)
