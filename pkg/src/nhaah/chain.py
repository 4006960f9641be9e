"""Determinants, spectra and eigenvector profiles of general tridiagonal chains.

These routines never use the closed-form characteristic polynomial of the AAH
model; they work from the matrix entries alone and serve both as the
independent determinant oracle and as the spectral solver for arbitrary
chains (open or closed into a ring).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError
from .lattice import TridiagonalChain

_BIG = 1e100
_SMALL = 1e-100


def _continuant(V: np.ndarray, c: np.ndarray, z: np.ndarray):
    """Leading principal minors of (z - H) for an open chain, with z-derivative.

    Returns mantissas (f, g), the log-scale shared by both, and the two terms
    of the last recurrence step (for residual scaling).  ``c[n] = t[n]*rho[n]``.
    """
    z = np.asarray(z, dtype=complex)
    f_prev = np.zeros_like(z)
    f = np.ones_like(z)
    g_prev = np.zeros_like(z)
    g = np.zeros_like(z)
    logscale = np.zeros(z.shape)
    last = (np.zeros(z.shape), np.zeros(z.shape))
    for n in range(len(V)):
        a = z - V[n]
        cn = c[n - 1] if n > 0 else 0.0
        t1, t2 = a * f, cn * f_prev
        f_new = t1 - t2
        g_new = f + a * g - cn * g_prev
        f_prev, f, g_prev, g = f, f_new, g, g_new
        last = (np.abs(t1), np.abs(t2))
        m = np.maximum(np.abs(f), np.abs(f_prev))
        rescale = (m > _BIG) | ((m < _SMALL) & (m > 0))
        if np.any(rescale):
            k = np.where(rescale, m, 1.0)
            f, f_prev, g, g_prev = f / k, f_prev / k, g / k, g_prev / k
            last = (last[0] / k, last[1] / k)
            logscale = logscale + np.log(k)
    return f, g, logscale, last[0] + last[1]


@dataclass(frozen=True)
class _ScaledDet:
    det: np.ndarray        # mantissa of det(z - H)
    deriv: np.ndarray      # mantissa of d/dz det(z - H), same scale
    logscale: np.ndarray
    magnitude: np.ndarray  # sum of |terms| in the final combination, same scale


def _scaled_determinant(chain: TridiagonalChain, z) -> _ScaledDet:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    c = chain.t * chain.rho
    F, G, s1, mag1 = _continuant(chain.V, c, z)
    if chain.corner is None:
        return _ScaledDet(F, G, s1, mag1)
    tw, rw = chain.corner
    L = chain.L
    if L > 2:
        F2, G2, s2, _ = _continuant(chain.V[1:-1], c[1:-1], z)
    else:
        F2, G2, s2 = np.ones_like(z), np.zeros_like(z), np.zeros(z.shape)
    # products of all hoppings around the ring, in log form
    with np.errstate(divide="ignore"):
        log_pt = np.sum(np.log(np.append(chain.t, tw).astype(complex)))
        log_pr = np.sum(np.log(np.append(chain.rho, rw).astype(complex)))
    ref = np.maximum(s1, s2)
    for lp in (log_pt, log_pr):
        if np.isfinite(lp.real):
            ref = np.maximum(ref, lp.real)
    e1, e2 = np.exp(s1 - ref), np.exp(s2 - ref)
    k_t = np.exp(log_pt - ref) if np.isfinite(log_pt.real) else 0.0
    k_r = np.exp(log_pr - ref) if np.isfinite(log_pr.real) else 0.0
    tr = tw * rw
    det = F * e1 - tr * F2 * e2 - k_t - k_r
    deriv = G * e1 - tr * G2 * e2
    mag = np.abs(F) * e1 + np.abs(tr * F2) * e2 + np.abs(k_t) + np.abs(k_r)
    return _ScaledDet(det, deriv, ref, mag)


def chain_determinant(chain: TridiagonalChain, E):
    """det(E - H) by the three-term continuant plus ring corrections.

    For a ring: det = D(1..L) - t_w rho_w D(2..L-1) - prod(t) - prod(rho), where
    the products run over all L bonds.  Scalar in, scalar out.
    """
    sd = _scaled_determinant(chain, E)
    with np.errstate(over="ignore"):
        out = sd.det * np.exp(sd.logscale)
    return complex(out[0]) if np.ndim(E) == 0 else out


def chain_scaled_residual(chain: TridiagonalChain, E) -> np.ndarray:
    """Backward-error style residual of det(E - H) = 0.

    The smaller of two certificates: |det| relative to the terms that cancel in
    the last recurrence step, and the Newton correction |det/det'| relative to
    the spectral scale.  The first is reliable at multiple roots, the second
    when the continuant itself has cancelled internally.
    """
    sd = _scaled_determinant(chain, E)
    scale = max(gershgorin_radius(chain), 1e-300)
    with np.errstate(invalid="ignore", divide="ignore"):
        by_terms = np.abs(sd.det) / sd.magnitude
        by_step = np.abs(sd.det / sd.deriv) / scale
    return np.fmin(by_terms, by_step)


def _inverse_newton(chain: TridiagonalChain, z: np.ndarray) -> np.ndarray:
    sd = _scaled_determinant(chain, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        return sd.deriv / sd.det


def gershgorin_radius(chain: TridiagonalChain) -> float:
    """Largest absolute row sum; every eigenvalue lies in the disk of this radius."""
    return float(np.max(np.sum(np.abs(chain.to_dense()), axis=1)))


def _jittered_circle(L: int, radius: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    jitter = 1e-3 * (rng.uniform(-1, 1, L) + 1j * rng.uniform(-1, 1, L))
    angles = 2 * np.pi * (np.arange(L) + 0.5) / L
    return radius * np.exp(1j * angles) * (1 + jitter)


def aberth_sum(z: np.ndarray) -> np.ndarray:
    """sum_{j != i} 1/(z_i - z_j) for every i."""
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)
    return inv.sum(axis=1)


def solve_chain_spectrum(chain: TridiagonalChain, seed: int = 0, max_sweeps: int = 500, rtol: float = 1e-13):
    """All eigenvalues of an arbitrary chain by Aberth-Ehrlich on det(E - H).

    Returns a :class:`~nhaah.charpoly.ComplexSpectrum` with method
    ``DeterminantOracle``.
    """
    from .charpoly import ComplexSpectrum, SpectrumMethod

    L = chain.L
    hop = max(float(np.max(np.abs(chain.t), initial=0.0)), float(np.max(np.abs(chain.rho), initial=0.0)), 1e-300)
    bound = gershgorin_radius(chain)
    z = _jittered_circle(L, bound + 0.5 * hop, seed)
    tol = rtol * max(bound, hop)
    floor = 4 * L * np.finfo(float).eps
    converged = np.zeros(L, dtype=bool)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        inv_n = _inverse_newton(chain, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = 1.0 / (inv_n - aberth_sum(z))
        w = np.where(np.isfinite(inv_n), w, 0.0)  # exact zero of det
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        # multiple roots converge only linearly in the step; accept them once
        # the determinant itself sits at the rounding floor of its terms
        converged = (np.abs(w) <= tol) | (chain_scaled_residual(chain, z) <= floor)
        if converged.all():
            break
    residuals = chain_scaled_residual(chain, z)
    if not converged.all():
        worst = int(np.argmax(np.where(converged, -np.inf, residuals)))
        raise NonConvergenceError("Aberth iteration on the chain determinant did not converge",
                                  float(residuals[worst]), worst, sweeps)
    return ComplexSpectrum(eigenvalues=z, residuals=residuals, iterations=sweeps,
                           method=SpectrumMethod.DETERMINANT_ORACLE)


@dataclass(frozen=True)
class TwistedVector:
    """Eigenvector of an open chain in log-modulus/phase form.

    ``log_abs[n] = log|psi_n|`` with ``psi_twist = 1``.  Built from ratio
    recursions that run from both ends towards the twist site, so decaying
    tails keep full relative accuracy far below machine epsilon of the peak.
    """

    log_abs: np.ndarray
    phase: np.ndarray
    twist: int
    gamma: complex

    def normalized(self) -> np.ndarray:
        la = self.log_abs - self.log_abs.max()
        psi = np.exp(la + 1j * self.phase)
        return psi / np.linalg.norm(psi)


def twisted_eigenvector(chain: TridiagonalChain, E: complex) -> TwistedVector:
    """Eigenvector of an open chain at a (converged) eigenvalue E.

    x_n = psi_n/psi_{n+1} is eliminated from the left end, y_n = psi_n/psi_{n-1}
    from the right end; the twist site minimises the mismatch gamma of its own
    row, which is the only row not satisfied exactly.
    """
    if chain.corner is not None:
        raise ValueError("twisted_eigenvector needs an open chain; cut the ring first")
    L = chain.L
    t, rho, V = chain.t, chain.rho, chain.V
    tiny = np.finfo(float).eps * max(1.0, float(np.max(np.abs(V))), float(np.max(np.abs(t), initial=0.0)))
    x = np.zeros(L, dtype=complex)  # x[n] for n < L-1
    acc = 0.0 + 0.0j
    for n in range(L - 1):
        den = V[n] - E + acc
        if den == 0:
            den = tiny
        x[n] = -t[n] / den
        acc = rho[n] * x[n]
    y = np.zeros(L, dtype=complex)  # y[n] for n > 0
    acc = 0.0 + 0.0j
    for n in range(L - 1, 0, -1):
        den = V[n] - E + acc
        if den == 0:
            den = tiny
        y[n] = -rho[n - 1] / den
        acc = t[n - 1] * y[n]
    gamma = V - E
    gamma[1:] += rho * x[:-1]
    gamma[:-1] += t * y[1:]
    m = int(np.argmin(np.abs(gamma)))
    with np.errstate(divide="ignore"):
        lx, ly = np.log(x.astype(complex)), np.log(y.astype(complex))
    logpsi = np.zeros(L, dtype=complex)
    for n in range(m - 1, -1, -1):
        logpsi[n] = logpsi[n + 1] + lx[n]
    for n in range(m + 1, L):
        logpsi[n] = logpsi[n - 1] + ly[n]
    return TwistedVector(log_abs=logpsi.real, phase=logpsi.imag, twist=m, gamma=complex(gamma[m]))
