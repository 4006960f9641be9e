"""Branch-resolved closed forms of the lattice Green-function integrals.

Q(E) = (1/2pi) int_{-pi}^{pi} log(E - 2J cos k) dk equals i*theta + log J, where
E = 2J cos(theta) with Im(theta) < 0.  The only delicate point is the branch of
arccos, which is fixed here explicitly rather than inherited from a library.
A quadrature oracle evaluates the defining integrals directly for testing.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class BranchedAngle:
    """theta with 2J cos(theta) = E; ``branch_ok`` reports Im(theta) <= 0 (= 0 only on the cut)."""

    theta: complex
    branch_ok: bool
    on_cut: bool = False


def _canonical(E) -> complex:
    # adding +0j turns a signed zero imaginary part into +0.0
    return complex(E) + 0j


def on_cut(E, J: float) -> bool:
    """True for real E in the closed segment [-2J, 2J]."""
    E = _canonical(E)
    return E.imag == 0.0 and abs(E.real) <= 2.0 * J


def theta_of_energy(E, J: float, reflect: bool = True) -> BranchedAngle:
    """Solve 2J cos(theta) = E on the branch Im(theta) <= 0, Re(theta) in (-pi, pi].

    Off the cut theta = -i log(w) with w = z + i sqrt(1 - z) sqrt(1 + z),
    z = E/2J.  The two candidates w and 1/w' (w' the other root of
    w^2 - 2zw + 1) are equal mathematically; the larger-modulus one is formed
    directly to avoid cancellation.  If the principal logarithm lands in the
    upper half plane theta is reflected to -theta.  On the cut the boundary
    value theta = arccos(E/2J) in [0, pi] is returned, i.e. the limit E + i0
    taken inside the Im(theta) < 0 sheet.

    ``reflect=False`` disables the reflection (a negative control for tests).
    """
    if not J > 0:
        raise ValueError("J must be positive")
    E = _canonical(E)
    z = E / (2.0 * J)
    if on_cut(E, J):
        return BranchedAngle(complex(math.acos(max(-1.0, min(1.0, z.real)))), True, True)
    u = 1j * cmath.sqrt(1.0 - z) * cmath.sqrt(1.0 + z)
    a, b = z + u, z - u
    w = a if abs(a) >= abs(b) else 1.0 / b
    theta = -1j * cmath.log(w)
    if reflect and theta.imag > 0:
        theta = -theta
    re = theta.real
    if re <= -math.pi:
        re += 2 * math.pi
    elif re > math.pi:
        re -= 2 * math.pi
    theta = complex(re, theta.imag)
    return BranchedAngle(theta, theta.imag <= 0, False)


def q_integral_closed(E, J: float, reflect: bool = True) -> complex:
    """Q(E) = i*theta + log J.

    On the cut the value is the boundary limit E + i0 of the
    Im(theta) < 0 sheet, whose real part is log J (see :func:`i_integral_closed`).
    """
    th = theta_of_energy(E, J, reflect=reflect).theta
    return 1j * th + math.log(J)


def i_integral_closed(E, J: float, reflect: bool = True) -> float:
    """I(E) = Re Q(E) = log J - Im(theta); exactly log J on the cut."""
    if on_cut(E, J):
        return math.log(J)
    return math.log(J) - theta_of_energy(E, J, reflect=reflect).theta.imag


# ---------------------------------------------------------------------------
# quadrature oracle


class Integrand(str, enum.Enum):
    B1 = "B1"                    # (1/2pi) int log(E - 2J cos k) dk, complex, branch-tracked
    B12 = "B12"                  # (1/2pi) int log|E - 2J cos k| dk
    EQ12_OFFSET = "Eq12_offset"  # (1/2pi) int log((2J/V0)|cos q - cos q0|) dq
    EQ13 = "Eq13"                # int log|cos q| dq


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    nodes: int
    converged: bool


def _periodic_mean(f, tol: float, n0: int = 8192, n_max: int = 1 << 22) -> QuadratureResult:
    # trapezoid rule on a periodic integrand; doubling reuses nothing for clarity
    prev = None
    n = n0
    while True:
        k = -math.pi + 2 * math.pi * np.arange(n) / n
        val = complex(np.mean(f(k)))
        if prev is not None:
            err = abs(val - prev)
            if err <= tol or 2 * n > n_max:
                return QuadratureResult(val, err, n, err <= tol)
        prev = val
        n *= 2


def _branch_tracked_log(E: complex, J: float):
    def f(k):
        g = E - 2.0 * J * np.cos(k) + 0j
        lg = np.log(g)
        # continuous branch along k, anchored to the principal value at k = -pi
        return lg.real + 1j * np.unwrap(lg.imag)

    return f


def _graded_rule(points, order: int, levels: int, ratio: float = 0.5):
    """Composite Gauss-Legendre rule on [-pi, pi], geometrically graded toward ``points``.

    Nodes are returned as (anchor, offset) pairs, node = anchor + offset, where
    the anchor is the singular end of the panel; offsets stay exact however
    close they come to the singularity.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    brk = sorted({-math.pi, math.pi, *[float(p) for p in points if -math.pi <= p <= math.pi]})
    anchors, offsets, weights = [], [], []
    for lo, hi in zip(brk[:-1], brk[1:]):
        mid = 0.5 * (lo + hi)
        for s, e in ((lo, mid), (hi, mid)):
            h = e - s
            edges = [0.0] + [h * ratio ** j for j in range(levels, -1, -1)]
            for a, b in zip(edges[:-1], edges[1:]):
                c, r = 0.5 * (a + b), 0.5 * (b - a)
                offsets.append(c + r * x)
                anchors.append(np.full(order, s))
                weights.append(abs(r) * w)
    return np.concatenate(anchors), np.concatenate(offsets), np.concatenate(weights)


def _log_abs_cos_difference(s, d, q0: float):
    """log|cos(s + d) - cos(q0)| as log 2 + log|sin((q + q0)/2)| + log|sin((q - q0)/2)|."""
    return (math.log(2.0) + np.log(np.abs(np.sin(0.5 * ((s + q0) + d))))
            + np.log(np.abs(np.sin(0.5 * ((s - q0) + d)))))


def _graded_integral(f, points, order: int = 20, levels: int = 45) -> QuadratureResult:
    s, d, w = _graded_rule(points, order, levels)
    val = float(np.sum(w * f(s, d)))
    s2, d2, w2 = _graded_rule(points, order + 10, levels + 5)
    ref = float(np.sum(w2 * f(s2, d2)))
    return QuadratureResult(complex(ref), abs(ref - val), len(d2), True)


def quadrature_oracle(integrand, E: Optional[complex] = None, q0: Optional[float] = None,
                      J: float = 1.0, V0: float = 1.0, tol: float = 1e-12) -> QuadratureResult:
    """Direct numerical value of one of the four reference integrals.

    Smooth periodic integrands use the trapezoid rule from 8192 nodes upward
    until successive doublings agree to ``tol``; the reported ``error`` is the
    last difference.  Log-singular integrands (``Eq13``, ``Eq12_offset`` and
    ``B12`` on the cut) use composite Gauss-Legendre panels graded
    geometrically toward the singular points, which are never sampled; the
    error estimate compares two rules of different order and depth.
    For ``B12`` on the cut, ``E`` may be given directly or as ``q0``.
    """
    integrand = Integrand(integrand)
    if integrand is Integrand.EQ13:
        h = math.pi / 2
        return _graded_integral(lambda s, d: _log_abs_cos_difference(s, d, h), (-h, h))
    if integrand is Integrand.EQ12_OFFSET:
        if q0 is None:
            raise ValueError("Eq12_offset needs q0")
        c = math.log(2.0 * J / V0)
        res = _graded_integral(lambda s, d: c + _log_abs_cos_difference(s, d, q0), (-abs(q0), abs(q0)))
        return QuadratureResult(res.value / (2 * math.pi), res.error / (2 * math.pi), res.nodes, True)
    if E is None:
        if q0 is None:
            raise ValueError(f"{integrand.value} needs E or q0")
        E = 2.0 * J * math.cos(q0)
    E = _canonical(E)
    if integrand is Integrand.B12:
        if on_cut(E, J):
            k0 = math.acos(max(-1.0, min(1.0, E.real / (2 * J))))
            c = math.log(2.0 * J)
            res = _graded_integral(lambda s, d: c + _log_abs_cos_difference(s, d, k0), (-k0, k0))
            return QuadratureResult(res.value / (2 * math.pi), res.error / (2 * math.pi), res.nodes, True)
        return _periodic_mean(lambda k: np.log(np.abs(E - 2.0 * J * np.cos(k))), tol)
    if on_cut(E, J):
        raise ValueError("B1 is defined off the segment [-2J, 2J]; use B12 on the cut")
    return _periodic_mean(_branch_tracked_log(E, J), tol)
