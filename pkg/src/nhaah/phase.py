"""Phase classification, ellipse law, density of states and the PT-breaking sweep."""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .charpoly import ComplexSpectrum, eigenpairs, solve_spectrum
from .errors import DomainError, WrongPhaseError
from .lattice import LatticeConfig


class Phase(str, enum.Enum):
    METALLIC = "Metallic"
    INSULATING = "Insulating"
    CRITICAL = "Critical"


def default_tau_pt(config: LatticeConfig) -> float:
    """PT threshold J/L.

    On a ring of L = q sites the largest |Im E| is ~1e-23 J at V0 = J/2, about
    1.9 J/L exactly at V0 = J and V0 - J^2/V0 deep in the insulating phase,
    so J/L separates the two phases at every size while sitting just below the
    critical value.
    """
    return config.J / config.L


@dataclass(frozen=True)
class PhaseReport:
    v0_over_j: float
    max_im: float
    phase: Phase
    ellipse_residual_max: float
    dos_chi2: float
    pr_real_median: float
    pr_momentum_median: float
    tau_pt: float
    L: int


def _max_im(spectrum: ComplexSpectrum) -> float:
    return float(np.max(np.abs(spectrum.eigenvalues.imag), initial=0.0))


def ellipse_axes(config: LatticeConfig) -> tuple[float, float]:
    """Semi-axes (V0 + J^2/V0, V0 - J^2/V0) of the insulating-phase ellipse."""
    if config.V0 <= 0:
        raise DomainError("ellipse needs V0 > 0")
    J, V0 = config.J, config.V0
    return V0 + J * J / V0, V0 - J * J / V0


def ellipse_residuals(spectrum: ComplexSpectrum, config: LatticeConfig) -> np.ndarray:
    """(Re E / a)^2 + (Im E / b)^2 - 1 for every eigenvalue."""
    a, b = ellipse_axes(config)
    if b == 0:
        raise DomainError("V0 = J: the ellipse degenerates to the segment [-2J, 2J]")
    E = spectrum.eigenvalues
    return (E.real / a) ** 2 + (E.imag / b) ** 2 - 1.0


@dataclass(frozen=True)
class DosCheck:
    statistic: float
    observed: np.ndarray
    expected: np.ndarray
    edges: np.ndarray

    @property
    def bound(self) -> float:
        return 2.0 * len(self.observed)


def _require_real(spectrum: ComplexSpectrum, config: LatticeConfig, tau_pt: Optional[float]) -> None:
    tau = default_tau_pt(config) if tau_pt is None else tau_pt
    if _max_im(spectrum) >= tau:
        raise WrongPhaseError(f"spectrum is complex (max |Im E| = {_max_im(spectrum):.3g} >= {tau:.3g})")


def dos_cdf(E: np.ndarray, J: float) -> np.ndarray:
    """Fraction of states below E for rho(E) = (1/pi)(4J^2 - E^2)^(-1/2)."""
    return 1.0 - np.arccos(np.clip(np.asarray(E) / (2.0 * J), -1.0, 1.0)) / np.pi


def dos_check(spectrum: ComplexSpectrum, config: LatticeConfig, bins: int = 12,
              tau_pt: Optional[float] = None) -> DosCheck:
    """Chi-square of the Re E histogram against the free-ring density of states.

    ``bins`` equal cells cover [-2J, 2J]; each outermost cell is merged into
    its neighbour, so the inverse-square-root edge peaks never stand alone.
    Expected counts are L times CDF differences.
    """
    if bins < 3:
        raise DomainError("need at least 3 bins")
    _require_real(spectrum, config, tau_pt)
    J, L = config.J, len(spectrum)
    edges = np.linspace(-2 * J, 2 * J, bins + 1)
    edges = np.concatenate(([edges[0]], edges[2:-2], [edges[-1]]))
    x = np.clip(spectrum.eigenvalues.real, -2 * J, 2 * J)
    observed, _ = np.histogram(x, bins=edges)
    expected = L * np.diff(dos_cdf(edges, J))
    stat = float(np.sum((observed - expected) ** 2 / expected))
    return DosCheck(stat, observed, expected, edges)


def gapless_check(spectrum: ComplexSpectrum, config: LatticeConfig, tau_pt: Optional[float] = None) -> float:
    """Largest gap between consecutive q0 = arccos(Re E / 2J) values.

    The metallic spectrum is uniform in q0 with spacing 2 pi / L, so the
    result is measured against that scale rather than in energy, where the
    cosine map stretches spacings at the band edges.
    """
    _require_real(spectrum, config, tau_pt)
    q0 = np.sort(np.arccos(np.clip(spectrum.eigenvalues.real / (2 * config.J), -1.0, 1.0)))
    return float(np.max(np.diff(q0), initial=0.0))


def classify_phase(spectrum: ComplexSpectrum, config: LatticeConfig, tau_pt: Optional[float] = None,
                   with_eigenvectors: bool = True, critical: Optional[bool] = None) -> PhaseReport:
    """Metallic if max |Im E| < tau_pt (default J/L), else Insulating.

    ``critical`` overrides the label with Critical (the sweep sets it for the
    grid point nearest V0 = J); by default only V0 == J is labelled Critical.
    """
    tau = default_tau_pt(config) if tau_pt is None else tau_pt
    max_im = _max_im(spectrum)
    phase = Phase.METALLIC if max_im < tau else Phase.INSULATING
    if critical if critical is not None else config.V0 == config.J:
        phase = Phase.CRITICAL
    ell = math.nan
    if config.V0 > config.J:
        ell = float(np.max(np.abs(ellipse_residuals(spectrum, config))))
    chi2 = math.nan
    if max_im < tau:
        chi2 = dos_check(spectrum, config, tau_pt=tau).statistic
    pr_r = pr_m = math.nan
    if with_eigenvectors and spectrum.anchored:
        pairs = eigenpairs(spectrum, config)
        pr_r = float(np.median([p.pr_real for p in pairs]))
        pr_m = float(np.median([p.pr_momentum for p in pairs]))
    return PhaseReport(config.V0 / config.J, max_im, phase, ell, chi2, pr_r, pr_m, tau, config.L)


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepResult:
    reports: list[PhaseReport]
    bracket: Optional[tuple[float, float]]
    note: str = ""
    duplicates: tuple[float, ...] = field(default=())

    @property
    def critical_estimate(self) -> Optional[float]:
        return None if self.bracket is None else 0.5 * (self.bracket[0] + self.bracket[1])


def _sweep_point(args) -> PhaseReport:
    config, tau, critical, with_eigenvectors = args
    return classify_phase(solve_spectrum(config), config, tau, with_eigenvectors, critical)


def normalize_grid(v0_grid: Sequence[float]) -> tuple[list[float], tuple[float, ...]]:
    """Sorted unique grid and the values that were dropped as duplicates."""
    grid = sorted(float(v) for v in v0_grid)
    if not grid:
        raise DomainError("empty V0 grid")
    if any(v <= 0 or not math.isfinite(v) for v in grid):
        raise DomainError("V0 grid values must be positive")
    unique = sorted(set(grid))
    dropped = list(grid)
    for v in unique:
        dropped.remove(v)
    return unique, tuple(dropped)


def transition_sweep(template: LatticeConfig, v0_grid: Sequence[float], tau_pt: Optional[float] = None,
                     workers: int = 1, with_eigenvectors: bool = True) -> SweepResult:
    """Classify every grid point and bracket the first crossing of tau_pt.

    Points are solved independently (in a process pool when ``workers > 1``)
    and aggregated in ascending V0 order, so the result does not depend on
    scheduling.  The grid point within half a step of V0 = J is labelled
    Critical.
    """
    grid, dropped = normalize_grid(v0_grid)
    if dropped:
        warnings.warn(f"duplicate V0 values removed from the grid: {list(dropped)}", stacklevel=2)
    J = template.J
    tau = default_tau_pt(template) if tau_pt is None else tau_pt
    step = min(np.diff(grid)) if len(grid) > 1 else 0.0
    jobs = []
    for v in grid:
        crit = abs(v - J) <= step / 2 if step > 0 else v == J
        jobs.append((template.replace(V0=v), tau, crit, with_eigenvectors))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_sweep_point, jobs))
    else:
        reports = [_sweep_point(j) for j in jobs]
    bracket = None
    for lo, hi in zip(reports[:-1], reports[1:]):
        if lo.max_im < tau <= hi.max_im:
            bracket = (lo.v0_over_j * J, hi.v0_over_j * J)
            break
    if bracket is None:
        note = "no transition: the grid does not bracket a crossing of the PT threshold"
    else:
        note = f"critical V0 in ({bracket[0]:g}, {bracket[1]:g}), midpoint {0.5 * (bracket[0] + bracket[1]):g}"
    return SweepResult(reports, bracket, note, dropped)
