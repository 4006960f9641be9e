"""Built-in invariant suite run by ``nhaah validate``.

Every check uses fixed configurations and fixed random seeds, so the report is
byte-for-byte reproducible.  Two debug knobs exist as negative controls:
disabling the arccos branch reflection, and overriding the PT threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import solve_chain_spectrum
from .charpoly import match_spectra, root_identity_check, solve_spectrum
from .integrals import quadrature_oracle, q_integral_closed, theta_of_energy
from .io import header_lines
from .lattice import (ComplexAmplitudeVector, Direction, LatticeConfig, Space, TridiagonalChain,
                      build_momentum_space, build_real_space, continued_fraction_approximants, fourier_map)
from .lyapunov import mu_localized_closed, residue_relation_check
from .phase import Phase, classify_phase, ellipse_residuals, transition_sweep


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    bound: float
    passed: bool
    relation: str = "<"

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<40s} measured={self.measured:.6e} {self.relation} {self.bound:g}"


def _below(name, measured, bound) -> CheckResult:
    return CheckResult(name, float(measured), float(bound), bool(measured < bound))


def _off_cut_points(n: int, seed: int, margin: float = 0.1, radius: float = 6.0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        E = complex(rng.uniform(-radius, radius), rng.uniform(-radius, radius))
        if abs(E.imag) >= margin or abs(E.real) >= 2 + margin:
            out.append(E)
    return out


def run_checks(reflect: bool = True, tau_pt: Optional[float] = None) -> list[CheckResult]:
    results: list[CheckResult] = []
    add = results.append

    cf = continued_fraction_approximants("inverse golden mean", 12)
    add(CheckResult("golden convergents contain 89/144", float((89, 144) in cf), 1.0, (89, 144) in cf, "=="))

    c144 = LatticeConfig.golden(144, V0=1.5)
    rng = np.random.default_rng(11)
    v = rng.normal(size=144) + 1j * rng.normal(size=144)
    back = fourier_map(fourier_map(ComplexAmplitudeVector(v, Space.REAL), c144, Direction.TO_MOMENTUM),
                       c144, Direction.TO_REAL)
    add(_below("fourier round trip", np.max(np.abs(back.values - v)), 1e-12))

    c55 = LatticeConfig.golden(55, V0=1.5)
    aberth = solve_spectrum(c55).eigenvalues
    real_space = solve_chain_spectrum(build_real_space(c55), seed=c55.jitter_seed).eigenvalues
    mom_space = solve_chain_spectrum(build_momentum_space(c55), seed=c55.jitter_seed).eigenvalues
    add(_below("isospectrality real/momentum (L=55)",
               match_spectra(real_space, mom_space, method="optimal").max_distance, 1e-8))
    add(_below("charpoly vs determinant oracle (L=55)",
               match_spectra(aberth, real_space, method="optimal").max_distance, 1e-8))

    spectra = {}
    for V0 in (0.5, 1.5):
        cfg = LatticeConfig.golden(144, V0=V0)
        spectra[V0] = (cfg, solve_spectrum(cfg))
        add(_below(f"root identity V0={V0:g} (L=144)", root_identity_check(spectra[V0][1], cfg), 1e-6))

    cfg, sp = spectra[0.5]
    rep = classify_phase(sp, cfg, tau_pt=tau_pt)
    add(CheckResult("metallic classification V0=0.5 (L=144)", rep.max_im, rep.tau_pt,
                    rep.phase is Phase.METALLIC, "<"))
    L = cfg.L
    free = 2 * np.cos(2 * np.pi * np.arange(1, L + 1) / L)
    add(_below("metallic spectrum vs free ring", match_spectra(sp.eigenvalues, free).max_distance, 1e-3))

    cfg, sp = spectra[1.5]
    rep = classify_phase(sp, cfg, tau_pt=tau_pt, with_eigenvectors=False)
    add(CheckResult("insulating classification V0=1.5 (L=144)", rep.max_im, rep.tau_pt,
                    rep.phase is Phase.INSULATING, ">="))
    add(_below("ellipse residual V0=1.5 (L=144)", np.max(np.abs(ellipse_residuals(sp, cfg))), 0.05))

    res13 = quadrature_oracle("Eq13")
    add(_below("log|cos q| integral vs -2 pi log 2", abs(res13.value.real + 2 * math.pi * math.log(2)), 1e-8))
    worst = 0.0
    for E in _off_cut_points(100, seed=5):
        worst = max(worst, abs(quadrature_oracle("B1", E=E).value - q_integral_closed(E, 1.0, reflect=reflect)))
    add(_below("Q(E) closed form vs quadrature (100 pts)", worst, 1e-9))
    a = quadrature_oracle("Eq12_offset", q0=0.3).value
    b = quadrature_oracle("Eq12_offset", q0=math.pi / 2).value
    add(_below("cos-difference integral q0-independence", abs(a - b), 1e-8))
    worst = 0.0
    h = 1e-5
    for th0 in (0.3 - 0.5j, 2.0 - 0.1j, -1.0 - 1.2j):
        E = lambda th: 2 * np.cos(th)
        d = (q_integral_closed(E(th0 + h), 1.0, reflect) - q_integral_closed(E(th0 - h), 1.0, reflect)) / (2 * h)
        worst = max(worst, abs(d - 1j))
    add(_below("dQ/dtheta = i", worst, 1e-6))
    worst = 0.0
    for E in _off_cut_points(200, seed=9, margin=0.0):
        worst = max(worst, abs(2 * np.cos(theta_of_energy(E, 1.0, reflect).theta) - E) / abs(E))
    add(_below("2J cos(theta(E)) = E", worst, 1e-12))
    cfg = LatticeConfig.golden(144, V0=1.5)
    worst = 0.0
    for k in np.linspace(0.05, 2 * math.pi - 0.05, 100):
        E = 2 * np.cos(k - 1j * math.log(1.5))
        worst = max(worst, abs(mu_localized_closed(E, cfg, reflect=reflect).value))
    add(_below("mu vanishes on the ellipse", worst, 1e-10))

    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        t = rng.uniform(0.5, 1.5, n - 1) * np.exp(2j * np.pi * rng.uniform(size=n - 1))
        V = rng.normal(size=n) + 1j * rng.normal(size=n)
        worst = max(worst, residue_relation_check(TridiagonalChain(t=t, rho=np.conj(t), V=V)))
    add(_below("residue relation (50 random chains)", worst, 1e-8))

    grid = [round(0.80 + 0.05 * i, 10) for i in range(9)]
    sweep = transition_sweep(LatticeConfig.golden(144, V0=1.0), grid, tau_pt=tau_pt, with_eigenvectors=False)
    mid = sweep.critical_estimate
    add(CheckResult("PT transition bracket midpoint (L=144)", math.nan if mid is None else mid, 0.05,
                    mid is not None and abs(mid - 1.0) < 0.05, "|x-1| <"))
    return results


def render_report(results: list[CheckResult]) -> str:
    passed = sum(r.passed for r in results)
    lines = header_lines(None, ["validate: built-in desk-scale configurations"])
    lines += [r.line() for r in results]
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
