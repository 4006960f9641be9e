"""Command-line interface: ``nhaah spectrum|lyapunov|sweep|validate``.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 validation failure, 1 any other error.  ``NHAAH_OUT_DIR`` and
``NHAAH_WORKERS`` supply defaults for ``--out-dir`` and ``--workers``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .charpoly import eigenpairs, solve_spectrum
from .errors import AAHError, ConfigError, NonConvergenceError, NotLocalizedError
from .io import RunConfig, load_config, write_csv, write_series
from .lyapunov import lambda_closed, lambda_decay_regression, lambda_thouless_all
from .phase import transition_sweep
from .validate import render_report, run_checks

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_VALIDATION = 4


def _sort_key(E: np.ndarray) -> np.ndarray:
    return np.lexsort((np.round(E.imag, 12), np.round(E.real, 12)))


def reference_energies(run: RunConfig) -> np.ndarray:
    """2J cos(k_l) below the transition, 2J cos(k_l - i h) with h = log(V0/J) above it."""
    m = run.model
    k = 2 * np.pi * np.arange(1, m.L + 1) / m.L
    h = math.log(m.V0 / m.J) if m.V0 > m.J else 0.0
    E = 2 * m.J * np.cos(k - 1j * h)
    return E[_sort_key(E)]


def cmd_spectrum(run: RunConfig, out_dir: Path) -> list[Path]:
    m = run.model
    sp = solve_spectrum(m)
    E = sp.eigenvalues
    pairs = eigenpairs(sp, m) if sp.anchored else None
    rows = []
    for i, e in enumerate(E):
        pr_r = pairs[i].pr_real if pairs else math.nan
        pr_m = pairs[i].pr_momentum if pairs else math.nan
        rows.append((i + 1, float(e.real), float(e.imag), float(sp.residuals[i]), pr_r, pr_m))
    out = [write_csv(out_dir / "spectrum.csv", ("index", "re_e", "im_e", "residual", "pr_real", "pr_momentum"),
                     rows, run, [f"method: {sp.method.value}", f"iterations: {sp.iterations}"])]
    ref = reference_energies(run)
    out.append(write_csv(out_dir / "reference.csv", ("index", "re_e", "im_e"),
                         [(i + 1, float(e.real), float(e.imag)) for i, e in enumerate(ref)], run))
    out.append(write_series(out_dir / "spectrum_plot.txt", "complex energy spectrum", "Re E", "Im E",
                            {"computed": (E.real, E.imag), "reference": (ref.real, ref.imag)}, run))
    if pairs:
        out.append(write_series(out_dir / "pr_plot.txt", "participation ratios", "Re E", "PR",
                                {"real space": (E.real, [p.pr_real for p in pairs]),
                                 "momentum space": (E.real, [p.pr_momentum for p in pairs])}, run))
    return out


def cmd_lyapunov(run: RunConfig, out_dir: Path) -> list[Path]:
    m = run.model
    sp = solve_spectrum(m)
    n = len(sp)
    notes = []
    thouless = np.full(n, math.nan)
    if "thouless" in run.methods:
        thouless = lambda_thouless_all(sp, m)
    closed = math.nan
    if "closed" in run.methods:
        try:
            closed = lambda_closed(m).value
        except NotLocalizedError as exc:
            notes.append(f"lambda_closed: {exc}")
    regression = np.full(n, math.nan)
    stderr = np.full(n, math.nan)
    if "regression" in run.methods and sp.anchored:
        skipped = 0
        for i, pair in enumerate(eigenpairs(sp, m)):
            try:
                est = lambda_decay_regression(pair, m)
            except (NotLocalizedError, AAHError):
                skipped += 1
                continue
            regression[i], stderr[i] = est.value, est.stderr
        if skipped:
            notes.append(f"lambda_regression: {skipped} extended or unusable states left as nan")
    E = sp.eigenvalues
    rows = [(i + 1, float(E[i].real), float(E[i].imag), thouless[i], regression[i], closed, stderr[i])
            for i in range(n)]
    out = [write_csv(out_dir / "lyapunov.csv",
                     ("index", "re_e", "im_e", "lambda_thouless", "lambda_regression", "lambda_closed", "stderr"),
                     rows, run, notes)]
    series = {}
    if "thouless" in run.methods:
        series["thouless"] = (E.real, thouless)
    if not np.all(np.isnan(regression)):
        series["regression"] = (E.real, regression)
    if not math.isnan(closed):
        series["closed form"] = (E.real, np.full(n, closed))
    out.append(write_series(out_dir / "lyapunov_plot.txt", "Lyapunov exponent per eigenstate", "Re E", "lambda",
                            series, run))
    return out


def cmd_sweep(run: RunConfig, out_dir: Path, workers: int = 1) -> list[Path]:
    if not run.v0_grid:
        raise ConfigError("sweep needs a non-empty v0_grid")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = transition_sweep(run.model, run.v0_grid, tau_pt=run.tau_pt, workers=workers)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rows = [(r.v0_over_j * run.model.J, r.v0_over_j, r.max_im, r.phase, r.ellipse_residual_max, r.dos_chi2,
             r.pr_real_median, r.pr_momentum_median) for r in result.reports]
    footer = [f"bracket: {result.note}"]
    if result.duplicates:
        footer.append(f"duplicates removed: {', '.join('%.17g' % v for v in result.duplicates)}")
    return [write_csv(out_dir / "phases.csv",
                      ("v0", "v0_over_j", "max_im", "phase", "ellipse_residual_max", "dos_chi2",
                       "pr_real_median", "pr_momentum_median"),
                      rows, run, [f"tau_pt: {'%.17g' % result.reports[0].tau_pt}"], footer)]


def cmd_validate(out_dir: Optional[Path], reflect: bool = True, tau_pt: Optional[float] = None) -> tuple[str, bool]:
    results = run_checks(reflect=reflect, tau_pt=tau_pt)
    report = render_report(results)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "validate.txt").write_text(report)
    return report, all(r.passed for r in results)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nhaah", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=("spectrum", "lyapunov", "sweep", "validate"))
    parser.add_argument("--config", type=Path, help="JSON run configuration (not used by validate)")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default: $NHAAH_OUT_DIR or the current directory)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes for sweep (default: $NHAAH_WORKERS or 1)")
    parser.add_argument("--seed", type=int, default=None, help="override the root-finder jitter seed")
    debug = parser.add_argument_group("validate debug controls")
    debug.add_argument("--no-branch-reflection", action="store_true",
                       help="disable the Im(theta) < 0 reflection (negative control)")
    debug.add_argument("--tau-pt", type=float, default=None, help="override the PT threshold")
    return parser


def _env_int(name: str) -> Optional[int]:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out_dir = args.out_dir
        if out_dir is None and os.environ.get("NHAAH_OUT_DIR"):
            out_dir = Path(os.environ["NHAAH_OUT_DIR"])
        workers = args.workers if args.workers is not None else (_env_int("NHAAH_WORKERS") or 1)
        if workers < 1:
            raise ConfigError("workers must be >= 1")
        if args.command == "validate":
            report, ok = cmd_validate(out_dir, reflect=not args.no_branch_reflection, tau_pt=args.tau_pt)
            sys.stdout.write(report)
            return EXIT_OK if ok else EXIT_VALIDATION
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        run = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            run = RunConfig(model=run.model.replace(jitter_seed=args.seed), n_terms=run.n_terms, bins=run.bins,
                            v0_grid=run.v0_grid, methods=run.methods, tau_pt=run.tau_pt, raw=run.raw)
        out_dir = out_dir if out_dir is not None else Path(".")
        if args.command == "spectrum":
            paths = cmd_spectrum(run, out_dir)
        elif args.command == "lyapunov":
            paths = cmd_lyapunov(run, out_dir)
        else:
            paths = cmd_sweep(run, out_dir, workers)
        for p in paths:
            print(p)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except AAHError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
