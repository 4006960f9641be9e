"""Run configuration (JSON) and deterministic CSV / plot-series output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from . import __version__
from .errors import ConfigError
from .lattice import INVERSE_GOLDEN_MEAN, Boundary, LatticeConfig

MODEL_KEYS = ("J", "V0", "p", "q", "L", "boundary", "jitter_seed", "alpha", "exploratory")
REQUIRED_KEYS = ("J", "V0", "p", "q")
RUN_KEYS = ("n_terms", "bins", "v0_grid", "methods", "tau_pt")
LYAPUNOV_METHODS = ("thouless", "regression", "closed")


@dataclass(frozen=True)
class RunConfig:
    model: LatticeConfig
    n_terms: int = 1_000_000
    bins: int = 12
    v0_grid: tuple[float, ...] = ()
    methods: tuple[str, ...] = LYAPUNOV_METHODS
    tau_pt: Optional[float] = None
    raw: dict = field(default_factory=dict, compare=False)

    def canonical_json(self) -> str:
        """Full configuration as compact JSON with sorted keys (one line)."""
        m = self.model
        doc = {
            "J": m.J, "V0": m.V0, "p": m.p, "q": m.q, "L": m.L, "boundary": m.boundary.value,
            "jitter_seed": m.jitter_seed, "alpha": m.alpha, "exploratory": m.exploratory,
            "n_terms": self.n_terms, "bins": self.bins, "v0_grid": list(self.v0_grid),
            "methods": list(self.methods), "tau_pt": self.tau_pt,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _alpha(value) -> Optional[float]:
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() == "inverse golden mean":
            return INVERSE_GOLDEN_MEAN
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"alpha: cannot parse {value!r}") from None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError("alpha must be a number or 'inverse golden mean'")


def _expect(name: str, value, kinds, what: str):
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"{name} must be {what}")
    if not isinstance(value, kinds):
        raise ConfigError(f"{name} must be {what}")
    return value


def parse_config(doc: Any) -> RunConfig:
    """Validate a decoded JSON document; unknown keys and missing fields are errors."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(doc) - set(MODEL_KEYS) - set(RUN_KEYS))
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}")
    num = (int, float)
    kw = {
        "J": _expect("J", doc["J"], num, "a number"),
        "V0": _expect("V0", doc["V0"], num, "a number"),
        "p": _expect("p", doc["p"], (int,), "an integer"),
        "q": _expect("q", doc["q"], (int,), "an integer"),
    }
    if doc.get("L") is not None:
        kw["L"] = _expect("L", doc["L"], (int,), "an integer")
    if "boundary" in doc:
        try:
            kw["boundary"] = Boundary(doc["boundary"])
        except ValueError:
            raise ConfigError("boundary must be 'PBC' or 'OBC'") from None
    if "jitter_seed" in doc:
        kw["jitter_seed"] = _expect("jitter_seed", doc["jitter_seed"], (int,), "an integer")
    if "exploratory" in doc:
        kw["exploratory"] = _expect("exploratory", doc["exploratory"], (bool,), "a boolean")
    kw["alpha"] = _alpha(doc.get("alpha"))
    model = LatticeConfig(**kw)

    run: dict[str, Any] = {}
    if "n_terms" in doc:
        run["n_terms"] = _expect("n_terms", doc["n_terms"], (int,), "an integer")
    if "bins" in doc:
        run["bins"] = _expect("bins", doc["bins"], (int,), "an integer")
    if "v0_grid" in doc:
        grid = doc["v0_grid"]
        if not isinstance(grid, list) or not all(isinstance(v, num) and not isinstance(v, bool) for v in grid):
            raise ConfigError("v0_grid must be a list of numbers")
        run["v0_grid"] = tuple(float(v) for v in grid)
    if "methods" in doc:
        methods = doc["methods"]
        if not isinstance(methods, list) or any(m not in LYAPUNOV_METHODS for m in methods):
            raise ConfigError(f"methods must be a list drawn from {list(LYAPUNOV_METHODS)}")
        run["methods"] = tuple(methods)
    if doc.get("tau_pt") is not None:
        run["tau_pt"] = float(_expect("tau_pt", doc["tau_pt"], num, "a number"))
    return RunConfig(model=model, raw=dict(doc), **run)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(doc)


# ---------------------------------------------------------------------------
# output


def format_value(x) -> str:
    """17 significant digits for floats (exact round trip), plain text otherwise."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    if hasattr(x, "item"):  # numpy scalar
        return format_value(x.item())
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):  # enum
        return x.value
    return str(x)


def header_lines(run: Optional[RunConfig], extra: Sequence[str] = ()) -> list[str]:
    lines = [f"# nhaah {__version__}"]
    if run is not None:
        lines.append(f"# config: {run.canonical_json()}")
    lines.extend(f"# {e}" for e in extra)
    return lines


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], run: Optional[RunConfig],
              extra_header: Sequence[str] = (), footer: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for line in header_lines(run, extra_header):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
        for line in footer:
            fh.write(f"# {line}\n")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Column names and raw rows, skipping comment lines."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def write_series(path, title: str, x_label: str, y_label: str, series: dict, run: Optional[RunConfig]) -> Path:
    """Plain-text scatter specification: a header, then one block per named x/y series."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for line in header_lines(run, [f"title: {title}", f"x: {x_label}", f"y: {y_label}"]):
            fh.write(line + "\n")
        for name, (xs, ys) in series.items():
            fh.write(f"\n[series {name}]\n")
            for x, y in zip(xs, ys):
                fh.write(f"{format_value(float(x))} {format_value(float(y))}\n")
    return path
