import json
import math

import numpy as np
import pytest

from nhaah import __version__
from nhaah.cli import EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION, main
from nhaah.errors import ConfigError
from nhaah.io import format_value, load_config, parse_config, read_csv, write_csv
from nhaah.lattice import INVERSE_GOLDEN_MEAN

FIG1 = {"J": 1.0, "V0": 0.5, "p": 89, "q": 144, "L": 144}


def write_config(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def table(path):
    cols, rows = read_csv(path)
    return cols, np.array([[float(x) for x in r] for r in rows]) if rows else np.zeros((0, len(cols)))


# --- configuration -------------------------------------------------------------

@pytest.mark.parametrize("field", ["J", "V0", "p", "q"])
def test_missing_field_is_named(field):
    doc = dict(FIG1)
    del doc[field]
    with pytest.raises(ConfigError, match=field):
        parse_config(doc)


def test_unknown_keys_are_errors():
    with pytest.raises(ConfigError, match="V_0"):
        parse_config({**FIG1, "V_0": 0.5})


@pytest.mark.parametrize("doc", [{**FIG1, "p": 1.5}, {**FIG1, "boundary": "open"}, {**FIG1, "methods": ["x"]},
                                 {**FIG1, "v0_grid": "0.5"}, {**FIG1, "J": True}, [1, 2]])
def test_bad_values(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_alpha_names_and_canonical_json():
    run = parse_config({**FIG1, "alpha": "inverse golden mean"})
    assert run.model.alpha == INVERSE_GOLDEN_MEAN
    js = run.canonical_json()
    assert "\n" not in js and json.loads(js)["q"] == 144
    assert list(json.loads(js)) == sorted(json.loads(js))


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)


# --- serialization ---------------------------------------------------------------

def test_format_value_round_trip():
    rng = np.random.default_rng(0)
    xs = np.concatenate([rng.normal(size=200) * 10.0 ** rng.integers(-300, 300, 200), [0.1, 1 / 3, 5e-324]])
    for x in xs:
        assert float(format_value(float(x))) == x
    assert format_value(np.float64(0.5)) == "0.5"
    assert format_value(math.nan) == "nan" and format_value(-math.inf) == "-inf"
    assert format_value(True) == "true" and format_value(7) == "7"


def test_write_csv_header_and_round_trip(tmp_path):
    run = parse_config(FIG1)
    vals = [math.pi, -1e-300, 2.0 / 3]
    path = write_csv(tmp_path / "x.csv", ("a", "b"), [(i, v) for i, v in enumerate(vals)], run, ["note: n"],
                     ["footer"])
    lines = path.read_text().splitlines()
    assert lines[0] == f"# nhaah {__version__}"
    assert lines[1] == f"# config: {run.canonical_json()}"
    assert lines[2] == "# note: n" and lines[-1] == "# footer"
    cols, rows = read_csv(path)
    assert cols == ["a", "b"] and [float(r[1]) for r in rows] == vals


# --- commands ----------------------------------------------------------------------

def test_spectrum_fig1(tmp_path):
    cfg = write_config(tmp_path, FIG1)
    assert main(["spectrum", "--config", str(cfg), "--out-dir", str(tmp_path / "out")]) == EXIT_OK
    cols, data = table(tmp_path / "out" / "spectrum.csv")
    assert cols == ["index", "re_e", "im_e", "residual", "pr_real", "pr_momentum"]
    assert data.shape == (144, 6) and np.max(np.abs(data[:, 2])) < 1e-6
    for name in ("reference.csv", "spectrum_plot.txt", "pr_plot.txt"):
        text = (tmp_path / "out" / name).read_text()
        assert text.startswith(f"# nhaah {__version__}\n# config: ")


def test_spectrum_fig2_on_ellipse(tmp_path):
    cfg = write_config(tmp_path, {**FIG1, "V0": 1.5})
    assert main(["spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    _, data = table(tmp_path / "spectrum.csv")
    a, b = 1.5 + 1 / 1.5, 1.5 - 1 / 1.5
    assert data.shape[0] == 144
    assert np.max(np.abs((data[:, 1] / a) ** 2 + (data[:, 2] / b) ** 2 - 1)) < 0.05


def test_spectrum_free_ring_equals_reference(tmp_path):
    cfg = write_config(tmp_path, {**FIG1, "V0": 0.0})
    assert main(["spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    _, spec = table(tmp_path / "spectrum.csv")
    _, ref = table(tmp_path / "reference.csv")
    a = np.sort_complex(spec[:, 1] + 1j * spec[:, 2])
    b = np.sort_complex(ref[:, 1] + 1j * ref[:, 2])
    assert np.max(np.abs(a - b)) < 1e-12


def test_byte_determinism_and_seed(tmp_path):
    cfg = write_config(tmp_path, {**FIG1, "V0": 1.5, "jitter_seed": 3})
    for d in ("a", "b"):
        assert main(["spectrum", "--config", str(cfg), "--out-dir", str(tmp_path / d)]) == EXIT_OK
    for name in ("spectrum.csv", "reference.csv", "spectrum_plot.txt", "pr_plot.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert main(["spectrum", "--config", str(cfg), "--out-dir", str(tmp_path / "c"), "--seed", "4"]) == EXIT_OK
    assert '"jitter_seed":4' in (tmp_path / "c" / "spectrum.csv").read_text().splitlines()[1]


def test_lyapunov_insulating(tmp_path):
    cfg = write_config(tmp_path, {**FIG1, "V0": 1.5})
    assert main(["lyapunov", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    cols, data = table(tmp_path / "lyapunov.csv")
    assert cols == ["index", "re_e", "im_e", "lambda_thouless", "lambda_regression", "lambda_closed", "stderr"]
    assert np.all(np.abs(data[:, 4] - math.log(1.5)) < 0.05)
    assert np.all(data[:, 5] == math.log(1.5))
    # the finite-size Thouless sum sits above log 1.5 by (1/L) log|s(E)|; see the acceptance suite
    assert np.all(np.abs(data[:, 3] - math.log(1.5)) < 0.05)


def test_lyapunov_metallic_thouless_only(tmp_path):
    cfg = write_config(tmp_path, {**FIG1, "methods": ["thouless"]})
    assert main(["lyapunov", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    _, data = table(tmp_path / "lyapunov.csv")
    assert np.all(np.isfinite(data[:, 3])) and np.all(np.isnan(data[:, 4:6]))


def test_sweep_command(tmp_path, capsys):
    grid = [round(0.8 + 0.05 * i, 2) for i in range(9)]
    cfg = write_config(tmp_path, {**FIG1, "V0": 1.0, "v0_grid": grid})
    assert main(["sweep", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / "phases.csv").read_text()
    assert "# bracket: critical V0 in (0.95, 1)" in text
    cfg = write_config(tmp_path, {**FIG1, "v0_grid": [0.5, 0.5]}, "dup.json")
    assert main(["sweep", "--config", str(cfg), "--out-dir", str(tmp_path / "d")]) == EXIT_OK
    assert "duplicate" in capsys.readouterr().err
    text = (tmp_path / "d" / "phases.csv").read_text()
    _, rows = read_csv(tmp_path / "d" / "phases.csv")
    assert len(rows) == 1 and rows[0][3] == "Metallic" and "no transition" in text


def test_env_overrides(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, {**FIG1, "q": 55, "p": 34, "L": 55, "v0_grid": [0.5, 1.5]})
    monkeypatch.setenv("NHAAH_OUT_DIR", str(tmp_path / "env"))
    monkeypatch.setenv("NHAAH_WORKERS", "2")
    assert main(["sweep", "--config", str(cfg)]) == EXIT_OK
    assert (tmp_path / "env" / "phases.csv").exists()
    monkeypatch.setenv("NHAAH_WORKERS", "two")
    assert main(["sweep", "--config", str(cfg)]) == EXIT_CONFIG


@pytest.mark.parametrize("args", [["spectrum"], ["sweep", "--config", "{cfg}"], ["spectrum", "--config", "{bad}"],
                                  ["spectrum", "--config", "{cfg}", "--seed", "-1"],
                                  ["sweep", "--config", "{cfg}", "--workers", "0"]])
def test_config_exit_code(tmp_path, args):
    cfg = write_config(tmp_path, FIG1)
    bad = write_config(tmp_path, {**FIG1, "colour": 1}, "bad.json")
    argv = [a.format(cfg=cfg, bad=bad) for a in args]
    assert main(argv + ["--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_validate_and_negative_control(tmp_path, capsys):
    assert main(["validate", "--out-dir", str(tmp_path)]) == EXIT_OK
    first = (tmp_path / "validate.txt").read_bytes()
    assert b"FAIL" not in first and first.startswith(b"# nhaah ")
    capsys.readouterr()
    assert main(["validate", "--no-branch-reflection"]) == EXIT_VALIDATION
    out = capsys.readouterr().out
    assert "FAIL  Q(E) closed form vs quadrature" in out
