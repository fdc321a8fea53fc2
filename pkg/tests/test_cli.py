import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracfield.cli import main
from fracfield.config import ConfigError, config_to_dict, load_config, parse_config
from fracfield.io import format_value, read_csv, write_csv

SOLVE = {
    "schema_version": 1,
    "seed": 7,
    "backend": {"name": "sphere2", "truncation": 8},
    "problem": {"kind": "heat"},
    "times": [0.0, 0.5, 1.0],
    "initial": {"preset": "band_limited", "degree": 4},
    "grid": 9,
}
FIELD = {
    "schema_version": 1,
    "seed": 3,
    "backend": {"name": "sphere2", "truncation": 16},
    "problem": {"kind": "time_fractional", "beta": 0.5},
    "times": [0.0, 1.0],
    "spectrum": {"amplitude": 1.0, "gamma": 3.0},
    "ensemble": 1000,
    "grid": 9,
}


def run(tmp_path, cfg, command, name="cfg.json"):
    cfg = dict(cfg, output=str(tmp_path / name.replace(".json", "_out")))
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    code = main([command, str(path)])
    return code, tmp_path / name.replace(".json", "_out")


def coeffs(out, i):
    rows = read_csv(out / f"coeffs_t{i:03d}.csv")
    return np.array([r["coef_real"] + 1j * r["coef_imag"] for r in rows])


def test_solve_outputs(tmp_path):
    code, out = run(tmp_path, SOLVE, "solve")
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"eigen.csv", "coeffs_t000.csv", "coeffs_t002.csv", "values.csv", "manifest.json"} <= names
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7 and len(manifest["config_hash"]) == 64
    assert all(len(f["sha256"]) == 64 for f in manifest["files"])
    rows = read_csv(out / "coeffs_t001.csv")
    lam = np.array([r["eigenvalue"] for r in rows])
    np.testing.assert_allclose(coeffs(out, 1), np.exp(-0.5 * lam) * coeffs(out, 0), atol=1e-15)


def test_solve_single_mode_start(tmp_path):
    cfg = dict(SOLVE, initial={"preset": "single_mode", "mode": [2, 1]})
    _, out = run(tmp_path, cfg, "solve")
    c0 = coeffs(out, 0)
    assert c0[2 * 2 + 2 + 1] == 1.0 and np.count_nonzero(c0) == 1


def test_solve_deterministic(tmp_path):
    cfg = dict(SOLVE, problem={"kind": "time_fractional", "beta": 0.5}, mc={"n_paths": 300, "probes": 2})
    _, a = run(tmp_path, cfg, "solve", "a.json")
    _, b = run(tmp_path, cfg, "solve", "b.json")
    for f in sorted(a.glob("*.csv")):
        assert f.read_bytes() == (b / f.name).read_bytes()
    mc = read_csv(a / "mc.csv")
    assert len(mc) == 4 and {"spectral", "mc_mean", "mc_se", "z", "within_3se"} <= set(mc[0])


def test_beta_one_matches_heat(tmp_path):
    _, heat = run(tmp_path, SOLVE, "solve", "heat.json")
    _, frac = run(tmp_path, dict(SOLVE, problem={"kind": "time_fractional", "beta": 1.0}), "solve", "frac.json")
    for i in range(3):
        assert np.max(np.abs(coeffs(heat, i) - coeffs(frac, i))) <= 1e-12


@pytest.mark.parametrize(
    "backend, initial",
    [
        ({"name": "torus2", "truncation": 4}, {"preset": "point_mass", "point": [0.5, -1.0]}),
        ({"name": "torus1", "truncation": 8}, {"preset": "single_mode", "mode": [-3]}),
        ({"name": "interval", "truncation": 16}, {"preset": "band_limited", "degree": 5}),
    ],
)
def test_solve_other_backends(tmp_path, backend, initial):
    cfg = dict(SOLVE, backend=backend, initial=initial, problem={"kind": "space_fractional", "psi": {"kind": "gamma"}})
    code, out = run(tmp_path, cfg, "solve")
    assert code == 0
    assert all(np.isfinite(r["value_real"]) for r in read_csv(out / "values.csv"))


def test_field_outputs(tmp_path):
    code, out = run(tmp_path, FIELD, "field")
    assert code == 0
    base = read_csv(out / "field_base.csv")
    at0 = read_csv(out / "field_t000.csv")
    assert [r["value"] for r in base] == [r["value"] for r in at0]
    spec = read_csv(out / "spectrum.csv")
    low = [r for r in spec if r["t"] == 1.0 and r["degree"] <= 16]
    assert len(low) == 17 and all(r["within_3se"] for r in low)


def test_field_zero_amplitude(tmp_path):
    cfg = dict(FIELD, spectrum={"amplitude": 0.0, "gamma": 3.0})
    _, out = run(tmp_path, cfg, "field")
    assert all(r["value"] == 0.0 for r in read_csv(out / "field_base.csv"))


def test_field_coordinate_changed_table(tmp_path):
    cfg = dict(FIELD, problem={"kind": "space_fractional", "psi": {"kind": "stable", "alpha": 0.5}}, mc={"n_paths": 2000, "probes": 2})
    _, out = run(tmp_path, cfg, "field")
    rows = read_csv(out / "coordinate_changed.csv")
    assert len(rows) == 4 and all(abs(r["z"]) < 4 for r in rows)


def test_field_needs_spectrum_and_ensemble(tmp_path):
    bad = {k: v for k, v in FIELD.items() if k != "spectrum"}
    assert run(tmp_path, bad, "field", "a.json")[0] == 2
    assert run(tmp_path, dict(FIELD, ensemble=10), "field", "b.json")[0] == 2


def test_env_overrides_output(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACFIELD_OUT", str(tmp_path / "env"))
    run(tmp_path, SOLVE, "solve")
    assert (tmp_path / "env" / "manifest.json").exists()


def test_validate_suite(tmp_path, capsys):
    code = main(["validate", "specfun", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "validate_specfun.json").read_text())
    assert report["passed"] and any(c["name"] == "ml_bound_grid" for c in report["checks"])
    assert "[PASS] specfun.ml_bound_grid" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main(["validate", "nonsense"])


def test_config_errors(tmp_path, capsys):
    bad = dict(SOLVE, backend={"name": "sphere2", "bogus": 1})
    assert run(tmp_path, bad, "solve")[0] == 2
    assert "config.backend: unknown keys ['bogus']" in capsys.readouterr().err
    p = tmp_path / "broken.json"
    p.write_text('{"seed": 1,\n  "backend": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(p)
    assert main(["solve", str(tmp_path / "missing.json")]) == 2


@pytest.mark.parametrize(
    "patch, where",
    [
        ({"problem": {"kind": "time_fractional", "beta": 1.5}}, "config.problem.beta"),
        ({"problem": {"kind": "time_fractional", "beta": 0.0}}, "config.problem.beta"),
        ({"spectrum": {"gamma": 2.0}}, "config.spectrum.gamma"),
        ({"mc": {"n_paths": 0}}, "config.mc.n_paths"),
        ({"times": [1.0, 0.5]}, "config.times"),
        ({"schema_version": 2}, "config.schema_version"),
        ({"backend": {"name": "klein"}}, "config.backend.name"),
        ({"problem": {"kind": "space_fractional", "psi": {"kind": "stable", "alpha": 1.2}}}, "alpha"),
    ],
)
def test_range_validation(patch, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_config(dict(SOLVE, **patch))


def test_missing_seed_rejected():
    with pytest.raises(ConfigError, match="missing keys \\['seed'\\]"):
        parse_config({k: v for k, v in SOLVE.items() if k != "seed"})


@pytest.mark.parametrize("cfg", [SOLVE, FIELD, dict(SOLVE, mc={"n_paths": 10}, problem={"kind": "space_fractional", "psi": {"kind": "sum", "terms": [{"weight": 0.5, "psi": {"kind": "gamma"}}]}})])
def test_config_round_trip(cfg):
    once = config_to_dict(parse_config(cfg))
    assert config_to_dict(parse_config(once)) == once


def test_csv_round_trip(tmp_path):
    rows = [{"a": 0.1, "b": 3, "c": True, "d": "x"}, {"a": math.inf, "b": -1, "c": False, "d": "y"}]
    back = read_csv(write_csv(tmp_path / "r.csv", rows))
    assert back == rows
    assert (tmp_path / "r.csv").read_bytes().startswith(b"a,b,c,d\n")


@given(x=st.floats(allow_nan=False))
def test_float_format_round_trips(x):
    assert float(format_value(x)) == x
