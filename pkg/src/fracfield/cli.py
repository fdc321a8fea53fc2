"""Command-line entry point: ``fracfield solve|field|validate``."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, config_to_dict, load_config
from .fields import (
    InverseStable,
    PowerSpectrum,
    Subordinate,
    estimate_spectrum,
    evolve,
    field_grid_rows,
    sample_coordinate_changed_batch,
    shell_model,
    synthesize,
    synthesize_coefficients,
)
from .io import dumps_json, sha256_file, sha256_text, write_csv, write_json
from .manifold import SpectralBackend, SpectralCoefficients, Sphere2, Torus, display_grid, make_backend
from .rng import make_rng
from .subordinate import Drift
from .solver import Heat, SpaceFractional, TimeFractional, mc_solution, multiplier, snapshot_rows, solve


ROUNDOFF = 1e-12


def build_backend(cfg: ExperimentConfig) -> SpectralBackend:
    return make_backend(cfg.backend.name, cfg.backend.truncation, cfg.backend.quadrature)


def build_problem(cfg: ExperimentConfig):
    if cfg.problem.kind == "heat":
        return Heat()
    if cfg.problem.kind == "time_fractional":
        return TimeFractional(cfg.problem.beta)
    return SpaceFractional(cfg.problem.psi)


def build_initial(cfg: ExperimentConfig, backend: SpectralBackend) -> SpectralCoefficients:
    ini = cfg.initial
    if ini is None:
        raise ConfigError("config.initial: required for the solve command")
    if ini.preset == "single_mode":
        try:
            if isinstance(backend, Sphere2):
                if len(ini.mode) != 2:
                    raise ValueError("sphere modes are [l, m]")
                j = backend.index(*ini.mode)
            elif isinstance(backend, Torus):
                j = backend.index(ini.mode)
            else:
                j = backend.index(ini.mode[0])
        except ValueError as exc:
            raise ConfigError(f"config.initial.mode: {exc}") from None
        v = np.zeros(backend.n_modes, dtype=backend.coeff_dtype)
        v[j] = 1.0
        return SpectralCoefficients(backend, v)
    if ini.preset == "point_mass":
        if len(ini.point) != backend.dim:
            raise ConfigError(f"config.initial.point: expected {backend.dim} coordinates")
        v = np.conj(backend.basis(np.array([ini.point]))[0])
        return SpectralCoefficients(backend, v)
    return backend.project(band_limited_function(backend, ini.degree))


def band_limited_function(backend: SpectralBackend, degree: int):
    """Deterministic real test function whose spectrum stops at ``degree``.

    Sphere: a polynomial of that degree in Cartesian coordinates. Torus: a
    trigonometric polynomial over |k| <= degree. Interval: a sine polynomial.
    """
    if isinstance(backend, Sphere2):

        def f(p):
            th, ph = p[:, 0], p[:, 1]
            s = np.sin(th) * np.cos(ph) + 0.5 * np.sin(th) * np.sin(ph) + 0.25 * np.cos(th)
            return sum(s**k / (k + 1) for k in range(degree + 1))

        return f
    if isinstance(backend, Torus):
        ks = backend.wavenumbers[backend.degree <= degree]

        def f(p):
            return sum(np.cos(p @ k + 0.3) / (1.0 + k @ k) for k in ks)

        return f

    def f(p):
        return sum(np.sin(j * p[:, 0]) / j**2 for j in range(1, degree + 1))

    return f


def output_dir(cfg_output: str) -> Path:
    return Path(os.environ.get("FRACFIELD_OUT") or cfg_output)


def _manifest(out: Path, command: str, cfg: ExperimentConfig, files: list[Path], elapsed: float) -> Path:
    manifest = {
        "command": command,
        "config": config_to_dict(cfg),
        "config_hash": sha256_text(dumps_json(config_to_dict(cfg))),
        "tool_version": __version__,
        "seed": cfg.seed,
        "wall_clock_seconds": round(elapsed, 3),
        "files": [{"name": p.name, "sha256": sha256_file(p)} for p in sorted(files)],
    }
    return write_json(out / "manifest.json", manifest)


def cmd_solve(cfg: ExperimentConfig) -> list[Path]:
    start = time.perf_counter()
    backend = build_backend(cfg)
    problem = build_problem(cfg)
    init = build_initial(cfg, backend)
    out = output_dir(cfg.output)
    files = [write_csv(out / "eigen.csv", backend.eigen_table())]
    pts, names = display_grid(backend, cfg.grid)
    value_rows = []
    snapshots = []
    for i, t in enumerate(cfg.times):
        snap = solve(backend, init, problem, t)
        snapshots.append(snap)
        files.append(write_csv(out / f"coeffs_t{i:03d}.csv", snapshot_rows(snap)))
        vals = backend.evaluate(snap.coefficients.values, pts)
        for p, v in zip(pts, vals):
            row = {"t": t}
            row.update({k: float(c) for k, c in zip(names, p)})
            row.update({"value_real": float(np.real(v)), "value_imag": float(np.imag(v)), "regime": snap.regime})
            value_rows.append(row)
    files.append(write_csv(out / "values.csv", value_rows))
    if cfg.mc is not None:
        rng = make_rng(cfg.seed, "solve", "mc")
        probes = backend.random_points(cfg.mc.probes, rng)
        mc_rows = []
        for snap in snapshots:
            if snap.t == 0:
                continue
            spectral = snap.evaluate(probes)
            est = mc_solution(backend, lambda p: np.real(init.evaluate(p)), problem, snap.t, probes, cfg.mc.n_paths, rng)
            for k, p in enumerate(probes):
                z = (est.mean[k] - spectral[k]) / est.se[k] if est.se[k] > 0 else 0.0
                row = {"t": snap.t, "probe": k}
                row.update({n: float(c) for n, c in zip(names, p)})
                row.update(
                    {
                        "spectral": float(spectral[k]),
                        "mc_mean": float(est.mean[k]),
                        "mc_se": float(est.se[k]),
                        "z": float(z),
                        "within_3se": bool(abs(z) <= 3),
                    }
                )
                mc_rows.append(row)
        files.append(write_csv(out / "mc.csv", mc_rows))
    files.append(_manifest(out, "solve", cfg, files, time.perf_counter() - start))
    return files


def cmd_field(cfg: ExperimentConfig) -> list[Path]:
    start = time.perf_counter()
    if cfg.spectrum is None:
        raise ConfigError("config.spectrum: required for the field command")
    if cfg.ensemble < 1000:
        raise ConfigError(f"config.ensemble: spectrum estimation needs at least 1000 draws, got {cfg.ensemble}")
    backend = build_backend(cfg)
    law = build_problem(cfg)
    spectrum = PowerSpectrum.parametric(backend, cfg.spectrum.amplitude, cfg.spectrum.gamma)
    out = output_dir(cfg.output)
    base = synthesize(backend, spectrum, make_rng(cfg.seed, "field", "base"), seed=f"{cfg.seed}/field/base")
    files = [write_csv(out / "field_base.csv", field_grid_rows(backend, base.coefficients, 0.0, cfg.grid))]
    for i, t in enumerate(cfg.times):
        evolved = evolve(base, law, t)
        files.append(write_csv(out / f"field_t{i:03d}.csv", field_grid_rows(backend, evolved.coefficients, t, cfg.grid)))
    draws = synthesize_coefficients(backend, spectrum, make_rng(cfg.seed, "field", "ensemble"), cfg.ensemble)
    lam_shell = np.unique(backend.eigenvalues)
    base_shell = shell_model(backend, spectrum.values)
    rows = []
    for t in cfg.times:
        factor = multiplier(backend, law, t)
        est = estimate_spectrum(draws * factor, backend)
        model = shell_model(backend, spectrum.values * factor**2)
        factor_shell = shell_model(backend, factor**2)
        for s, lam in enumerate(lam_shell):
            se = est.degree_se[s]
            diff = est.degree_mean[s] - model[s]
            z = diff / se if se > 0 else 0.0
            rows.append(
                {
                    "t": t,
                    "degree": float(est.degree[s]),
                    "eigenvalue": float(lam),
                    "C": float(base_shell[s]),
                    "model_factor": float(factor_shell[s]),
                    "model_variance": float(model[s]),
                    "empirical": float(est.degree_mean[s]),
                    "se": float(se),
                    "z": float(z),
                    "within_3se": bool(abs(diff) <= 3 * se),
                }
            )
    files.append(write_csv(out / "spectrum.csv", rows))
    if cfg.mc is not None:
        files.append(write_csv(out / "coordinate_changed.csv", _coordinate_changed_rows(cfg, backend, base, law)))
    files.append(_manifest(out, "field", cfg, files, time.perf_counter() - start))
    return files


def _time_change_for(law):
    if isinstance(law, Heat):
        return Subordinate(Drift(1.0))
    if isinstance(law, TimeFractional):
        return Subordinate(Drift(1.0)) if law.beta == 1.0 else InverseStable(law.beta)
    return law


def _coordinate_changed_rows(cfg, backend, base, law) -> list[dict]:
    """Mean of T(B^m_tau) over paths vs the evolved field at random probes."""
    rng = make_rng(cfg.seed, "field", "coordinate_changed")
    probes = backend.random_points(cfg.mc.probes, rng)
    _, names = display_grid(backend, 2)
    tc = _time_change_for(law)
    rows = []
    for t in cfg.times:
        evolved = evolve(base, law, t)
        for k, m in enumerate(probes):
            v = sample_coordinate_changed_batch(base, tc, m, t, cfg.mc.n_paths, rng, steps=cfg.mc.steps_per_unit)
            se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
            target = float(evolved.evaluate(m))
            diff = float(v.mean()) - target
            # zero-duration paths leave only round-off spread
            floor = ROUNDOFF * max(1.0, abs(target))
            row = {"t": t, "probe": k}
            row.update({n: float(c) for n, c in zip(names, m)})
            row.update(
                {
                    "evolved": target,
                    "mc_mean": float(v.mean()),
                    "mc_se": se,
                    "z": diff / se if se > floor else 0.0,
                    "within_3se": bool(abs(diff) <= 3 * se + floor),
                }
            )
            rows.append(row)
    return rows


def cmd_validate(suite: str, seed: int = 42, out: str | None = None) -> tuple[dict, Path]:
    from .validation import run_suite

    report = run_suite(suite, seed)
    path = write_json(output_dir(out or "fracfield_out") / f"validate_{suite}.json", report)
    return report, path


def _summary(report: dict) -> str:
    lines = []
    for check in report["checks"]:
        flag = "PASS" if check["passed"] else "FAIL"
        lines.append(f"[{flag}] {check['suite']}.{check['name']}: {check['detail']}")
    n_fail = sum(not c["passed"] for c in report["checks"])
    lines.append(f"{len(report['checks']) - n_fail}/{len(report['checks'])} checks passed")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fracfield", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fracfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", help="run a spectral solver from a JSON config")
    p_solve.add_argument("config")
    p_field = sub.add_parser("field", help="synthesise and evolve random fields from a JSON config")
    p_field.add_argument("config")
    p_val = sub.add_parser("validate", help="run invariant suites")
    p_val.add_argument("suite", choices=["specfun", "subordinate", "manifold", "solver", "fields", "all"])
    p_val.add_argument("--seed", type=int, default=42)
    p_val.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    try:
        if args.command in ("solve", "field"):
            cfg = load_config(args.config)
            files = (cmd_solve if args.command == "solve" else cmd_field)(cfg)
            for f in files:
                print(f)
            return 0
        report, path = cmd_validate(args.suite, args.seed, args.out)
        print(_summary(report))
        print(f"report: {path}")
        return 0 if report["passed"] else 1
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
