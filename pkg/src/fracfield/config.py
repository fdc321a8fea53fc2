"""Experiment configuration: JSON schema (version 1), validation and round-trip."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .subordinate import LaplaceExponent, exponent_from_dict, exponent_to_dict

SCHEMA_VERSION = 1
BACKENDS = ("sphere2", "torus1", "torus2", "interval")
PRESETS = ("single_mode", "band_limited", "point_mass")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class BackendSpec:
    name: str
    truncation: int | None = None
    quadrature: int | None = None


@dataclass(frozen=True)
class ProblemSpec:
    kind: str  # heat | time_fractional | space_fractional
    beta: float | None = None
    psi: LaplaceExponent | None = None


@dataclass(frozen=True)
class InitialSpec:
    preset: str
    mode: tuple[int, ...] | None = None
    degree: int | None = None
    point: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SpectrumSpec:
    amplitude: float = 1.0
    gamma: float = 3.0


@dataclass(frozen=True)
class MCSpec:
    n_paths: int = 10_000
    steps_per_unit: int = 20
    probes: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    backend: BackendSpec
    problem: ProblemSpec
    times: tuple[float, ...]
    initial: InitialSpec | None = None
    spectrum: SpectrumSpec | None = None
    mc: MCSpec | None = None
    ensemble: int = 1000
    output: str = "fracfield_out"
    grid: int = 33
    schema_version: int = field(default=SCHEMA_VERSION)


def _keys(obj, where: str, required: set, optional: set) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(obj) - required - optional
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    return obj


def _num(v, where: str, lo=None, hi=None, lo_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{where}: must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{where}: must be <= {hi}, got {v}")
    return int(v) if integer else float(v)


def parse_config(data: dict) -> ExperimentConfig:
    top = _keys(
        data,
        "config",
        {"schema_version", "seed", "backend", "problem", "times"},
        {"initial", "spectrum", "mc", "ensemble", "output", "grid"},
    )
    if top["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: expected {SCHEMA_VERSION}, got {top['schema_version']!r}")
    seed = _num(top["seed"], "config.seed", lo=0, integer=True)

    b = _keys(top["backend"], "config.backend", {"name"}, {"truncation", "quadrature"})
    if b["name"] not in BACKENDS:
        raise ConfigError(f"config.backend.name: expected one of {list(BACKENDS)}, got {b['name']!r}")
    backend = BackendSpec(
        b["name"],
        None if b.get("truncation") is None else _num(b["truncation"], "config.backend.truncation", lo=1, integer=True),
        None if b.get("quadrature") is None else _num(b["quadrature"], "config.backend.quadrature", lo=1, integer=True),
    )

    p = top["problem"]
    if not isinstance(p, dict) or "kind" not in p:
        raise ConfigError("config.problem: expected an object with a 'kind' key")
    if p["kind"] == "heat":
        _keys(p, "config.problem", {"kind"}, set())
        problem = ProblemSpec("heat")
    elif p["kind"] == "time_fractional":
        _keys(p, "config.problem", {"kind", "beta"}, set())
        problem = ProblemSpec("time_fractional", beta=_num(p["beta"], "config.problem.beta", lo=0, hi=1, lo_open=True))
    elif p["kind"] == "space_fractional":
        _keys(p, "config.problem", {"kind", "psi"}, set())
        try:
            psi = exponent_from_dict(p["psi"], "config.problem.psi")
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        problem = ProblemSpec("space_fractional", psi=psi)
    else:
        raise ConfigError(
            f"config.problem.kind: expected heat, time_fractional or space_fractional, got {p['kind']!r}"
        )

    if not isinstance(top["times"], list) or not top["times"]:
        raise ConfigError("config.times: expected a non-empty list")
    times = tuple(_num(t, f"config.times[{i}]", lo=0) for i, t in enumerate(top["times"]))
    if any(b_ <= a for a, b_ in zip(times, times[1:])):
        raise ConfigError("config.times: must be strictly increasing")

    initial = None
    if top.get("initial") is not None:
        ini = _keys(top["initial"], "config.initial", {"preset"}, {"mode", "degree", "point"})
        if ini["preset"] not in PRESETS:
            raise ConfigError(f"config.initial.preset: expected one of {list(PRESETS)}, got {ini['preset']!r}")
        need = {"single_mode": "mode", "band_limited": "degree", "point_mass": "point"}[ini["preset"]]
        if need not in ini:
            raise ConfigError(f"config.initial: preset {ini['preset']!r} needs key {need!r}")
        mode = degree = point = None
        if need == "mode":
            raw = ini["mode"] if isinstance(ini["mode"], list) else [ini["mode"]]
            mode = tuple(_num(v, f"config.initial.mode[{i}]", integer=True) for i, v in enumerate(raw))
        elif need == "degree":
            degree = _num(ini["degree"], "config.initial.degree", lo=0, integer=True)
        else:
            if not isinstance(ini["point"], list):
                raise ConfigError("config.initial.point: expected a list of coordinates")
            point = tuple(_num(v, f"config.initial.point[{i}]") for i, v in enumerate(ini["point"]))
        initial = InitialSpec(ini["preset"], mode, degree, point)

    spectrum = None
    if top.get("spectrum") is not None:
        s = _keys(top["spectrum"], "config.spectrum", set(), {"amplitude", "gamma"})
        spectrum = SpectrumSpec(
            _num(s.get("amplitude", 1.0), "config.spectrum.amplitude", lo=0),
            _num(s.get("gamma", 3.0), "config.spectrum.gamma", lo=2, lo_open=True),
        )

    mc = None
    if top.get("mc") is not None:
        m = _keys(top["mc"], "config.mc", set(), {"n_paths", "steps_per_unit", "probes"})
        mc = MCSpec(
            _num(m.get("n_paths", 10_000), "config.mc.n_paths", lo=1, integer=True),
            _num(m.get("steps_per_unit", 20), "config.mc.steps_per_unit", lo=1, integer=True),
            _num(m.get("probes", 5), "config.mc.probes", lo=1, integer=True),
        )

    ensemble = _num(top.get("ensemble", 1000), "config.ensemble", lo=1, integer=True)
    output = top.get("output", "fracfield_out")
    if not isinstance(output, str) or not output:
        raise ConfigError("config.output: expected a non-empty string")
    grid = _num(top.get("grid", 33), "config.grid", lo=2, integer=True)
    return ExperimentConfig(seed, backend, problem, times, initial, spectrum, mc, ensemble, output, grid)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out: dict = {
        "schema_version": cfg.schema_version,
        "seed": cfg.seed,
        "backend": {"name": cfg.backend.name},
        "problem": {"kind": cfg.problem.kind},
        "times": list(cfg.times),
        "ensemble": cfg.ensemble,
        "output": cfg.output,
        "grid": cfg.grid,
    }
    if cfg.backend.truncation is not None:
        out["backend"]["truncation"] = cfg.backend.truncation
    if cfg.backend.quadrature is not None:
        out["backend"]["quadrature"] = cfg.backend.quadrature
    if cfg.problem.beta is not None:
        out["problem"]["beta"] = cfg.problem.beta
    if cfg.problem.psi is not None:
        out["problem"]["psi"] = exponent_to_dict(cfg.problem.psi)
    if cfg.initial is not None:
        ini: dict = {"preset": cfg.initial.preset}
        if cfg.initial.mode is not None:
            ini["mode"] = list(cfg.initial.mode)
        if cfg.initial.degree is not None:
            ini["degree"] = cfg.initial.degree
        if cfg.initial.point is not None:
            ini["point"] = list(cfg.initial.point)
        out["initial"] = ini
    if cfg.spectrum is not None:
        out["spectrum"] = {"amplitude": cfg.spectrum.amplitude, "gamma": cfg.spectrum.gamma}
    if cfg.mc is not None:
        out["mc"] = {"n_paths": cfg.mc.n_paths, "steps_per_unit": cfg.mc.steps_per_unit, "probes": cfg.mc.probes}
    return out


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)
