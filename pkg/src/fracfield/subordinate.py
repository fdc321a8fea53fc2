"""Laplace exponents of subordinators and samplers for S_t and E_t.

A subordinator S with Laplace exponent psi satisfies
E exp(-xi S_t) = exp(-t psi(xi)). The inverse stable subordinator E_t is the
first time a beta-stable subordinator exceeds t; its Laplace transform is
E exp(-lam E_t) = E_beta(-lam t^beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .specfun import mittag_leffler


class UnsupportedExponentError(TypeError):
    """The requested operation is undefined for this Laplace exponent."""


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class LaplaceExponent:
    """Base class; concrete kinds below are immutable value objects."""

    def __call__(self, xi):
        return psi_eval(self, xi)


@dataclass(frozen=True)
class Stable(LaplaceExponent):
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class StableWithDrift(LaplaceExponent):
    b: float
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.b <= 0:
            raise ValueError(f"drift b must be positive, got {self.b}")


@dataclass(frozen=True)
class Drift(LaplaceExponent):
    """Deterministic clock S_t = b t; psi(xi) = b xi."""

    b: float = 1.0

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError(f"drift b must be positive, got {self.b}")


@dataclass(frozen=True)
class Gamma(LaplaceExponent):
    pass


@dataclass(frozen=True)
class GeometricStable(LaplaceExponent):
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class Sum(LaplaceExponent):
    """Independent components run at scaled clocks: psi = sum_i w_i psi_i."""

    terms: tuple[tuple[float, LaplaceExponent], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("Sum needs at least one term")
        for w, p in self.terms:
            if w < 0:
                raise ValueError(f"time weights must be non-negative, got {w}")
            if not isinstance(p, LaplaceExponent):
                raise TypeError(f"not a Laplace exponent: {p!r}")


def psi_eval(spec: LaplaceExponent, xi):
    """Closed-form Laplace exponent psi(xi) for xi >= 0."""
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0):
        raise ValueError("psi is only defined for xi >= 0")
    if isinstance(spec, Stable):
        out = xi_arr**spec.alpha
    elif isinstance(spec, StableWithDrift):
        out = spec.b * xi_arr + xi_arr**spec.alpha
    elif isinstance(spec, Drift):
        out = spec.b * xi_arr
    elif isinstance(spec, Gamma):
        out = np.log1p(xi_arr)
    elif isinstance(spec, GeometricStable):
        out = np.log1p(xi_arr**spec.alpha)
    elif isinstance(spec, Sum):
        out = sum(w * np.asarray(psi_eval(p, xi_arr)) for w, p in spec.terms)
    else:
        raise UnsupportedExponentError(f"unknown Laplace exponent {spec!r}")
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def levy_density(spec: LaplaceExponent, s):
    """Density of the Levy measure nu(ds), where one exists."""
    s = np.asarray(s, dtype=float)
    if isinstance(spec, Stable):
        return spec.alpha * s ** (-spec.alpha - 1.0) / gamma_fn(1.0 - spec.alpha)
    if isinstance(spec, Gamma):
        return np.exp(-s) / s
    if isinstance(spec, GeometricStable):
        return spec.alpha * mittag_leffler(spec.alpha, -(s**spec.alpha)) / s
    if isinstance(spec, Sum):
        return sum(w * levy_density(p, s) for w, p in spec.terms if w > 0)
    raise UnsupportedExponentError(f"{type(spec).__name__} has a drift part and no Levy density")


def _levy_density_log_scale(spec: LaplaceExponent, u):
    """s * nu(s) at s = exp(u); avoids overflow of s^(-alpha-1) for tiny s."""
    if isinstance(spec, Stable):
        return spec.alpha * np.exp(-spec.alpha * u) / gamma_fn(1.0 - spec.alpha)
    if isinstance(spec, Gamma):
        return np.exp(-np.exp(u))
    if isinstance(spec, GeometricStable):
        return spec.alpha * mittag_leffler(spec.alpha, -np.exp(spec.alpha * u))
    if isinstance(spec, Sum):
        return sum(w * _levy_density_log_scale(p, u) for w, p in spec.terms if w > 0)
    raise UnsupportedExponentError(f"{type(spec).__name__} has a drift part and no Levy density")


def _tail_rates(spec: LaplaceExponent) -> tuple[float, float | None]:
    """Exponential decay rates of the log-scale integrand at s->0 and s->inf.

    ``None`` for the upper rate means super-exponential decay (gamma).
    """
    if isinstance(spec, Stable):
        return 1.0 - spec.alpha, spec.alpha
    if isinstance(spec, GeometricStable):
        return 1.0, spec.alpha
    if isinstance(spec, Gamma):
        return 1.0, None
    if isinstance(spec, Sum):
        rates = [_tail_rates(p) for w, p in spec.terms if w > 0]
        lo = min(r[0] for r in rates)
        his = [r[1] for r in rates if r[1] is not None]
        return lo, (min(his) if his else None)
    raise UnsupportedExponentError(f"{type(spec).__name__} has a drift part and no Levy density")


def psi_from_levy_quadrature(spec: LaplaceExponent, xi: float, n_nodes: int = 2000) -> float:
    """psi(xi) = int_0^inf (1 - e^{-s xi}) nu(ds) by trapezoid rule in log s.

    In u = log s the integrand is analytic and decays exponentially at both
    ends, so the trapezoid rule converges geometrically in ``n_nodes``.
    """
    if xi < 0:
        raise ValueError("psi is only defined for xi >= 0")
    lo_rate, hi_rate = _tail_rates(spec)
    if xi == 0:
        return 0.0
    # tails beyond the window are below exp(-40) relative
    centre = -math.log(xi)
    u_lo = centre - 40.0 / lo_rate
    u_hi = centre + 40.0 / hi_rate if hi_rate is not None else math.log(60.0)
    u_hi = max(u_hi, centre + 5.0)
    u, h = np.linspace(u_lo, u_hi, n_nodes, retstep=True)
    integrand = -np.expm1(-np.exp(u) * xi) * _levy_density_log_scale(spec, u)
    return float(h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1])))


# ---------------------------------------------------------------------------
# samplers


def sample_stable(alpha: float, t: float, rng: np.random.Generator, size=None):
    """One-sided alpha-stable draws with E exp(-s X) = exp(-t s^alpha).

    Kanter's representation: for U ~ Unif(0, pi), W ~ Exp(1),
    X = A(U)^((1-a)/a) W^(-(1-a)/a) with
    A(u) = sin(a u)^(a/(1-a)) sin((1-a) u) / sin(u)^(1/(1-a)).
    """
    _check_alpha(alpha)
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    u = rng.uniform(0.0, math.pi, size)
    w = rng.standard_exponential(size)
    a = alpha
    log_a = (
        (a / (1.0 - a)) * np.log(np.sin(a * u))
        + np.log(np.sin((1.0 - a) * u))
        - np.log(np.sin(u)) / (1.0 - a)
    )
    x = np.exp(((1.0 - a) / a) * (log_a - np.log(w)))
    return t ** (1.0 / a) * x


def sample_inverse_stable(beta: float, t: float, rng: np.random.Generator, size=None):
    """Exact draws of E_t via E_t = (t / S_1)^beta in distribution."""
    _check_alpha(beta)
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    s1 = sample_stable(beta, 1.0, rng, size)
    return (t / s1) ** beta


def sample_subordinator(spec: LaplaceExponent, t: float, rng: np.random.Generator, size=None):
    """Draws of S_t for any supported Laplace exponent."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if t == 0:
        return np.zeros(size) if size is not None else 0.0
    if isinstance(spec, Stable):
        return sample_stable(spec.alpha, t, rng, size)
    if isinstance(spec, StableWithDrift):
        return spec.b * t + sample_stable(spec.alpha, t, rng, size)
    if isinstance(spec, Drift):
        return np.full(size, spec.b * t) if size is not None else spec.b * t
    if isinstance(spec, Gamma):
        return rng.gamma(t, 1.0, size)
    if isinstance(spec, GeometricStable):
        # stable motion run to an independent Gamma(t, 1) time
        g = rng.gamma(t, 1.0, size)
        return g ** (1.0 / spec.alpha) * sample_stable(spec.alpha, 1.0, rng, size)
    if isinstance(spec, Sum):
        total = np.zeros(size) if size is not None else 0.0
        for w, p in spec.terms:
            if w > 0:
                total = total + sample_subordinator(p, w * t, rng, size)
        return total
    raise UnsupportedExponentError(f"unknown Laplace exponent {spec!r}")


@dataclass(frozen=True)
class SubordinatorSample:
    t: float
    value: float
    path: tuple[tuple[float, float], ...] | None = None


def sample_subordinator_path(spec: LaplaceExponent, times, rng: np.random.Generator) -> np.ndarray:
    """Values of S at an increasing time grid (first entry may be 0).

    Built from independent increments S_{t_k} - S_{t_{k-1}} ~ S_{t_k - t_{k-1}}.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d array")
    steps = np.diff(np.concatenate([[0.0], times]))
    if np.any(steps < 0):
        raise ValueError("times must be nondecreasing and start at >= 0")
    incr = np.array([sample_subordinator(spec, float(dt), rng) if dt > 0 else 0.0 for dt in steps])
    return np.cumsum(incr)


def first_passage_inverse_stable(
    beta: float,
    t: float,
    rng: np.random.Generator,
    size: int,
    step: float = 1e-3,
    block: int = 512,
) -> np.ndarray:
    """E_t by first passage of a stable path simulated on a grid of width ``step``.

    Each path is advanced in blocks of ``block`` increments until it exceeds
    ``t``; E_t is taken as the grid time of the first exceedance, so the
    discretisation bias is at most ``step``.
    """
    _check_alpha(beta)
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if step <= 0:
        raise ValueError("step must be positive")
    out = np.zeros(size)
    if t == 0:
        return out
    level = np.zeros(size)
    offset = 0
    active = np.arange(size)
    while active.size:
        incr = sample_stable(beta, step, rng, (active.size, block))
        path = level[active, None] + np.cumsum(incr, axis=1)
        crossed = path > t
        hit = crossed.any(axis=1)
        first = np.argmax(crossed, axis=1)
        done = active[hit]
        out[done] = (offset + first[hit] + 1) * step
        level[active] = path[:, -1]
        active = active[~hit]
        offset += block
    return out


# ---------------------------------------------------------------------------
# config (de)serialisation


def exponent_to_dict(spec: LaplaceExponent) -> dict:
    if isinstance(spec, Stable):
        return {"kind": "stable", "alpha": spec.alpha}
    if isinstance(spec, StableWithDrift):
        return {"kind": "stable_with_drift", "b": spec.b, "alpha": spec.alpha}
    if isinstance(spec, Drift):
        return {"kind": "drift", "b": spec.b}
    if isinstance(spec, Gamma):
        return {"kind": "gamma"}
    if isinstance(spec, GeometricStable):
        return {"kind": "geometric_stable", "alpha": spec.alpha}
    if isinstance(spec, Sum):
        return {
            "kind": "sum",
            "terms": [{"weight": w, "psi": exponent_to_dict(p)} for w, p in spec.terms],
        }
    raise UnsupportedExponentError(f"unknown Laplace exponent {spec!r}")


_FIELDS = {
    "stable": ("alpha",),
    "stable_with_drift": ("b", "alpha"),
    "drift": ("b",),
    "gamma": (),
    "geometric_stable": ("alpha",),
    "sum": ("terms",),
}


def exponent_from_dict(data: dict, where: str = "psi") -> LaplaceExponent:
    """Inverse of :func:`exponent_to_dict`; rejects unknown keys."""
    if not isinstance(data, dict) or "kind" not in data:
        raise ValueError(f"{where}: expected an object with a 'kind' key")
    kind = data["kind"]
    if kind not in _FIELDS:
        raise ValueError(f"{where}.kind: unknown kind {kind!r}; expected one of {sorted(_FIELDS)}")
    allowed = {"kind", *_FIELDS[kind]}
    extra = set(data) - allowed
    if extra:
        raise ValueError(f"{where}: unknown keys {sorted(extra)}")
    missing = [k for k in _FIELDS[kind] if k not in data]
    if missing:
        raise ValueError(f"{where}: missing keys {missing}")
    try:
        if kind == "stable":
            return Stable(float(data["alpha"]))
        if kind == "stable_with_drift":
            return StableWithDrift(float(data["b"]), float(data["alpha"]))
        if kind == "drift":
            return Drift(float(data["b"]))
        if kind == "gamma":
            return Gamma()
        if kind == "geometric_stable":
            return GeometricStable(float(data["alpha"]))
        terms = []
        for i, term in enumerate(data["terms"]):
            if set(term) != {"weight", "psi"}:
                raise ValueError(f"{where}.terms[{i}]: expected keys 'weight' and 'psi'")
            terms.append(
                (float(term["weight"]), exponent_from_dict(term["psi"], f"{where}.terms[{i}].psi"))
            )
        return Sum(tuple(terms))
    except ValueError as exc:
        if str(exc).startswith(where):
            raise
        raise ValueError(f"{where}: {exc}") from None
