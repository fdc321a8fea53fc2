"""Spectral solvers for heat, time-fractional and space-fractional Cauchy problems.

All solutions are coefficient multipliers applied to the initial data's
eigen-coefficients; point evaluation is left to the backend. Monte Carlo
estimators of the stochastic representations are provided as independent
cross-checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .manifold import SpectralBackend, SpectralCoefficients
from .specfun import caputo_l1_derivative, mittag_leffler
from .subordinate import LaplaceExponent, psi_eval, sample_inverse_stable, sample_subordinator


class GeneratorDivergenceWarning(UserWarning):
    """Weighted coefficient tail suggests the generator series does not converge."""


@dataclass(frozen=True)
class Heat:
    pass


@dataclass(frozen=True)
class TimeFractional:
    beta: float

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")


@dataclass(frozen=True)
class SpaceFractional:
    psi: LaplaceExponent


Problem = Union[Heat, TimeFractional, SpaceFractional]


@dataclass(frozen=True)
class SolutionSnapshot:
    coefficients: SpectralCoefficients
    t: float
    problem: Problem
    regime: str = "strong"

    def evaluate(self, points) -> np.ndarray:
        return np.real(self.coefficients.evaluate(points))


@dataclass(frozen=True)
class SobolevCheck:
    s: float
    n: int
    sum: float
    tail: float
    in_space: bool
    threshold: float
    passes: bool


def sobolev_threshold(n: int) -> float:
    return (3.0 + 3.0 * n) / 4.0


# ---------------------------------------------------------------------------
# multipliers


def _psi_values(psi, lam: np.ndarray) -> np.ndarray:
    if isinstance(psi, LaplaceExponent):
        return np.asarray(psi_eval(psi, lam), dtype=float)
    uniq, inverse = np.unique(lam, return_inverse=True)
    return np.array([float(psi(float(x))) for x in uniq])[inverse]


def multiplier(backend: SpectralBackend, problem: Problem, t: float) -> np.ndarray:
    """Per-mode factor m_j(t) with u_j(t) = m_j(t) kappa_j."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    lam = backend.eigenvalues
    if isinstance(problem, Heat):
        return np.exp(-lam * t)
    if isinstance(problem, TimeFractional):
        if t == 0:
            return np.ones_like(lam)
        return mittag_leffler(problem.beta, -(t**problem.beta) * lam)
    if isinstance(problem, SpaceFractional):
        return np.exp(-t * _psi_values(problem.psi, lam))
    raise TypeError(f"unknown problem {problem!r}")


def solve(backend: SpectralBackend, init: SpectralCoefficients, problem: Problem, t: float) -> SolutionSnapshot:
    _check_backend(backend, init)
    values = multiplier(backend, problem, t) * init.values
    regime = "strong"
    if isinstance(problem, TimeFractional) and not sobolev_check(
        backend, init, sobolev_threshold(backend.dim)
    ).passes:
        regime = "weak"
    return SolutionSnapshot(init.copy_with(values), float(t), problem, regime)


def heat_solve(backend, init, t) -> SolutionSnapshot:
    return solve(backend, init, Heat(), t)


def frac_time_solve(backend, init, beta, t) -> SolutionSnapshot:
    """E_beta(-t^beta lam_j) kappa_j; ``regime`` is "weak" if the data fails the Sobolev check."""
    return solve(backend, init, TimeFractional(beta), t)


def frac_space_solve(backend, init, psi, t) -> SolutionSnapshot:
    return solve(backend, init, SpaceFractional(psi), t)


def _check_backend(backend, coeffs):
    if coeffs.backend is not backend and coeffs.backend_id != backend.backend_id:
        raise ValueError(f"coefficients belong to {coeffs.backend_id}, not {backend.backend_id}")


# ---------------------------------------------------------------------------
# generator and residuals


def _shell_sums(backend: SpectralBackend, terms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum ``terms`` over modes sharing an eigenvalue; returns (degree, sums)."""
    lam, inverse = np.unique(backend.eigenvalues, return_inverse=True)
    sums = np.bincount(inverse, weights=terms, minlength=lam.size)
    return np.sqrt(lam), sums


# coefficients below this fraction of the largest one count as round-off
SUPPORT_RTOL = 1e-12


def _tail_slope(degree: np.ndarray, sums: np.ndarray, support: np.ndarray) -> tuple[float, float] | None:
    """Power-law fit log(sum) ~ p log(degree) + c over the upper half of the shells.

    ``support`` holds the unweighted shell energies; returns None when they
    vanish (relative to SUPPORT_RTOL) before the last quarter of the shells,
    i.e. for band-limited data.
    """
    if not np.any(support > 0):
        return None
    live = support > SUPPORT_RTOL**2 * support.max()
    nz = np.nonzero(live)[0]
    if nz[-1] < 0.75 * (sums.size - 1):
        return None
    sel = np.arange(sums.size // 2, sums.size)
    sel = sel[live[sel] & (sums[sel] > 0) & (degree[sel] > 0)]
    if sel.size < 4:
        return None
    p, c = np.polyfit(np.log(degree[sel]), np.log(sums[sel]), 1)
    return float(p), float(c)


def apply_generator(backend: SpectralBackend, coeffs: SpectralCoefficients, psi) -> SpectralCoefficients:
    """-Psi(lam_j) f_j for a Laplace exponent or any callable xi -> Psi(xi).

    Warns with :class:`GeneratorDivergenceWarning` when the weighted shell sums
    of Psi(lam_j)|f_j| sup|phi_j| do not decay summably at the truncation.
    """
    _check_backend(backend, coeffs)
    psi_vals = _psi_values(psi, backend.eigenvalues)
    weighted = psi_vals * np.abs(coeffs.values) * backend.sup_norms()
    _, support = _shell_sums(backend, np.abs(coeffs.values) ** 2)
    fit = _tail_slope(*_shell_sums(backend, weighted), support)
    if fit is not None and fit[0] >= -1.0:
        warnings.warn(
            f"generator tail decays like degree^{fit[0]:.2f}; series may diverge",
            GeneratorDivergenceWarning,
            stacklevel=2,
        )
    return coeffs.copy_with(-psi_vals * coeffs.values)


def _identity_psi(xi):
    return xi


def pde_residual(
    backend: SpectralBackend,
    init: SpectralCoefficients,
    problem: Problem,
    times,
    probes,
    t_from: float | None = None,
) -> float:
    """Max |d_t u - L u| over probes and grid times t >= t_from.

    The time derivative is the L1 Caputo quadrature for TimeFractional and
    the backward difference otherwise; L u = -Psi(lam_j) u_j with
    Psi(xi) = xi for Heat and TimeFractional.
    """
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    if times[0] != 0.0 or times.size < 2 or not np.allclose(dts, dts[0], rtol=1e-12, atol=0):
        raise ValueError("times must be a uniform grid starting at 0")
    dt = float(dts[0])
    if t_from is None:
        t_from = 0.5 * times[-1]
    basis = backend.basis(np.asarray(probes, dtype=float).reshape(-1, backend.dim))
    coeff_series = np.stack([multiplier(backend, problem, t) * init.values for t in times])
    u = np.real(coeff_series @ basis.T)  # (n_times, n_probes)
    psi = problem.psi if isinstance(problem, SpaceFractional) else _identity_psi
    gen = _psi_values(psi, backend.eigenvalues)
    lu = np.real((-gen * coeff_series) @ basis.T)
    worst = 0.0
    for n in range(1, times.size):
        if times[n] < t_from:
            continue
        if isinstance(problem, TimeFractional) and problem.beta < 1.0:
            d = caputo_l1_derivative(u[: n + 1], problem.beta, n, dt)
        else:
            d = (u[n] - u[n - 1]) / dt
        worst = max(worst, float(np.max(np.abs(d - lu[n]))))
    return worst


# ---------------------------------------------------------------------------
# Sobolev regularity


def sobolev_check(backend: SpectralBackend, coeffs: SpectralCoefficients, s: float) -> SobolevCheck:
    """Partial sum of lam_j^(2s) |kappa_j|^2 with a power-law tail estimate.

    ``in_space`` reports whether the series appears finite at ``s``.
    ``passes`` holds when the data is in H^s and also satisfies the
    regularity hypothesis s' > (3 + 3n)/4 for some s' >= s.
    """
    n = backend.dim
    thr = sobolev_threshold(n)
    lam = backend.eigenvalues
    absq = np.abs(coeffs.values) ** 2
    _, support = _shell_sums(backend, absq)

    def summary(s_):
        terms = np.where(lam > 0, lam ** (2 * s_), 0.0) * absq
        degree, sums = _shell_sums(backend, terms)
        fit = _tail_slope(degree, sums, support)
        if fit is None:
            return float(np.sum(terms)), 0.0, True
        p, c = fit
        if p >= -1.0:
            return float(np.sum(terms)), math.inf, False
        d_max = degree[-1]
        tail = math.exp(c) * d_max ** (p + 1) / (-p - 1)
        return float(np.sum(terms)), tail, True

    total, tail, in_space = summary(s)
    if s > thr:
        passes = in_space
    else:
        passes = in_space and summary(thr + 1e-6)[2]
    return SobolevCheck(float(s), n, total, tail, in_space, thr, passes)


# ---------------------------------------------------------------------------
# stochastic representation


@dataclass(frozen=True)
class MCEstimate:
    mean: np.ndarray
    se: np.ndarray
    n_paths: int


def sample_time_change(problem: Problem, t: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Random durations tau with u(m, t) = E f(B^m_tau), one per path."""
    if isinstance(problem, Heat):
        return np.full(size, float(t))
    if isinstance(problem, TimeFractional):
        if problem.beta == 1.0:
            return np.full(size, float(t))
        return sample_inverse_stable(problem.beta, t, rng, size)
    if isinstance(problem, SpaceFractional):
        return np.asarray(sample_subordinator(problem.psi, t, rng, size), dtype=float)
    raise TypeError(f"unknown problem {problem!r}")


def mc_solution(
    backend: SpectralBackend,
    f: Callable[[np.ndarray], np.ndarray],
    problem: Problem,
    t: float,
    probes,
    n_paths: int,
    rng: np.random.Generator,
) -> MCEstimate:
    """Monte Carlo estimate of E f(B^m_tau) at each probe point m.

    Killed paths contribute 0. Each path is a single exact transition over
    its random duration.
    """
    probes = backend._as_points(probes).reshape(-1, backend.dim)
    means, ses = [], []
    for m in probes:
        tau = sample_time_change(problem, t, rng, n_paths)
        start = np.tile(m, (n_paths, 1))
        end = start.copy()
        alive = np.ones(n_paths, dtype=bool)
        moving = tau > 0
        if np.any(moving):
            end[moving], alive[moving] = backend.sample_transition(start[moving], tau[moving], rng)
        vals = np.where(alive, np.real(f(end)), 0.0)
        means.append(vals.mean())
        ses.append(vals.std(ddof=1) / math.sqrt(n_paths))
    return MCEstimate(np.array(means), np.array(ses), n_paths)


# ---------------------------------------------------------------------------
# export


def snapshot_rows(snapshot: SolutionSnapshot) -> list[dict]:
    c = snapshot.coefficients
    labels = c.backend.mode_labels()
    return [
        {
            "index": j,
            "mode": labels[j],
            "eigenvalue": float(c.backend.eigenvalues[j]),
            "coef_real": float(np.real(v)),
            "coef_imag": float(np.imag(v)),
            "t": snapshot.t,
        }
        for j, v in enumerate(c.values)
    ]
