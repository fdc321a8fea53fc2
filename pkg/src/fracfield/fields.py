"""Gaussian random fields on spectral backends.

Fields are Karhunen-Loeve sums T = sum_j c_j phi_j with independent centred
Gaussian coefficients of variance C_j. Time evolution multiplies each
coefficient by the solver's mode factor; coordinate-changed fields evaluate a
fixed realisation along time-changed Brownian paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .manifold import SpectralBackend, SpectralCoefficients, Sphere2, Torus, _sphere_cos_angle, display_grid
from .solver import SpaceFractional, TimeFractional, multiplier
from .specfun import legendre_table
from .subordinate import first_passage_inverse_stable, sample_subordinator

MIN_ENSEMBLE = 1000

# the subordinate law shares its multiplier with the space-fractional problem
Subordinate = SpaceFractional
FieldLaw = Union[SpaceFractional, TimeFractional]


@dataclass(frozen=True)
class PowerSpectrum:
    """Per-mode variances C_j aligned with a backend's enumeration."""

    values: np.ndarray
    gamma: float | None = None
    amplitude: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("spectrum variances must be finite and non-negative")
        object.__setattr__(self, "values", v)

    @classmethod
    def parametric(cls, backend: SpectralBackend, amplitude: float = 1.0, gamma: float = 3.0) -> "PowerSpectrum":
        """C_j = A (1 + d_j)^(-gamma), d_j the mode degree (l, |k| or j)."""
        if gamma <= 2:
            raise ValueError(f"gamma must exceed 2 for a summable spectrum, got {gamma}")
        if amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        return cls(amplitude * (1.0 + backend.degree) ** (-gamma), gamma, amplitude)

    @classmethod
    def per_degree(cls, backend: Sphere2, c_l) -> "PowerSpectrum":
        c_l = np.asarray(c_l, dtype=float)
        return cls(c_l[backend.degree])

    def total_variance(self) -> float:
        return float(np.sum(self.values))


@dataclass(frozen=True)
class RandomField:
    backend: SpectralBackend
    coefficients: np.ndarray
    seed: str | None = None

    def evaluate(self, points) -> np.ndarray:
        return np.real(self.backend.evaluate(self.coefficients, points))

    def as_coefficients(self) -> SpectralCoefficients:
        return SpectralCoefficients(self.backend, self.coefficients)


@dataclass(frozen=True)
class EvolvedField:
    base: RandomField
    law: FieldLaw
    t: float
    coefficients: np.ndarray

    @property
    def backend(self) -> SpectralBackend:
        return self.base.backend

    def evaluate(self, points) -> np.ndarray:
        return np.real(self.backend.evaluate(self.coefficients, points))


@dataclass(frozen=True)
class InverseStable:
    beta: float


TimeChange = Union[SpaceFractional, InverseStable]


@dataclass(frozen=True)
class CoordinateChangedSample:
    field: RandomField
    time_change: TimeChange
    m: np.ndarray
    t: float
    tau: float
    change_path: np.ndarray
    bm_times: np.ndarray
    bm_points: np.ndarray
    alive: bool
    value: float


# ---------------------------------------------------------------------------
# synthesis


def _pairing(backend: SpectralBackend) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split complex modes into (self-conjugate, representative, partner, sign).

    Coefficients obey c[partner] = sign * conj(c[representative]).
    """
    if isinstance(backend, Sphere2):
        l, m = backend.degree, backend.order
        self_ = np.nonzero(m == 0)[0]
        rep = np.nonzero(m > 0)[0]
        partner = l[rep] ** 2 + l[rep] - m[rep]
        sign = (-1.0) ** m[rep]
        return self_, rep, partner, sign
    if isinstance(backend, Torus):
        conj = backend.conjugate_index()
        idx = np.arange(backend.n_modes)
        self_ = idx[conj == idx]
        ks = backend.wavenumbers
        # representative: first nonzero component positive
        first_nz = np.array([k[np.nonzero(k)[0][0]] if np.any(k) else 0 for k in ks])
        rep = idx[first_nz > 0]
        return self_, rep, conj[rep], np.ones(rep.size)
    raise TypeError(f"no conjugate pairing for {backend.backend_id}")


def synthesize_coefficients(
    backend: SpectralBackend, spectrum: PowerSpectrum, rng: np.random.Generator, n: int
) -> np.ndarray:
    """``n`` independent coefficient vectors, shape ``(n, n_modes)``, with E|c_j|^2 = C_j."""
    c = np.asarray(spectrum.values)
    if c.shape != (backend.n_modes,):
        raise ValueError(f"spectrum has {c.size} modes, backend has {backend.n_modes}")
    if not backend.complex_basis:
        return np.sqrt(c) * rng.standard_normal((n, backend.n_modes))
    self_, rep, partner, sign = _pairing(backend)
    out = np.zeros((n, backend.n_modes), dtype=complex)
    out[:, self_] = np.sqrt(c[self_]) * rng.standard_normal((n, self_.size))
    z = rng.standard_normal((n, rep.size)) + 1j * rng.standard_normal((n, rep.size))
    out[:, rep] = np.sqrt(c[rep] / 2.0) * z
    out[:, partner] = sign * np.conj(out[:, rep])
    return out


def synthesize(backend: SpectralBackend, spectrum: PowerSpectrum, rng: np.random.Generator, seed: str | None = None) -> RandomField:
    """One real Gaussian field with per-mode variances ``spectrum``."""
    return RandomField(backend, synthesize_coefficients(backend, spectrum, rng, 1)[0], seed)


def covariance(backend: SpectralBackend, spectrum: PowerSpectrum, x, y) -> np.ndarray:
    """K(x, y) = sum_j C_j phi_j(x) conj(phi_j(y)); Legendre form on the sphere."""
    if isinstance(backend, Sphere2):
        c_l = spectrum.values[np.arange(backend.l_max + 1) ** 2 + np.arange(backend.l_max + 1)]
        z = _sphere_cos_angle(backend._as_points(x), backend._as_points(y))
        ls = np.arange(backend.l_max + 1)
        w = c_l * (2 * ls + 1) / (4 * math.pi)
        return np.tensordot(w, legendre_table(backend.l_max, z), axes=(0, 0))
    x = backend._as_points(x)
    y = backend._as_points(y)
    x, y = np.broadcast_arrays(x, y)
    bx = backend.basis(x.reshape(-1, backend.dim))
    by = backend.basis(y.reshape(-1, backend.dim))
    return np.real(np.einsum("pj,j,pj->p", bx, spectrum.values, np.conj(by))).reshape(x.shape[:-1])


# ---------------------------------------------------------------------------
# evolution


def evolution_factor(backend: SpectralBackend, law: FieldLaw, t: float) -> np.ndarray:
    return multiplier(backend, law, t)


def evolve(field: RandomField, law: FieldLaw, t: float) -> EvolvedField:
    """T_t = sum_j m_j(t) c_j phi_j with m_j = exp(-t Psi(lam_j)) or E_beta(-t^beta lam_j)."""
    factor = evolution_factor(field.backend, law, t)
    return EvolvedField(field, law, float(t), factor * field.coefficients)


def model_variance(backend: SpectralBackend, spectrum: PowerSpectrum, law: FieldLaw, t: float) -> np.ndarray:
    return spectrum.values * evolution_factor(backend, law, t) ** 2


# ---------------------------------------------------------------------------
# coordinate-changed fields


def _time_change_draws(time_change: TimeChange, t: float, rng, n: int, steps: int):
    """Durations tau and their recorded time-change paths on a grid of 1/steps."""
    if isinstance(time_change, InverseStable):
        tau = first_passage_inverse_stable(time_change.beta, t, rng, n, step=1.0 / steps)
        return tau, None
    if isinstance(time_change, SpaceFractional):
        if t == 0:
            return np.zeros(n), np.zeros((n, 1))
        k = max(1, int(math.ceil(t * steps)))
        incr = np.stack([sample_subordinator(time_change.psi, t / k, rng, n) for _ in range(k)], axis=1)
        paths = np.cumsum(incr, axis=1)
        return paths[:, -1], paths
    raise TypeError(f"unknown time change {time_change!r}")


def _brownian_endpoints(backend: SpectralBackend, m, tau, rng, legs: int):
    """Brownian motion from m run for durations tau, in ``legs`` equal exact steps."""
    n = tau.size
    pts = np.tile(backend._as_points(m).reshape(1, backend.dim), (n, 1))
    alive = np.ones(n, dtype=bool)
    moving = tau > 0
    history = [pts.copy()]
    for _ in range(legs):
        if np.any(moving):
            nxt, ok = backend.sample_transition(pts[moving], tau[moving] / legs, rng)
            alive[moving] &= ok
            pts[moving] = np.where(alive[moving][:, None], nxt, pts[moving])
        history.append(pts.copy())
    return pts, alive, np.stack(history, axis=1)


def sample_coordinate_changed_batch(
    field: RandomField,
    time_change: TimeChange,
    m,
    t: float,
    n: int,
    rng: np.random.Generator,
    steps: int = 1000,
    legs: int = 1,
) -> np.ndarray:
    """``n`` independent values of T(B^m_tau) for one fixed field realisation.

    Killed paths (interval) evaluate to 0.
    """
    if steps < 1 or legs < 1:
        raise ValueError("steps and legs must be at least 1")
    tau, _ = _time_change_draws(time_change, t, rng, n, steps)
    end, alive, _ = _brownian_endpoints(field.backend, m, tau, rng, legs)
    return np.where(alive, field.evaluate(end), 0.0)


def sample_coordinate_changed(
    field: RandomField,
    time_change: TimeChange,
    m,
    t: float,
    steps: int,
    rng: np.random.Generator,
    legs: int = 4,
) -> CoordinateChangedSample:
    """One draw of T(B^m_tau) with its time-change and Brownian path records."""
    if steps < 1 or legs < 1:
        raise ValueError("steps and legs must be at least 1")
    tau, path = _time_change_draws(time_change, t, rng, 1, steps)
    end, alive, hist = _brownian_endpoints(field.backend, m, tau, rng, legs)
    value = float(field.evaluate(end)[0]) if alive[0] else 0.0
    change_path = np.zeros(0) if path is None else path[0]
    return CoordinateChangedSample(
        field=field,
        time_change=time_change,
        m=np.asarray(m, dtype=float),
        t=float(t),
        tau=float(tau[0]),
        change_path=change_path,
        bm_times=np.linspace(0.0, float(tau[0]), legs + 1),
        bm_points=hist[0],
        alive=bool(alive[0]),
        value=value,
    )


# ---------------------------------------------------------------------------
# spectrum estimation


@dataclass(frozen=True)
class SpectrumEstimate:
    n_draws: int
    mode_mean: np.ndarray
    mode_se: np.ndarray
    degree: np.ndarray
    degree_mean: np.ndarray
    degree_se: np.ndarray


def estimate_spectrum(samples, backend: SpectralBackend) -> SpectrumEstimate:
    """Empirical E|c_j|^2 per mode and per eigenvalue shell, with standard errors.

    ``degree`` labels each shell by the backend's mode degree (l, |k| or j).

    Shell statistics average |c_j|^2 over the shell within each draw first,
    so dependence between conjugate partners is handled correctly.
    """
    c = np.asarray(samples)
    if c.ndim != 2 or c.shape[1] != backend.n_modes:
        raise ValueError(f"samples must have shape (n_draws, {backend.n_modes})")
    n = c.shape[0]
    if n < MIN_ENSEMBLE:
        raise ValueError(f"need at least {MIN_ENSEMBLE} draws, got {n}")
    p = np.abs(c) ** 2
    lam, first, inverse = np.unique(backend.eigenvalues, return_index=True, return_inverse=True)
    counts = np.bincount(inverse)
    shell = np.zeros((n, lam.size))
    for j, s in enumerate(inverse):
        shell[:, s] += p[:, j]
    shell /= counts
    return SpectrumEstimate(
        n_draws=n,
        mode_mean=p.mean(axis=0),
        mode_se=p.std(axis=0, ddof=1) / math.sqrt(n),
        degree=backend.degree[first].astype(float),
        degree_mean=shell.mean(axis=0),
        degree_se=shell.std(axis=0, ddof=1) / math.sqrt(n),
    )


def shell_model(backend: SpectralBackend, per_mode: np.ndarray) -> np.ndarray:
    """Average a per-mode quantity over each eigenvalue shell."""
    _, inverse = np.unique(backend.eigenvalues, return_inverse=True)
    return np.bincount(inverse, weights=per_mode) / np.bincount(inverse)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# ---------------------------------------------------------------------------
# non-eigen Karhunen-Loeve systems


@dataclass(frozen=True)
class ChangeOfBasisStats:
    variance: np.ndarray
    covariance: np.ndarray


def change_basis_coefficients(theta, zeta) -> ChangeOfBasisStats:
    """Moments of c_j = sum_i sqrt(zeta_i) omega_i theta_ji.

    Var c_j = sum_i zeta_i theta_ji^2 and Cov(c_k, c_s) = sum_i zeta_i theta_ki theta_si.
    """
    theta = np.asarray(theta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta < 0):
        raise ValueError("KL eigenvalues must be non-negative")
    if theta.ndim != 2 or theta.shape[1] != zeta.size:
        raise ValueError("theta must be (n_coeffs, n_kl) with n_kl = len(zeta)")
    cov = (theta * zeta) @ theta.T
    return ChangeOfBasisStats(np.diag(cov).copy(), cov)


def sample_change_basis(theta, zeta, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draws of the coefficient vector c = theta (sqrt(zeta) * omega), shape (n, n_coeffs)."""
    theta = np.asarray(theta, dtype=float)
    omega = rng.standard_normal((n, len(zeta)))
    return (omega * np.sqrt(zeta)) @ theta.T


def random_orthogonal(J: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthogonal J x J matrix via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((J, J)))
    return q * np.sign(np.diag(r))


# ---------------------------------------------------------------------------
# export


def field_grid_rows(backend: SpectralBackend, coefficients: np.ndarray, t: float, n_grid: int = 33) -> list[dict]:
    """Long-format rows of field values on the backend's display grid."""
    pts, names = display_grid(backend, n_grid)
    vals = np.real(backend.evaluate(coefficients, pts))
    rows = []
    for p, v in zip(pts, vals):
        row = {"t": t}
        row.update({k: float(c) for k, c in zip(names, p)})
        row["value"] = float(v)
        rows.append(row)
    return rows
