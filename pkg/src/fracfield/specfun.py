"""Special functions: Mittag-Leffler on the negative axis, Legendre and
spherical harmonics, and an L1-scheme Caputo derivative.

All functions here are pure. Tolerances are explicit keyword arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate
from scipy.special import gammaln, gammasgn

SERIES_TOL = 1e-10
QUADRATURE_TOL = 1e-8

# |z| at or beyond which the algebraic asymptotic expansion is tried first
ASYMPTOTIC_MIN = 15.0
# largest allowed series term; bounds cancellation loss to ~1e4 * eps
SERIES_MAX_TERM = 1e4
SERIES_MAX_TERMS = 2000


class ConvergenceError(ArithmeticError):
    """Raised when an iterative evaluation fails to reach its tolerance.

    The best available estimate is kept on ``estimate``.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class MittagLefflerEval:
    beta: float
    z: float
    value: float
    method_used: Literal["series", "asymptotic", "integral_oracle"]


def _check_beta(beta: float) -> None:
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")


def _series_well_conditioned(beta: float, x: float) -> bool:
    if x == 0.0:
        return True
    n = np.arange(SERIES_MAX_TERMS)
    log_terms = n * math.log(x) - gammaln(1.0 + n * beta)
    return log_terms.max() <= math.log(SERIES_MAX_TERM) and log_terms[-1] < math.log(1e-300)


def _ml_series(beta: float, z: float, tol: float) -> float:
    x = -z
    n = np.arange(SERIES_MAX_TERMS)
    log_mag = n * math.log(x) - gammaln(1.0 + n * beta)
    peak = int(np.argmax(log_mag))
    small = np.nonzero((n > peak) & (log_mag < math.log(1e-3 * tol)))[0]
    if small.size == 0:
        partial = math.fsum((-1.0) ** n * np.exp(log_mag))
        raise ConvergenceError("Mittag-Leffler series did not converge", partial)
    stop = small[0] + 1
    # fsum keeps the alternating sum exact up to the final rounding
    return math.fsum((-1.0) ** n[:stop] * np.exp(log_mag[:stop]))


def _ml_asymptotic(beta: float, x: float) -> tuple[float, float]:
    """Algebraic expansion of E_beta(-x), truncated before the smallest term.

    Returns ``(value, error_estimate)`` where the estimate is the magnitude of
    the smallest (first omitted) nonzero term.
    """
    total = 0.0
    prev = math.inf
    logx = math.log(x)
    for k in range(1, 400):
        arg = 1.0 - k * beta
        if arg <= 0 and arg == math.floor(arg):
            continue  # 1/Gamma vanishes at the poles
        log_mag = -k * logx - float(gammaln(arg))
        mag = math.exp(log_mag)
        if mag > prev:
            return total, prev
        total += (-1.0) ** (k + 1) * float(gammasgn(arg)) * mag
        prev = mag
        if mag == 0.0:
            break
    return total, prev


def _ml_integral(beta: float, x: float, tol: float) -> float:
    # E_beta(-x) = sin(beta pi)/(beta pi) * int_0^inf exp(-(rho x)^(1/beta))
    #              / (rho^2 + 2 rho cos(beta pi) + 1) d rho,    0 < beta < 1
    c = math.cos(beta * math.pi)
    inv = 1.0 / beta

    def f(rho: float) -> float:
        return math.exp(-((rho * x) ** inv)) / (rho * rho + 2.0 * rho * c + 1.0)

    edges = sorted({0.0, min(1.0 / x, 1.0), 1.0, 2.0})
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, epsabs=tol * 0.1, epsrel=1e-13, limit=200)
        total += val
        err += e
    val, e = integrate.quad(f, 2.0, math.inf, epsabs=tol * 0.1, epsrel=1e-13, limit=200)
    total += val
    err += e
    scale = math.sin(beta * math.pi) / (beta * math.pi)
    value = scale * total
    if scale * err > tol:
        raise ConvergenceError(f"quadrature error {scale * err:.2e} exceeds tol {tol:.2e}", value)
    return value


def mittag_leffler_eval(beta: float, z: float, tol: float = SERIES_TOL) -> MittagLefflerEval:
    """Evaluate E_beta(z) for real z <= 0 and report which branch was used."""
    _check_beta(beta)
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = float(z)
    if z > 0:
        raise ValueError(f"only the negative real axis is supported, got z={z}")
    if z == 0.0:
        return MittagLefflerEval(beta, z, 1.0, "series")
    if beta == 1.0:
        return MittagLefflerEval(beta, z, math.exp(z), "series")
    x = -z
    if x >= ASYMPTOTIC_MIN:
        value, err = _ml_asymptotic(beta, x)
        if err <= tol:
            return MittagLefflerEval(beta, z, value, "asymptotic")
    elif _series_well_conditioned(beta, x):
        return MittagLefflerEval(beta, z, _ml_series(beta, z, tol), "series")
    return MittagLefflerEval(beta, z, _ml_integral(beta, x, tol), "integral_oracle")


def mittag_leffler(beta: float, z, tol: float = SERIES_TOL):
    """Mittag-Leffler function E_beta(z) = sum_n z^n / Gamma(1 + n beta), z <= 0.

    Accepts a scalar or an array for ``z``; returns the same shape.
    """
    if np.ndim(z) == 0:
        return mittag_leffler_eval(beta, float(z), tol).value
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    # many callers pass repeated eigenvalues; evaluate each distinct value once
    uniq, inverse = np.unique(flat, return_inverse=True)
    vals = np.array([mittag_leffler_eval(beta, float(u), tol).value for u in uniq])
    return vals[inverse].reshape(z.shape)


def mittag_leffler_integral_oracle(beta: float, z: float, n_quadrature: int = 32) -> float:
    """Independent E_beta(z) via fixed-Talbot inversion of s^(b-1)/(s^b - z) at t=1."""
    _check_beta(beta)
    if z > 0:
        raise ValueError(f"only the negative real axis is supported, got z={z}")
    if n_quadrature < 4:
        raise ValueError("n_quadrature must be at least 4")
    m = n_quadrature
    r = 2.0 * m / 5.0
    theta = np.arange(1, m) * np.pi / m
    cot = 1.0 / np.tan(theta)
    s = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot

    def laplace(s):
        return s ** (beta - 1.0) / (s**beta - z)

    value = (r / m) * (
        0.5 * math.exp(r) * laplace(r).real
        + np.sum((np.exp(s) * laplace(s) * (1.0 + 1j * sigma)).real)
    )
    if not np.isfinite(value):
        raise ConvergenceError("Talbot quadrature produced a non-finite value", float(value))
    return float(value)


# ---------------------------------------------------------------------------
# Legendre functions and spherical harmonics


def legendre_poly(l: int, z):
    """Legendre polynomial Q_l(z) by the three-term recurrence."""
    if l < 0:
        raise ValueError(f"degree must be non-negative, got {l}")
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise ValueError("legendre_poly requires |z| <= 1")
    p0 = np.ones_like(z)
    if l == 0:
        return p0 if p0.ndim else float(p0)
    p1 = z.copy()
    for k in range(2, l + 1):
        p0, p1 = p1, ((2 * k - 1) * z * p1 - (k - 1) * p0) / k
    return p1 if p1.ndim else float(p1)


def legendre_table(lmax: int, z) -> np.ndarray:
    """All Q_0..Q_lmax at ``z``; shape ``(lmax + 1,) + z.shape``."""
    z = np.asarray(z, dtype=float)
    out = np.empty((lmax + 1,) + z.shape)
    out[0] = 1.0
    if lmax >= 1:
        out[1] = z
    for k in range(2, lmax + 1):
        out[k] = ((2 * k - 1) * z * out[k - 1] - (k - 1) * out[k - 2]) / k
    return out


def normalized_assoc_legendre_table(lmax: int, z) -> np.ndarray:
    """Orthonormal associated Legendre values for 0 <= m <= l <= lmax.

    Returns an array of shape ``(lmax + 1, lmax + 1) + z.shape`` indexed
    ``[l, m]`` holding sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) Q_lm(z), with the
    Condon-Shortley phase. Entries with m > l are zero. The m-then-l
    recurrence never forms factorial ratios, so it is safe for large l.
    """
    z = np.asarray(z, dtype=float)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    out = np.zeros((lmax + 1, lmax + 1) + z.shape)
    pmm = np.full(z.shape, 1.0 / math.sqrt(4.0 * math.pi))
    for m in range(lmax + 1):
        if m > 0:
            pmm = -math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
        out[m, m] = pmm
        if m + 1 <= lmax:
            out[m + 1, m] = math.sqrt(2.0 * m + 3.0) * z * pmm
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l, m] = a * (z * out[l - 1, m] - b * out[l - 2, m])
    return out


def _check_lm(l: int, m: int) -> None:
    if l < 0 or abs(m) > l:
        raise ValueError(f"need l >= 0 and |m| <= l, got l={l}, m={m}")


def assoc_legendre(l: int, m: int, z):
    """Associated Legendre function Q_lm(z) = (-1)^m (1-z^2)^(m/2) d^m/dz^m Q_l(z).

    Negative orders follow Q_{l,-m} = (-1)^m (l-m)!/(l+m)! Q_lm.
    """
    _check_lm(l, m)
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise ValueError("assoc_legendre requires |z| <= 1")
    am = abs(m)
    norm_table = normalized_assoc_legendre_table(l, z)[l, am]
    log_ratio = gammaln(l - am + 1) - gammaln(l + am + 1)
    norm = math.sqrt((2 * l + 1) / (4 * math.pi) * math.exp(log_ratio))
    val = norm_table / norm
    if m < 0:
        val = (-1) ** am * math.exp(log_ratio) * val
    return val if val.ndim else float(val)


def spherical_harmonic(l: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic Y_lm(theta, phi)."""
    _check_lm(l, m)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    am = abs(m)
    p = normalized_assoc_legendre_table(l, np.cos(theta))[l, am]
    y = p * np.exp(1j * am * phi)
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return y if y.ndim else complex(y)


def sph_harm_table(lmax: int, theta, phi) -> np.ndarray:
    """All Y_lm for l <= lmax at the given points.

    Shape ``(n_points, (lmax + 1)**2)``; column ``l*l + l + m`` holds Y_lm.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    p = normalized_assoc_legendre_table(lmax, np.cos(theta))
    out = np.empty((theta.size, (lmax + 1) ** 2), dtype=complex)
    for m in range(lmax + 1):
        e = np.exp(1j * m * phi)
        for l in range(m, lmax + 1):
            pos = p[l, m] * e
            out[:, l * l + l + m] = pos
            if m > 0:
                out[:, l * l + l - m] = (-1) ** m * np.conj(pos)
    return out


# ---------------------------------------------------------------------------
# Caputo derivative


def caputo_l1_derivative(samples, beta: float, t_index: int, dt: float):
    """L1-scheme approximation of the Caputo derivative at ``t_index * dt``.

    ``samples[k]`` holds u(k dt); trailing axes are carried through, so a
    ``(n_times, n_points)`` array gives one derivative per point. The scheme
    is exact for piecewise-linear u and has order 2 - beta for smooth u.
    """
    u = np.asarray(samples)
    if u.shape[0] < 2:
        raise ValueError("need at least two time samples")
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = t_index if t_index >= 0 else u.shape[0] + t_index
    if not (1 <= n < u.shape[0]):
        raise ValueError(f"t_index must address a sample after t=0, got {t_index}")
    k = np.arange(n, dtype=float)
    weights = (k + 1.0) ** (1.0 - beta) - k ** (1.0 - beta)
    # increments u_{n-k} - u_{n-k-1} for k = 0..n-1
    incr = u[n:0:-1] - u[n - 1 :: -1][:n]
    total = np.tensordot(weights, incr, axes=(0, 0))
    return total / (math.gamma(2.0 - beta) * dt**beta)
