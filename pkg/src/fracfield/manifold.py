"""Spectral backends: the unit sphere, flat tori and the Dirichlet interval.

Each backend exposes its Laplace-Beltrami eigenpairs (ordered by eigenvalue),
a quadrature rule, the heat kernel and an exact sampler for Brownian
transitions. Points are arrays whose last axis holds coordinates:
``(theta, phi)`` on the sphere, ``x in [-pi, pi)^n`` on the torus and
``x in (0, pi)`` on the interval.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma as gamma_fn

from .specfun import legendre_table, normalized_assoc_legendre_table, sph_harm_table

KERNEL_TOL = 1e-10
_CHUNK = 512


class TruncationWarning(UserWarning):
    """A truncated eigen-series may be inaccurate at the requested time."""


@dataclass
class SpectralCoefficients:
    """Coefficients of a function against a backend's eigenbasis."""

    backend: "SpectralBackend"
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.backend.n_modes,):
            raise ValueError(
                f"expected {self.backend.n_modes} coefficients, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("coefficients must be finite")

    @property
    def truncation(self) -> int:
        return self.values.size

    @property
    def backend_id(self) -> str:
        return self.backend.backend_id

    def evaluate(self, points) -> np.ndarray:
        return self.backend.evaluate(self.values, points)

    def copy_with(self, values) -> "SpectralCoefficients":
        return SpectralCoefficients(self.backend, values)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / gamma_fn(n / 2 + 1)


class SpectralBackend:
    """Common machinery; subclasses fill in the eigen-data."""

    name: str
    dim: int
    closed: bool
    volume: float
    complex_basis: bool
    eigenvalues: np.ndarray
    degree: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @property
    def backend_id(self) -> str:
        raise NotImplementedError

    @property
    def coeff_dtype(self):
        return complex if self.complex_basis else float

    # -- eigenfunctions ---------------------------------------------------
    def basis(self, points) -> np.ndarray:
        """Eigenfunction values, shape ``(n_points, n_modes)``."""
        raise NotImplementedError

    def sup_norms(self) -> np.ndarray:
        raise NotImplementedError

    def mode_labels(self) -> list[str]:
        raise NotImplementedError

    def evaluate(self, values, points) -> np.ndarray:
        """sum_j values_j phi_j(points); real part for real-valued fields."""
        pts = self._as_points(points)
        flat = pts.reshape(-1, self.dim)
        out = np.empty(flat.shape[0], dtype=complex if self.complex_basis else float)
        for start in range(0, flat.shape[0], _CHUNK):
            out[start : start + _CHUNK] = self.basis(flat[start : start + _CHUNK]) @ values
        return out.reshape(pts.shape[:-1])

    # -- quadrature -------------------------------------------------------
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def project(self, f: Callable[[np.ndarray], np.ndarray]) -> SpectralCoefficients:
        """kappa_j = int f conj(phi_j) dmu by the backend quadrature."""
        nodes, weights = self.quadrature()
        vals = np.asarray(f(nodes))
        out = np.zeros(self.n_modes, dtype=self.coeff_dtype)
        for start in range(0, nodes.shape[0], _CHUNK):
            b = self.basis(nodes[start : start + _CHUNK])
            out += np.conj(b).T @ (weights[start : start + _CHUNK] * vals[start : start + _CHUNK])
        return SpectralCoefficients(self, out)

    def gram_matrix(self, n: int) -> np.ndarray:
        nodes, weights = self.quadrature()
        b = self.basis(nodes)[:, :n]
        return np.conj(b).T @ (weights[:, None] * b)

    # -- kernels ----------------------------------------------------------
    def heat_kernel_eigensum(self, x, y, t: float) -> np.ndarray:
        """sum_j exp(-lam_j t) phi_j(x) conj(phi_j(y)), real part."""
        x = self._as_points(x)
        y = self._as_points(y)
        x, y = np.broadcast_arrays(x, y)
        bx = self.basis(x.reshape(-1, self.dim))
        by = self.basis(y.reshape(-1, self.dim))
        w = np.exp(-self.eigenvalues * t)
        vals = np.einsum("pj,j,pj->p", bx, w, np.conj(by))
        return np.real(vals).reshape(x.shape[:-1])

    def _kernel(self, x, y, t: float) -> np.ndarray:
        return self.heat_kernel_eigensum(x, y, t)

    def kernel_tail_bound(self, t: float) -> float:
        raise NotImplementedError

    # -- Brownian motion --------------------------------------------------
    def sample_transition(self, points, dt, rng: np.random.Generator):
        raise NotImplementedError

    def random_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # -- helpers ----------------------------------------------------------
    def _as_points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        if pts.shape[-1] != self.dim:
            raise ValueError(f"{self.name} points need {self.dim} coordinates, got shape {pts.shape}")
        return pts

    def multiplicities(self) -> np.ndarray:
        """Multiplicity of each mode's eigenvalue, aligned with the modes."""
        _, inverse, counts = np.unique(self.eigenvalues, return_inverse=True, return_counts=True)
        return counts[inverse]

    def eigen_table(self) -> list[dict]:
        mult = self.multiplicities()
        return [
            {
                "index": j,
                "degree": float(self.degree[j]),
                "mode": label,
                "eigenvalue": float(self.eigenvalues[j]),
                "multiplicity": int(mult[j]),
            }
            for j, label in enumerate(self.mode_labels())
        ]


# ---------------------------------------------------------------------------
# sphere


class Sphere2(SpectralBackend):
    """Unit sphere S^2 with complex spherical harmonics, l <= l_max.

    Mode index ``l*l + l + m`` holds Y_lm; eigenvalue l(l+1).
    """

    name = "sphere2"
    dim = 2
    closed = True
    volume = 4.0 * math.pi
    complex_basis = True

    def __init__(self, l_max: int = 64, n_theta: int | None = None):
        if l_max < 0:
            raise ValueError("l_max must be non-negative")
        self.l_max = l_max
        self.n_theta = n_theta if n_theta is not None else l_max + 1
        self.n_phi = 2 * self.n_theta
        ls = np.repeat(np.arange(l_max + 1), 2 * np.arange(l_max + 1) + 1)
        self.degree = ls
        self.order = np.concatenate([np.arange(-l, l + 1) for l in range(l_max + 1)])
        self.eigenvalues = (ls * (ls + 1)).astype(float)

    @property
    def backend_id(self) -> str:
        return f"sphere2(l_max={self.l_max})"

    def index(self, l: int, m: int) -> int:
        if not (0 <= l <= self.l_max and abs(m) <= l):
            raise ValueError(f"mode (l={l}, m={m}) not resolved at l_max={self.l_max}")
        return l * l + l + m

    def mode_labels(self) -> list[str]:
        return [f"{l}:{m}" for l, m in zip(self.degree, self.order)]

    def basis(self, points) -> np.ndarray:
        pts = self._as_points(points).reshape(-1, 2)
        return sph_harm_table(self.l_max, pts[:, 0], pts[:, 1])

    def sup_norms(self) -> np.ndarray:
        return np.sqrt((2 * self.degree + 1) / (4 * math.pi))

    def grid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gauss-Legendre in cos(theta) times a uniform phi grid.

        Exact for products of two band-limited functions of degree l_max
        when ``n_theta >= l_max + 1``.
        """
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        theta = np.arccos(x[::-1])
        w_theta = w[::-1]
        phi = 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi
        return theta, phi, w_theta * (2.0 * math.pi / self.n_phi)

    def quadrature(self):
        theta, phi, w = self.grid()
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        nodes = np.stack([tt.ravel(), pp.ravel()], axis=-1)
        weights = np.repeat(w, self.n_phi)
        return nodes, weights

    def project(self, f) -> SpectralCoefficients:
        """Spherical harmonic analysis: FFT in phi, Gauss-Legendre in theta."""
        nodes, _ = self.quadrature()
        theta, phi, w = self.grid()
        vals = np.asarray(f(nodes)).reshape(self.n_theta, self.n_phi)
        g = np.fft.fft(vals, axis=1)  # g[:, m] = sum_k f e^{-i m phi_k}
        plm = normalized_assoc_legendre_table(self.l_max, np.cos(theta))
        out = np.zeros(self.n_modes, dtype=complex)
        for m in range(-self.l_max, self.l_max + 1):
            am = abs(m)
            if am >= self.n_phi // 2 + 1 and m != 0:
                continue
            col = g[:, m % self.n_phi] * w
            sign = (-1) ** am if m < 0 else 1
            for l in range(am, self.l_max + 1):
                out[l * l + l + m] = sign * np.dot(plm[l, am], col)
        return SpectralCoefficients(self, out)

    def evaluate(self, values, points) -> np.ndarray:
        out = super().evaluate(values, points)
        return out

    def _kernel(self, x, y, t):
        cosg = _sphere_cos_angle(self._as_points(x), self._as_points(y))
        q = legendre_table(self.l_max, cosg)
        ls = np.arange(self.l_max + 1)
        w = np.exp(-ls * (ls + 1) * t) * (2 * ls + 1) / (4 * math.pi)
        return np.tensordot(w, q, axes=(0, 0))

    def kernel_tail_bound(self, t: float) -> float:
        ls = np.arange(self.l_max + 1, self.l_max + 2000)
        return float(np.sum(np.exp(-ls * (ls + 1.0) * t) * (2 * ls + 1) / (4 * math.pi)))

    def random_points(self, n, rng):
        z = rng.uniform(-1.0, 1.0, n)
        phi = rng.uniform(0.0, 2 * math.pi, n)
        return np.stack([np.arccos(z), phi], axis=-1)

    def sample_transition(self, points, dt, rng):
        pts = self._as_points(points)
        flat = pts.reshape(-1, 2)
        dt = np.broadcast_to(np.asarray(dt, dtype=float), flat.shape[:1])
        if np.any(dt < 0):
            raise ValueError("dt must be non-negative")
        gamma_ = sample_sphere_geodesic_angle(dt, rng)
        psi = rng.uniform(0.0, 2 * math.pi, flat.shape[0])
        new = _sphere_move(flat, gamma_, psi)
        return new.reshape(pts.shape), np.ones(pts.shape[:-1], dtype=bool)


def sphere_to_cartesian(points) -> np.ndarray:
    th, ph = points[..., 0], points[..., 1]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def cartesian_to_sphere(v) -> np.ndarray:
    th = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
    ph = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2 * math.pi)
    return np.stack([th, ph], axis=-1)


def _sphere_cos_angle(x, y) -> np.ndarray:
    return np.clip(np.sum(sphere_to_cartesian(x) * sphere_to_cartesian(y), axis=-1), -1.0, 1.0)


def _sphere_move(points, gamma_, psi) -> np.ndarray:
    th, ph = points[:, 0], points[:, 1]
    x = sphere_to_cartesian(points)
    e_th = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1)
    e_ph = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=-1)
    d = np.cos(psi)[:, None] * e_th + np.sin(psi)[:, None] * e_ph
    v = np.cos(gamma_)[:, None] * x + np.sin(gamma_)[:, None] * d
    return cartesian_to_sphere(v)


# below this duration the tangent-plane Gaussian is used (relative error ~ dt/6)
SPHERE_SMALL_DT = 1e-4


def sphere_geodesic_cdf(gamma_, dt) -> np.ndarray:
    """P(angle <= gamma) for Brownian motion on S^2 after time dt.

    Uses int_z^1 Q_l = (Q_{l-1}(z) - Q_{l+1}(z)) / (2l + 1), z = cos(gamma).
    """
    gamma_ = np.asarray(gamma_, dtype=float)
    dt = np.broadcast_to(np.asarray(dt, dtype=float), gamma_.shape)
    l_max = _sphere_cdf_degree(float(np.min(dt)))
    return _sphere_cdf(gamma_, dt, l_max)


def _sphere_cdf_degree(dt_min: float) -> int:
    return int(math.ceil(math.sqrt(40.0 / max(dt_min, SPHERE_SMALL_DT)))) + 2


def _sphere_cdf(gamma_, dt, l_max) -> np.ndarray:
    z = np.cos(gamma_)
    total = 0.5 * (1.0 - z)
    p_prev = np.ones_like(z)  # Q_{l-1}
    p_cur = z.copy()  # Q_l
    for l in range(1, l_max + 1):
        p_next = ((2 * l + 1) * z * p_cur - l * p_prev) / (l + 1)
        total = total + 0.5 * np.exp(-l * (l + 1.0) * dt) * (p_prev - p_next)
        p_prev, p_cur = p_cur, p_next
    return total


def sample_sphere_geodesic_angle(dt, rng: np.random.Generator, n_bisect: int = 52) -> np.ndarray:
    """Exact inverse-CDF draws of the geodesic angle travelled in time dt.

    Durations are grouped by the Legendre degree their series needs, and the
    closed-form CDF is inverted by vectorised bisection.
    """
    dt = np.asarray(dt, dtype=float)
    out = np.zeros(dt.shape)
    u = rng.uniform(0.0, 1.0, dt.shape)
    small = (dt > 0) & (dt < SPHERE_SMALL_DT)
    if np.any(small):
        # Rayleigh law of |N(0, 2 dt I_2)|
        out[small] = np.sqrt(-4.0 * dt[small] * np.log1p(-u[small]))
    big = dt >= SPHERE_SMALL_DT
    if np.any(big):
        degrees = np.array([_sphere_cdf_degree(d) for d in dt[big]])
        # bucket to powers of two so each group shares one recurrence length
        buckets = 2 ** np.ceil(np.log2(degrees)).astype(int)
        idx_big = np.nonzero(big)[0]
        for b in np.unique(buckets):
            idx = idx_big[buckets == b]
            lo = np.zeros(idx.size)
            hi = np.full(idx.size, math.pi)
            for _ in range(n_bisect):
                mid = 0.5 * (lo + hi)
                below = _sphere_cdf(mid, dt[idx], int(b)) < u[idx]
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out[idx] = 0.5 * (lo + hi)
    return out


# ---------------------------------------------------------------------------
# torus


class Torus(SpectralBackend):
    """Flat torus [-pi, pi)^n with basis (2 pi)^(-n/2) exp(i k.x), |k| <= k_max.

    Only complete eigenvalue shells are kept, so the enumeration is a prefix
    of the full spectrum.
    """

    closed = True
    complex_basis = True

    def __init__(self, n: int = 1, k_max: int = 64, n_grid: int | None = None):
        if n not in (1, 2):
            raise ValueError(f"Torus supports n = 1 or 2, got {n}")
        self.dim = n
        self.name = f"torus{n}"
        self.k_max = k_max
        self.volume = (2 * math.pi) ** n
        self.n_grid = n_grid if n_grid is not None else 2 * k_max + 2
        rng1 = np.arange(-k_max, k_max + 1)
        ks = np.stack(np.meshgrid(*([rng1] * n), indexing="ij"), axis=-1).reshape(-1, n)
        norm2 = np.sum(ks * ks, axis=1)
        keep = norm2 <= k_max * k_max
        ks, norm2 = ks[keep], norm2[keep]
        order = np.lexsort(tuple(ks[:, i] for i in reversed(range(n))) + (norm2,))
        self.wavenumbers = ks[order]
        self.eigenvalues = norm2[order].astype(float)
        self.degree = np.sqrt(self.eigenvalues)
        self._lookup = {tuple(k): j for j, k in enumerate(self.wavenumbers.tolist())}

    @property
    def backend_id(self) -> str:
        return f"torus{self.dim}(k_max={self.k_max})"

    def index(self, k) -> int:
        key = tuple(int(v) for v in np.atleast_1d(k))
        if key not in self._lookup:
            raise ValueError(f"wavenumber {key} not resolved at k_max={self.k_max}")
        return self._lookup[key]

    def mode_labels(self) -> list[str]:
        return [":".join(str(v) for v in k) for k in self.wavenumbers]

    def conjugate_index(self) -> np.ndarray:
        """Index of -k for each mode k."""
        return np.array([self._lookup[tuple(-v for v in k)] for k in self.wavenumbers.tolist()])

    def basis(self, points) -> np.ndarray:
        pts = self._as_points(points).reshape(-1, self.dim)
        phase = pts @ self.wavenumbers.T
        return np.exp(1j * phase) / (2 * math.pi) ** (self.dim / 2)

    def sup_norms(self) -> np.ndarray:
        return np.full(self.n_modes, (2 * math.pi) ** (-self.dim / 2))

    def grid_axis(self) -> np.ndarray:
        return -math.pi + 2 * math.pi * np.arange(self.n_grid) / self.n_grid

    def quadrature(self):
        ax = self.grid_axis()
        mesh = np.stack(np.meshgrid(*([ax] * self.dim), indexing="ij"), axis=-1)
        nodes = mesh.reshape(-1, self.dim)
        weights = np.full(nodes.shape[0], (2 * math.pi / self.n_grid) ** self.dim)
        return nodes, weights

    def project(self, f) -> SpectralCoefficients:
        nodes, _ = self.quadrature()
        vals = np.asarray(f(nodes)).reshape((self.n_grid,) * self.dim)
        g = np.fft.fftn(vals)
        idx = tuple((self.wavenumbers % self.n_grid).T)
        # grid starts at -pi, hence the (-1)^(sum k) phase
        sign = (-1.0) ** np.sum(self.wavenumbers, axis=1)
        scale = (2 * math.pi / self.n_grid) ** self.dim / (2 * math.pi) ** (self.dim / 2)
        return SpectralCoefficients(self, scale * sign * g[idx])

    def heat_kernel_images(self, x, y, t: float, n_images: int | None = None) -> np.ndarray:
        """Wrapped-Gaussian form (4 pi t)^(-n/2) sum_k exp(-|x - y - 2 pi k|^2 / 4t)."""
        d = self._as_points(x) - self._as_points(y)
        if n_images is None:
            n_images = int(math.ceil(math.sqrt(40.0 * t) / math.pi)) + 2
        r = np.arange(-n_images, n_images + 1)
        shifts = np.stack(np.meshgrid(*([r] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        diff = d[..., None, :] - 2 * math.pi * shifts
        s = np.sum(np.exp(-np.sum(diff * diff, axis=-1) / (4 * t)), axis=-1)
        return s / (4 * math.pi * t) ** (self.dim / 2)

    def _kernel(self, x, y, t):
        return self.heat_kernel_eigensum(x, y, t)

    def kernel_tail_bound(self, t: float) -> float:
        r = np.arange(-(self.k_max + 60), self.k_max + 61)
        if self.dim == 1:
            n2 = r * r
        else:
            n2 = (r[:, None] ** 2 + r[None, :] ** 2).ravel()
        tail = n2[n2 > self.k_max**2]
        return float(np.sum(np.exp(-tail * t)) / (2 * math.pi) ** self.dim)

    def random_points(self, n, rng):
        return rng.uniform(-math.pi, math.pi, (n, self.dim))

    def sample_transition(self, points, dt, rng):
        pts = self._as_points(points)
        dt = np.asarray(dt, dtype=float)
        if np.any(dt < 0):
            raise ValueError("dt must be non-negative")
        scale = np.sqrt(2.0 * dt)
        if scale.ndim:
            scale = scale.reshape(scale.shape + (1,))
        new = pts + scale * rng.standard_normal(pts.shape)
        return wrap_torus(new), np.ones(pts.shape[:-1], dtype=bool)


def wrap_torus(x) -> np.ndarray:
    return np.mod(np.asarray(x) + math.pi, 2 * math.pi) - math.pi


# ---------------------------------------------------------------------------
# Dirichlet interval


class IntervalDirichlet(SpectralBackend):
    """(0, pi) with Dirichlet conditions: phi_j = sqrt(2/pi) sin(j x), lam_j = j^2."""

    name = "interval"
    dim = 1
    closed = False
    volume = math.pi
    complex_basis = False

    def __init__(self, j_max: int = 512, n_quad: int | None = None):
        if j_max < 1:
            raise ValueError("j_max must be at least 1")
        self.j_max = j_max
        self.n_quad = n_quad if n_quad is not None else max(2 * j_max, 64)
        self.modes = np.arange(1, j_max + 1)
        self.eigenvalues = (self.modes**2).astype(float)
        self.degree = self.modes

    @property
    def backend_id(self) -> str:
        return f"interval(j_max={self.j_max})"

    def index(self, j: int) -> int:
        if not (1 <= j <= self.j_max):
            raise ValueError(f"mode {j} not resolved at j_max={self.j_max}")
        return j - 1

    def mode_labels(self) -> list[str]:
        return [str(j) for j in self.modes]

    def basis(self, points) -> np.ndarray:
        x = self._as_points(points).reshape(-1)
        return math.sqrt(2 / math.pi) * np.sin(np.outer(x, self.modes))

    def sup_norms(self) -> np.ndarray:
        return np.full(self.n_modes, math.sqrt(2 / math.pi))

    def quadrature(self):
        x, w = np.polynomial.legendre.leggauss(self.n_quad)
        return (0.5 * math.pi * (x + 1.0))[:, None], 0.5 * math.pi * w

    def _kernel(self, x, y, t):
        x = self._as_points(x)[..., 0]
        y = self._as_points(y)[..., 0]
        x, y = np.broadcast_arrays(x, y)
        s = np.zeros(x.shape)
        for j, lam in zip(self.modes, self.eigenvalues):
            w = math.exp(-lam * t)
            if w < 1e-300:
                break
            s = s + w * np.sin(j * x) * np.sin(j * y)
        return (2 / math.pi) * s

    def kernel_tail_bound(self, t: float) -> float:
        j = np.arange(self.j_max + 1, self.j_max + 2000, dtype=float)
        return float(np.sum(np.exp(-j * j * t)) * 2 / math.pi)

    def random_points(self, n, rng):
        return rng.uniform(0.0, math.pi, (n, 1))

    def survival_given_endpoint(self, x, y, dt) -> np.ndarray:
        """P(bridge from x to y over dt stays in (0, pi)), for x, y inside."""
        x, y, dt = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, dt)))
        out = np.zeros(x.shape)
        short = dt <= 1.0
        if np.any(short):
            xs, ys, ts = x[short], y[short], dt[short]
            k = np.arange(-6, 7)[:, None]
            d0 = (ys - xs) ** 2
            free = np.exp(-((ys - xs + 2 * math.pi * k) ** 2 - d0) / (4 * ts))
            refl = np.exp(-((ys + xs + 2 * math.pi * k) ** 2 - d0) / (4 * ts))
            out[short] = np.sum(free - refl, axis=0)
        long_ = ~short
        if np.any(long_):
            xl, yl, tl = x[long_], y[long_], dt[long_]
            j = np.arange(1, 40)[:, None]
            killed = (2 / math.pi) * np.sum(
                np.exp(-j * j * tl) * np.sin(j * xl) * np.sin(j * yl), axis=0
            )
            free = np.exp(-((yl - xl) ** 2) / (4 * tl)) / np.sqrt(4 * math.pi * tl)
            out[long_] = killed / free
        return np.clip(out, 0.0, 1.0)

    def sample_transition(self, points, dt, rng):
        """Free Gaussian step, killed with the exact bridge-crossing probability."""
        pts = self._as_points(points)
        x = pts[..., 0]
        dt = np.broadcast_to(np.asarray(dt, dtype=float), x.shape)
        if np.any(dt < 0):
            raise ValueError("dt must be non-negative")
        y = x + np.sqrt(2.0 * dt) * rng.standard_normal(x.shape)
        u = rng.uniform(0.0, 1.0, x.shape)
        inside = (y > 0) & (y < math.pi)
        alive = inside.copy()
        moving = inside & (dt > 0)
        if np.any(moving):
            p = self.survival_given_endpoint(x[moving], y[moving], dt[moving])
            alive[moving] = u[moving] < p
        y = np.where(alive, y, np.clip(y, 0.0, math.pi))
        return y[..., None], alive


# ---------------------------------------------------------------------------
# module-level operations


def make_backend(name: str, truncation: int | None = None, quadrature: int | None = None):
    """Build a backend from its config name."""
    key = name.lower()
    if key == "sphere2":
        return Sphere2(l_max=64 if truncation is None else truncation, n_theta=quadrature)
    if key in ("torus1", "torus2"):
        n = int(key[-1])
        return Torus(n=n, k_max=64 if truncation is None else truncation, n_grid=quadrature)
    if key == "interval":
        return IntervalDirichlet(j_max=512 if truncation is None else truncation, n_quad=quadrature)
    raise ValueError(f"unknown backend {name!r}; expected sphere2, torus1, torus2 or interval")


def heat_kernel(backend: SpectralBackend, x, y, t: float, tol: float = KERNEL_TOL):
    """Heat kernel p(x, y, t) from the truncated eigen-expansion.

    Emits :class:`TruncationWarning` when the tail bound exceeds ``tol``.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    tail = backend.kernel_tail_bound(t)
    if tail > tol:
        warnings.warn(
            f"{backend.backend_id}: truncation tail bound {tail:.2e} exceeds {tol:.0e} at t={t}",
            TruncationWarning,
            stacklevel=2,
        )
    out = backend._kernel(x, y, t)
    return out if np.ndim(out) else float(out)


def sample_brownian_transition(backend: SpectralBackend, start, dt, rng: np.random.Generator):
    """One exact draw from p(start, ., dt); returns ``(points, alive)``."""
    if np.any(np.asarray(dt) <= 0):
        raise ValueError("dt must be positive")
    return backend.sample_transition(start, dt, rng)


@dataclass
class BrownianPath:
    start: np.ndarray
    times: np.ndarray
    points: np.ndarray
    alive: np.ndarray = field(default=None)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("path times must be strictly increasing")
        if self.alive is None:
            self.alive = np.ones(self.times.shape, dtype=bool)


def sample_brownian_path(backend: SpectralBackend, start, times, rng: np.random.Generator) -> BrownianPath:
    """Brownian path observed at ``times`` (times[0] is the start time).

    Killed paths (interval backend) keep their last position and stay dead.
    """
    times = np.asarray(times, dtype=float)
    start = backend._as_points(start)
    pts = [start]
    alive = [np.ones(start.shape[:-1], dtype=bool)]
    cur, live = start, alive[0]
    for dt in np.diff(times):
        nxt, ok = backend.sample_transition(cur, dt, rng)
        live = live & ok
        cur = np.where(live[..., None], nxt, cur)
        pts.append(cur)
        alive.append(live)
    return BrownianPath(start, times, np.stack(pts), np.stack(alive))


def project(backend: SpectralBackend, f) -> SpectralCoefficients:
    return backend.project(f)


@dataclass(frozen=True)
class WeylReport:
    backend_id: str
    k: np.ndarray
    ratio: np.ndarray

    @property
    def last(self) -> float:
        return float(self.ratio[-1])


def weyl_diagnostic(backend: SpectralBackend, J: int) -> WeylReport:
    """lam_k^(n/2) omega_n V / ((2 pi)^n k) for k = 1..J; tends to 1."""
    if not (1 <= J <= backend.n_modes):
        raise ValueError(f"J must lie in 1..{backend.n_modes}")
    n = backend.dim
    k = np.arange(1, J + 1)
    lam = backend.eigenvalues[:J]
    ratio = lam ** (n / 2) * unit_ball_volume(n) * backend.volume / ((2 * math.pi) ** n * k)
    return WeylReport(backend.backend_id, k, ratio)


def display_grid(backend: SpectralBackend, n_grid: int = 33) -> tuple[np.ndarray, tuple[str, ...]]:
    """Regular plotting grid and its coordinate names."""
    if isinstance(backend, Sphere2):
        th = np.linspace(0.0, math.pi, n_grid)
        ph = np.linspace(0.0, 2 * math.pi, 2 * n_grid - 1)
        tt, pp = np.meshgrid(th, ph, indexing="ij")
        return np.stack([tt.ravel(), pp.ravel()], axis=-1), ("theta", "phi")
    if isinstance(backend, Torus):
        ax = np.linspace(-math.pi, math.pi, n_grid, endpoint=False)
        if backend.dim == 1:
            return ax[:, None], ("x",)
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=-1), ("x1", "x2")
    x = np.linspace(0.0, math.pi, n_grid + 2)[1:-1]
    return x[:, None], ("x",)
