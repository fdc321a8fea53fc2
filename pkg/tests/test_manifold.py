import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fracfield.manifold import (
    IntervalDirichlet,
    SpectralCoefficients,
    Sphere2,
    Torus,
    TruncationWarning,
    heat_kernel,
    make_backend,
    sample_brownian_path,
    sample_brownian_transition,
    sphere_geodesic_cdf,
    weyl_diagnostic,
)
from fracfield.rng import make_rng
from fracfield.specfun import spherical_harmonic

BACKENDS = [Sphere2(12), Torus(1, 24), Torus(2, 8), IntervalDirichlet(64)]
ids = [b.backend_id for b in BACKENDS]


@pytest.mark.parametrize("backend", BACKENDS, ids=ids)
def test_eigenvalues_sorted_and_first(backend):
    assert np.all(np.diff(backend.eigenvalues) >= 0)
    if backend.closed:
        assert backend.eigenvalues[0] == 0
    else:
        assert backend.eigenvalues[0] > 0


@pytest.mark.parametrize("backend", BACKENDS, ids=ids)
def test_gram_identity(backend):
    G = backend.gram_matrix(min(backend.n_modes, 100))
    assert np.max(np.abs(G - np.eye(G.shape[0]))) < 1e-10


def test_sphere_multiplicity():
    s = Sphere2(20)
    mult = s.multiplicities()
    for l in range(21):
        j = s.index(l, 0)
        assert s.eigenvalues[j] == l * (l + 1)
        assert mult[j] == 2 * l + 1


def test_eigen_table_columns():
    rows = Torus(2, 3).eigen_table()
    assert set(rows[0]) == {"index", "degree", "mode", "eigenvalue", "multiplicity"}
    assert rows[1]["multiplicity"] == 4  # |k| = 1 on the square lattice


def test_project_examples():
    s = Sphere2(10)
    c = s.project(lambda p: np.full(len(p), 2.5)).values
    assert c[0] == pytest.approx(2.5 * math.sqrt(4 * math.pi))
    assert np.max(np.abs(c[1:])) < 1e-12
    c = s.project(lambda p: spherical_harmonic(2, 1, p[:, 0], p[:, 1])).values
    assert c[s.index(2, 1)] == pytest.approx(1.0)
    assert np.max(np.abs(np.delete(c, s.index(2, 1)))) <= 1e-10
    c = s.project(lambda p: np.cos(p[:, 0])).values
    # cos(theta) = sqrt(4 pi / 3) Y_10; constant checked against a 200-node Gauss-Legendre integral
    x, w = np.polynomial.legendre.leggauss(200)
    oracle = 2 * math.pi * np.sum(w * x * x * math.sqrt(3 / (4 * math.pi)))
    assert c[s.index(1, 0)] == pytest.approx(oracle, abs=1e-12)
    assert np.max(np.abs(np.delete(c, s.index(1, 0)))) < 1e-12


@pytest.mark.parametrize("backend", BACKENDS, ids=ids)
def test_reconstruct_then_project(backend):
    rng = make_rng(1, backend.name)
    v = rng.standard_normal(backend.n_modes) * np.exp(-0.05 * backend.eigenvalues)
    if backend.complex_basis:
        v = v + 1j * rng.standard_normal(backend.n_modes) * np.exp(-0.05 * backend.eigenvalues)
    back = backend.project(lambda p: backend.evaluate(v, p)).values
    assert np.max(np.abs(back - v)) < 1e-10


def test_sphere_kernel_long_time_and_mass():
    s = Sphere2(32)
    x, y = np.array([0.3, 1.0]), np.array([2.0, 4.0])
    assert heat_kernel(s, x, y, 40.0) == pytest.approx(1 / (4 * math.pi), abs=1e-15)
    nodes, w = s.quadrature()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        assert np.sum(w * heat_kernel(s, x, nodes, 0.05)) == pytest.approx(1.0, abs=1e-8)


def test_torus_mass():
    T = Torus(2, 16)
    nodes, w = T.quadrature()
    assert np.sum(w * heat_kernel(T, [0.3, -1.0], nodes, 0.2)) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0])
def test_torus_eigen_vs_images(t):
    T = Torus(1)
    assert T.heat_kernel_eigensum([1.0], [0.0], t) == pytest.approx(float(T.heat_kernel_images([1.0], [0.0], t)), abs=1e-12)


def test_torus2_eigen_vs_images():
    T = Torus(2, 40)
    x, y = np.array([1.0, 0.5]), np.array([-2.5, 3.0])
    assert T.heat_kernel_eigensum(x, y, 0.3) == pytest.approx(float(T.heat_kernel_images(x, y, 0.3)), abs=1e-12)


@pytest.mark.parametrize("backend", [Sphere2(32), Torus(1), IntervalDirichlet()], ids=lambda b: b.backend_id)
def test_chapman_kolmogorov(backend):
    rng = make_rng(2, backend.name)
    x, y = backend.random_points(2, rng)
    nodes, w = backend.quadrature()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        lhs = np.sum(w * heat_kernel(backend, x, nodes, 0.15) * heat_kernel(backend, nodes, y, 0.25))
        assert lhs == pytest.approx(heat_kernel(backend, x, y, 0.4), abs=1e-6)


@pytest.mark.parametrize("backend", BACKENDS, ids=ids)
def test_kernel_symmetry(backend):
    rng = make_rng(3, backend.name)
    x = backend.random_points(20, rng)
    y = backend.random_points(20, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        np.testing.assert_allclose(heat_kernel(backend, x, y, 0.3), heat_kernel(backend, y, x, 0.3), atol=1e-14)


def test_interval_kernel_positive():
    I = IntervalDirichlet()
    x = np.linspace(0.01, math.pi - 0.01, 60)
    xx, yy = np.meshgrid(x, x)
    for t in (0.01, 0.1, 1.0):
        assert np.min(heat_kernel(I, xx.ravel(), yy.ravel(), t)) >= -1e-10


def test_kernel_errors_and_warning():
    with pytest.raises(ValueError):
        heat_kernel(Sphere2(4), [0.1, 0.2], [0.3, 0.4], 0.0)
    with pytest.warns(TruncationWarning):
        heat_kernel(Sphere2(4), [0.1, 0.2], [0.3, 0.4], 0.01)


def test_weyl_examples():
    assert 0.8 <= weyl_diagnostic(Sphere2(64), 200).last <= 1.2
    assert 0.8 <= weyl_diagnostic(Torus(2), 500).last <= 1.2
    np.testing.assert_allclose(weyl_diagnostic(IntervalDirichlet(), 512).ratio, 1.0)
    with pytest.raises(ValueError):
        weyl_diagnostic(Sphere2(4), 1000)


def test_sphere_transition_law_ks():
    s = Sphere2(8)
    start = np.tile([[0.0, 0.0]], (100_000, 1))
    end, alive = sample_brownian_transition(s, start, 0.1, make_rng(4, "sphere"))
    assert alive.all()
    assert stats.kstest(end[:, 0], lambda g: sphere_geodesic_cdf(g, 0.1)).pvalue > 0.01


def test_sphere_geodesic_density_matches_kernel():
    # d/dg CDF = 2 pi sin(g) p(g, dt)
    s = Sphere2(64)
    g = np.linspace(0.1, 3.0, 15)
    h = 1e-6
    dens = (sphere_geodesic_cdf(g + h, 0.1) - sphere_geodesic_cdf(g - h, 0.1)) / (2 * h)
    kern = heat_kernel(s, np.stack([g, np.zeros_like(g)], -1), np.array([0.0, 0.0]), 0.1)
    np.testing.assert_allclose(dens, 2 * math.pi * np.sin(g) * kern, rtol=1e-6, atol=1e-8)


def test_sphere_two_steps_equal_one():
    s = Sphere2(8)
    rng = make_rng(5, "two_step")
    start = np.tile([[1.1, 0.4]], (100_000, 1))
    one, _ = s.sample_transition(start, 0.2, rng)
    two, _ = s.sample_transition(s.sample_transition(start, 0.1, rng)[0], 0.1, rng)
    assert stats.ks_2samp(np.cos(one[:, 0]), np.cos(two[:, 0])).pvalue > 0.01
    assert stats.ks_2samp(one[:, 1], two[:, 1]).pvalue > 0.01


def test_torus_short_step_is_gaussian():
    T = Torus(1)
    rng = make_rng(6, "torus")
    end, _ = T.sample_transition(np.zeros((100_000, 1)), 0.01, rng)
    assert stats.kstest(end[:, 0], stats.norm(scale=math.sqrt(0.02)).cdf).pvalue > 0.01


def test_interval_survival_against_series():
    I = IntervalDirichlet()
    kappa = I.project(lambda p: np.ones(len(p))).values
    rng = make_rng(7, "interval")
    for t in (0.2, 0.5, 2.0):
        _, alive = I.sample_transition(np.full((100_000, 1), 1.0), t, rng)
        series = float(np.sum(np.exp(-I.eigenvalues * t) * kappa * I.basis([1.0])[0]))
        se = math.sqrt(series * (1 - series) / alive.size)
        assert abs(alive.mean() - series) < 3 * se


def test_brownian_path_killed_is_absorbing():
    I = IntervalDirichlet(16)
    path = sample_brownian_path(I, np.full((500, 1), 0.3), np.linspace(0, 2, 21), make_rng(8))
    assert path.alive.shape == (21, 500)
    assert np.all(path.alive[1:] <= path.alive[:-1])
    assert np.all((path.points > 0) & (path.points < math.pi) | ~path.alive[..., None])


def test_transition_rejects_bad_dt():
    with pytest.raises(ValueError):
        sample_brownian_transition(Torus(1), [[0.0]], 0.0, make_rng(0))


@given(theta=st.floats(0, math.pi), phi=st.floats(0, 2 * math.pi), dt=st.floats(1e-6, 5.0))
@settings(max_examples=30, deadline=None)
def test_sphere_transition_stays_on_chart(theta, phi, dt):
    end, _ = Sphere2(4).sample_transition(np.array([[theta, phi]]), dt, make_rng(9))
    assert 0 <= end[0, 0] <= math.pi and 0 <= end[0, 1] < 2 * math.pi


@given(x=st.floats(-50, 50), dt=st.floats(1e-4, 10.0))
@settings(max_examples=30, deadline=None)
def test_torus_wraps(x, dt):
    end, _ = Torus(1).sample_transition(np.array([[x]]), dt, make_rng(10))
    assert -math.pi <= end[0, 0] < math.pi


def test_coefficients_validation():
    s = Sphere2(2)
    with pytest.raises(ValueError):
        SpectralCoefficients(s, np.zeros(3))
    with pytest.raises(ValueError):
        SpectralCoefficients(s, np.full(9, np.nan))


def test_make_backend():
    assert make_backend("sphere2", 4).n_modes == 25
    assert make_backend("torus2", 2).dim == 2
    assert make_backend("interval", 10).n_modes == 10
    with pytest.raises(ValueError):
        make_backend("mobius")
