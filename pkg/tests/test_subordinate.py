import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fracfield.rng import make_rng, split
from fracfield.specfun import mittag_leffler
from fracfield.subordinate import (
    Drift,
    Gamma,
    GeometricStable,
    Stable,
    StableWithDrift,
    Sum,
    UnsupportedExponentError,
    exponent_from_dict,
    exponent_to_dict,
    first_passage_inverse_stable,
    psi_eval,
    psi_from_levy_quadrature,
    sample_inverse_stable,
    sample_stable,
    sample_subordinator,
    sample_subordinator_path,
)

KINDS = [
    Stable(0.6),
    StableWithDrift(0.5, 0.6),
    Gamma(),
    GeometricStable(0.5),
    Sum(((0.4, Stable(0.3)), (0.6, GeometricStable(0.7)))),
]
alphas = st.floats(min_value=0.05, max_value=0.95)


def mc_z(values, exact):
    return (values.mean() - exact) / (values.std(ddof=1) / math.sqrt(values.size))


def test_psi_closed_forms():
    assert psi_eval(Stable(0.5), 1.0) == 1.0
    assert psi_eval(Gamma(), math.e - 1) == pytest.approx(1.0)
    assert psi_eval(GeometricStable(0.5), 4.0) == pytest.approx(math.log(3))
    assert psi_eval(StableWithDrift(2.0, 0.5), 4.0) == pytest.approx(10.0)
    assert psi_eval(Drift(3.0), 2.0) == 6.0
    mixed = Sum(((2.0, Stable(0.5)), (0.5, Gamma())))
    assert psi_eval(mixed, 4.0) == pytest.approx(2 * 2 + 0.5 * math.log(5))


def test_psi_rejects_negative():
    with pytest.raises(ValueError):
        psi_eval(Stable(0.5), -1.0)


@pytest.mark.parametrize("spec", KINDS + [Drift(1.0)])
def test_psi_zero_exact(spec):
    assert psi_eval(spec, 0.0) == 0.0


@pytest.mark.parametrize("spec", KINDS)
def test_psi_nondecreasing_concave(spec):
    xi = np.linspace(0, 50, 2001)
    v = psi_eval(spec, xi)
    d = np.diff(v)
    assert np.all(d >= 0)
    assert np.all(np.diff(d) <= 1e-12)


@pytest.mark.parametrize("spec", [Stable(0.6), Gamma(), GeometricStable(0.5)])
def test_zero_drift_ratio(spec):
    r6 = psi_eval(spec, 1e6) / 1e6
    r3 = psi_eval(spec, 1e3) / 1e3
    assert r6 < 0.1 * r3


@pytest.mark.parametrize(
    "spec", [Stable(0.3), Stable(0.5), Stable(0.9), Gamma(), GeometricStable(0.2), GeometricStable(0.5), GeometricStable(0.9)]
)
@pytest.mark.parametrize("xi", [0.1, 1.0, 10.0, 100.0])
def test_levy_quadrature_matches_closed_form(spec, xi):
    assert psi_from_levy_quadrature(spec, xi) == pytest.approx(float(psi_eval(spec, xi)), rel=1e-6)


def test_levy_quadrature_examples():
    assert psi_from_levy_quadrature(Stable(0.5), 2.0) == pytest.approx(math.sqrt(2), rel=1e-6)
    assert psi_from_levy_quadrature(Gamma(), 1.0) == pytest.approx(math.log(2), rel=1e-6)
    assert psi_from_levy_quadrature(GeometricStable(0.4), 0.0) == 0.0
    with pytest.raises(UnsupportedExponentError):
        psi_from_levy_quadrature(StableWithDrift(1.0, 0.5), 1.0)


def test_stable_laplace_transform():
    x = sample_stable(0.6, 1.0, make_rng(1, "stable"), 100_000)
    assert np.all(x >= 0)
    assert abs(mc_z(np.exp(-x), math.exp(-1))) < 3


def test_stable_self_similarity():
    rng = make_rng(2, "scaling")
    a = sample_stable(0.7, 3.0, rng, 20_000)
    b = 3.0 ** (1 / 0.7) * sample_stable(0.7, 1.0, rng, 20_000)
    assert stats.ks_2samp(np.log(a), np.log(b)).pvalue > 0.01


def test_inverse_stable_examples():
    rng = make_rng(3, "inverse")
    assert np.all(sample_inverse_stable(0.5, 0.0, rng, 10) == 0)
    e = sample_inverse_stable(0.5, 1.0, rng, 100_000)
    assert abs(mc_z(np.exp(-e), mittag_leffler(0.5, -1.0))) < 3
    e95 = sample_inverse_stable(0.95, 1.0, rng, 100_000)
    assert 0.7 <= np.median(e95) <= 1.3


def test_first_passage_matches_exact_law():
    rng = make_rng(4, "first_passage")
    e = first_passage_inverse_stable(0.5, 1.0, rng, 20_000, step=1e-3)
    assert abs(mc_z(np.exp(-e), mittag_leffler(0.5, -1.0))) < 3
    assert np.all(first_passage_inverse_stable(0.5, 0.0, rng, 5) == 0)


def test_drift_shift_is_exact():
    a = sample_subordinator(StableWithDrift(2.0, 0.5), 1.0, make_rng(5, "x"), 100)
    b = sample_stable(0.5, 1.0, make_rng(5, "x"), 100)
    np.testing.assert_allclose(a - b, 2.0, atol=1e-12)


@pytest.mark.parametrize("spec", KINDS, ids=lambda s: type(s).__name__)
def test_subordinator_laplace_transforms(spec):
    rng = make_rng(6, repr(spec))
    for t in (0.5, 1.0, 2.0):
        x = sample_subordinator(spec, t, rng, 100_000)
        assert np.all(x >= 0)
        for xi in (0.5, 1.0, 2.0):
            assert abs(mc_z(np.exp(-xi * x), math.exp(-t * psi_eval(spec, xi)))) < 3


def test_gamma_and_geometric_examples():
    rng = make_rng(7, "examples")
    g = sample_subordinator(Gamma(), 1.0, rng, 100_000)
    assert abs(mc_z(np.exp(-g), 0.5)) < 3
    h = sample_subordinator(GeometricStable(0.5), 1.0, rng, 100_000)
    assert abs(mc_z(np.exp(-h), 0.5)) < 3


@pytest.mark.parametrize("spec", KINDS, ids=lambda s: type(s).__name__)
def test_paths_nondecreasing(spec):
    rng = make_rng(8, repr(spec))
    for _ in range(20):
        path = sample_subordinator_path(spec, np.linspace(0.0, 3.0, 150), rng)
        assert path[0] == 0.0
        assert np.all(np.diff(path) >= 0)


@given(alpha=alphas, t=st.floats(min_value=1e-3, max_value=10.0), seed=st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_stable_draws_positive(alpha, t, seed):
    x = sample_stable(alpha, t, make_rng(seed), 200)
    assert np.all(x >= 0) and np.all(np.isfinite(x) | (x == np.inf))


@given(alpha=alphas, xi=st.floats(min_value=0.0, max_value=1e4))
def test_stable_psi_property(alpha, xi):
    assert psi_eval(Stable(alpha), xi) == pytest.approx(xi**alpha)


def test_invalid_parameters():
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            Stable(bad)
    with pytest.raises(ValueError):
        StableWithDrift(-1.0, 0.5)
    with pytest.raises(ValueError):
        sample_stable(0.5, 0.0, make_rng(0))


@pytest.mark.parametrize("spec", KINDS + [Drift(2.0)], ids=lambda s: type(s).__name__)
def test_exponent_dict_round_trip(spec):
    d = exponent_to_dict(spec)
    assert exponent_from_dict(d) == spec
    assert exponent_to_dict(exponent_from_dict(d)) == d


def test_exponent_dict_rejects_unknown():
    with pytest.raises(ValueError, match="unknown keys"):
        exponent_from_dict({"kind": "stable", "alpha": 0.5, "beta": 1})
    with pytest.raises(ValueError, match="unknown kind"):
        exponent_from_dict({"kind": "tempered"})


def test_rng_streams_reproducible_and_distinct():
    a = make_rng(42, "paths", 3).standard_normal(5)
    b = make_rng(42, "paths", 3).standard_normal(5)
    c = make_rng(42, "paths", 4).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    kids = split(make_rng(1), 3)
    assert len({k.standard_normal() for k in kids}) == 3
    with pytest.raises(ValueError):
        make_rng(-1)
