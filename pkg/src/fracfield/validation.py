"""Invariant suites behind ``fracfield validate``.

Every check returns a record with measured values and a pass flag; reports
contain no timings so repeated runs with one seed are byte-identical.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import special, stats

from . import __version__
from .fields import (
    InverseStable,
    PowerSpectrum,
    Subordinate,
    estimate_spectrum,
    evolve,
    loglog_slope,
    model_variance,
    sample_coordinate_changed_batch,
    shell_model,
    synthesize,
    synthesize_coefficients,
)
from .manifold import (
    IntervalDirichlet,
    Sphere2,
    Torus,
    TruncationWarning,
    heat_kernel,
    sphere_geodesic_cdf,
    weyl_diagnostic,
)
from .rng import make_rng
from .solver import (
    Heat,
    SpaceFractional,
    TimeFractional,
    frac_space_solve,
    frac_time_solve,
    heat_solve,
    mc_solution,
    multiplier,
    pde_residual,
)
from .specfun import (
    caputo_l1_derivative,
    legendre_poly,
    mittag_leffler,
    mittag_leffler_integral_oracle,
    sph_harm_table,
)
from .subordinate import (
    Drift,
    Gamma,
    GeometricStable,
    Stable,
    StableWithDrift,
    Sum,
    psi_eval,
    psi_from_levy_quadrature,
    sample_inverse_stable,
    sample_subordinator,
    sample_subordinator_path,
)

SUITES = ("specfun", "subordinate", "manifold", "solver", "fields")


def _check(suite: str, name: str, passed: bool, detail: str, **measured) -> dict:
    return {"suite": suite, "name": name, "passed": bool(passed), "detail": detail, "measured": measured}


def fitted_order(hs, errs) -> float:
    """Slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


# ---------------------------------------------------------------------------
# specfun


def specfun_suite(seed: int) -> list[dict]:
    S = "specfun"
    out = []
    x = np.logspace(-3, 3, 200)
    worst = 0.0
    ok = True
    for beta in (0.3, 0.5, 0.7, 0.9):
        e = mittag_leffler(beta, -(x**beta))
        bound = 1.0 / (1.0 + x**beta)
        ok &= bool(np.all(e >= 0) and np.all(e <= bound))
        worst = max(worst, float(np.max(e - bound)))
    out.append(_check(S, "ml_bound_grid", ok, "0 <= E_b(-x^b) <= 1/(1+x^b) on 4x200 grid", max_excess=worst))

    z = np.linspace(-30, 0, 61)
    err = float(np.max(np.abs(mittag_leffler(1.0, z) - np.exp(z)) / np.exp(z)))
    out.append(_check(S, "ml_beta_one_exp", err < 1e-12, "E_1(z) = exp(z), z in [-30, 0], relative", max_rel_err=err))

    xs = np.linspace(0.01, 25, 50)
    err = float(np.max(np.abs(mittag_leffler(0.5, -xs) - special.erfcx(xs))))
    out.append(_check(S, "ml_half_erfcx", err < 1e-10, "E_1/2(-x) = exp(x^2) erfc(x)", max_abs_err=err))

    worst = 0.0
    for beta in (0.3, 0.5, 0.7, 0.9):
        for zz in -np.linspace(0.0, 20.0, 50):
            worst = max(worst, abs(mittag_leffler(beta, zz) - mittag_leffler_integral_oracle(beta, zz)))
    out.append(_check(S, "ml_vs_talbot_oracle", worst < 1e-9, "branches vs Talbot inversion, 4x50 grid", max_abs_err=worst))

    x_gl, w_gl = np.polynomial.legendre.leggauss(20)
    th = np.arccos(x_gl)
    ph = 2 * math.pi * np.arange(40) / 40
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    Y = sph_harm_table(8, tt.ravel(), pp.ravel())
    w = np.repeat(w_gl * 2 * math.pi / 40, 40)
    err = float(np.max(np.abs(np.conj(Y).T @ (w[:, None] * Y) - np.eye(Y.shape[1]))))
    out.append(_check(S, "sph_harm_gram", err < 1e-8, "Gram matrix of Y_lm, l <= 8", max_abs_err=err))

    rng = make_rng(seed, S, "addition")
    a = np.stack([np.arccos(rng.uniform(-1, 1, 100)), rng.uniform(0, 2 * math.pi, 100)], -1)
    b = np.stack([np.arccos(rng.uniform(-1, 1, 100)), rng.uniform(0, 2 * math.pi, 100)], -1)
    Ya = sph_harm_table(16, a[:, 0], a[:, 1])
    Yb = sph_harm_table(16, b[:, 0], b[:, 1])
    cosg = (np.sin(a[:, 0]) * np.sin(b[:, 0]) * np.cos(a[:, 1] - b[:, 1]) + np.cos(a[:, 0]) * np.cos(b[:, 0]))
    worst = 0.0
    for l in range(17):
        sl = slice(l * l, (l + 1) ** 2)
        lhs = np.sum(Ya[:, sl] * np.conj(Yb[:, sl]), axis=1)
        rhs = (2 * l + 1) / (4 * math.pi) * legendre_poly(l, cosg)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    out.append(_check(S, "addition_formula", worst < 1e-10, "sum_m Y_lm(x) Y*_lm(y) vs Legendre, l <= 16", max_abs_err=worst))

    beta, lam = 0.5, 1.0
    ns = [32, 64, 128, 256, 512]
    errs = []
    for n in ns:
        t = np.linspace(0, 1, n + 1)
        u = mittag_leffler(beta, -lam * t**beta)
        errs.append(abs(caputo_l1_derivative(u, beta, n, 1.0 / n) + lam * u[-1]))
    order = fitted_order(1.0 / np.array(ns), errs)
    out.append(_check(S, "caputo_eigenfunction_order", order >= 1.4, "L1 order on E_b(-t^b), b = 0.5", order=order, errors=errs))
    return out


# ---------------------------------------------------------------------------
# subordinate


SHIPPED = {
    "stable": Stable(0.6),
    "stable_with_drift": StableWithDrift(0.5, 0.6),
    "gamma": Gamma(),
    "geometric_stable": GeometricStable(0.5),
    "sum": Sum(((0.5, Stable(0.3)), (0.5, GeometricStable(0.7)))),
}


def subordinate_suite(seed: int) -> list[dict]:
    S = "subordinate"
    out = []
    zeros = {k: float(psi_eval(p, 0.0)) for k, p in SHIPPED.items()}
    out.append(_check(S, "psi_zero", all(v == 0 for v in zeros.values()), "Psi(0) = 0 for every kind", values=zeros))

    worst = 0.0
    for spec in (Stable(0.3), Stable(0.5), Stable(0.9), Gamma(), GeometricStable(0.5)):
        for xi in (0.1, 1.0, 10.0, 100.0):
            q = psi_from_levy_quadrature(spec, xi)
            worst = max(worst, abs(q / float(psi_eval(spec, xi)) - 1))
    out.append(_check(S, "levy_quadrature", worst < 1e-6, "Levy integral vs closed form, xi in [0.1, 100]", max_rel_err=worst))

    n = 100_000
    table = []
    for name, spec in SHIPPED.items():
        rng = make_rng(seed, S, "laplace", name)
        for t in (0.5, 1.0, 2.0):
            x = sample_subordinator(spec, t, rng, n)
            for xi in (0.5, 1.0, 2.0):
                v = np.exp(-xi * x)
                exact = math.exp(-t * float(psi_eval(spec, xi)))
                table.append({"kind": name, "t": t, "xi": xi, "z": float((v.mean() - exact) / (v.std(ddof=1) / math.sqrt(n)))})
    rng = make_rng(seed, S, "laplace", "inverse_stable")
    for beta in (0.3, 0.5, 0.7, 0.9):
        for t in (0.5, 1.0, 2.0):
            e = sample_inverse_stable(beta, t, rng, n)
            for lam in (0.5, 1.0, 4.0):
                v = np.exp(-lam * e)
                exact = mittag_leffler(beta, -lam * t**beta)
                table.append({"kind": f"inverse_stable_{beta}", "t": t, "xi": lam, "z": float((v.mean() - exact) / (v.std(ddof=1) / math.sqrt(n)))})
    zmax = max(abs(r["z"]) for r in table)
    out.append(_check(S, "laplace_transform_mc", zmax <= 3, "MC Laplace transforms within 3 SE (N = 1e5)", max_abs_z=zmax, table=table))

    ratios = {}
    for k in ("stable", "gamma", "geometric_stable"):
        spec = SHIPPED[k]
        ratios[k] = float(psi_eval(spec, 1e6) / 1e6) / float(psi_eval(spec, 1e3) / 1e3)
    out.append(_check(S, "zero_drift", all(r < 0.1 for r in ratios.values()), "Psi(xi)/xi shrinks by 10x from 1e3 to 1e6", ratios=ratios))

    rng = make_rng(seed, S, "paths")
    mono = True
    for spec in SHIPPED.values():
        for _ in range(50):
            path = sample_subordinator_path(spec, np.linspace(0.01, 2.0, 200), rng)
            mono &= bool(np.all(np.diff(path) >= 0) and path[0] >= 0)
    out.append(_check(S, "paths_nondecreasing", mono, "250 subordinator paths are nondecreasing"))
    return out


# ---------------------------------------------------------------------------
# manifold


def manifold_suite(seed: int) -> list[dict]:
    S = "manifold"
    out = []
    rng = make_rng(seed, S, "points")
    ck = {}
    for backend in (Sphere2(32), Torus(1), IntervalDirichlet()):
        nodes, w = backend.quadrature()
        x, y = backend.random_points(2, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            lhs = np.sum(w * heat_kernel(backend, x, nodes, 0.2) * heat_kernel(backend, nodes, y, 0.3))
            rhs = heat_kernel(backend, x, y, 0.5)
        ck[backend.name] = float(abs(lhs - rhs))
    out.append(_check(S, "chapman_kolmogorov", max(ck.values()) < 1e-6, "int p(x,z,t) p(z,y,s) dz = p(x,y,t+s)", errors=ck))

    T = Torus(1)
    worst = 0.0
    for t in np.linspace(0.1, 2.0, 20):
        x, y = T.random_points(2, rng)
        worst = max(worst, abs(float(T.heat_kernel_eigensum(x, y, t)) - float(T.heat_kernel_images(x, y, t))))
    out.append(_check(S, "torus_eigen_vs_images", worst < 1e-12, "torus eigen-sum vs wrapped Gaussian, t in [0.1, 2]", max_abs_err=worst))

    s = Sphere2(32)
    nodes, w = s.quadrature()
    mass = float(abs(np.sum(w * heat_kernel(s, s.random_points(1, rng)[0], nodes, 0.1)) - 1))
    out.append(_check(S, "sphere_kernel_mass", mass < 1e-8, "sphere kernel integrates to 1", abs_err=mass))

    weyl = {
        "sphere2_k200": weyl_diagnostic(Sphere2(64), 200).last,
        "torus2_k500": weyl_diagnostic(Torus(2), 500).last,
        "interval_k512": weyl_diagnostic(IntervalDirichlet(), 512).last,
    }
    out.append(_check(S, "weyl_law", all(0.8 <= v <= 1.2 for v in weyl.values()), "Weyl ratio within 20%", ratios=weyl))

    srng = make_rng(seed, S, "sphere_sampler")
    start = np.tile([[0.7, 1.3]], (100_000, 1))
    end, _ = Sphere2(8).sample_transition(start, 0.2, srng)
    cosg = np.clip(np.sum(_cart(start) * _cart(end), axis=1), -1, 1)
    p = float(stats.kstest(np.arccos(cosg), lambda g: sphere_geodesic_cdf(g, 0.2)).pvalue)
    out.append(_check(S, "sphere_transition_ks", p > 0.01, "geodesic angle vs Legendre-series law, KS", pvalue=p))

    one, _ = Sphere2(8).sample_transition(start, 0.2, srng)
    two, _ = Sphere2(8).sample_transition(Sphere2(8).sample_transition(start, 0.1, srng)[0], 0.1, srng)
    p2 = float(stats.ks_2samp(np.cos(one[:, 0]), np.cos(two[:, 0])).pvalue)
    out.append(_check(S, "sphere_two_step_ks", p2 > 0.01, "one step dt vs two steps dt/2, KS", pvalue=p2))

    I = IntervalDirichlet()
    irng = make_rng(seed, S, "interval")
    t = 0.5
    _, alive = I.sample_transition(np.full((100_000, 1), 1.0), t, irng)
    kappa = I.project(lambda p: np.ones(len(p))).values
    series = float(np.sum(np.exp(-I.eigenvalues * t) * kappa * I.basis([1.0])[0]))
    se = math.sqrt(series * (1 - series) / alive.size)
    z = (alive.mean() - series) / se
    out.append(_check(S, "interval_survival", abs(z) <= 3, "P(tau > t) from x = 1 vs sine series", mc=float(alive.mean()), series=series, z=float(z)))
    return out


def _cart(p):
    return np.stack([np.sin(p[:, 0]) * np.cos(p[:, 1]), np.sin(p[:, 0]) * np.sin(p[:, 1]), np.cos(p[:, 0])], -1)


# ---------------------------------------------------------------------------
# solver


def smooth_test_function(backend) -> Callable:
    if isinstance(backend, Sphere2):
        return lambda p: np.cos(p[:, 0]) ** 2 + np.sin(p[:, 0]) * np.cos(p[:, 1]) + 0.3 * np.sin(p[:, 0]) ** 2 * np.sin(2 * p[:, 1])
    if isinstance(backend, Torus):
        return lambda p: 0.5 + np.cos(p[:, 0]) + np.sin(2 * p[:, 0])
    return lambda p: np.sin(p[:, 0]) + 0.5 * np.sin(3 * p[:, 0]) + 0.2 * p[:, 0] * (math.pi - p[:, 0])


def small_backends():
    return (Sphere2(8), Torus(1, 16), IntervalDirichlet(64))


def solver_suite(seed: int) -> list[dict]:
    S = "solver"
    out = []
    s = Sphere2(16)
    init = s.project(smooth_test_function(s))
    d1 = float(np.max(np.abs(frac_time_solve(s, init, 1.0, 0.7).coefficients.values - heat_solve(s, init, 0.7).coefficients.values)))
    d2 = float(np.max(np.abs(frac_space_solve(s, init, Drift(1.0), 0.7).coefficients.values - heat_solve(s, init, 0.7).coefficients.values)))
    out.append(_check(S, "degenerations", max(d1, d2) <= 1e-12, "beta = 1 and pure drift reduce to heat", beta_one=d1, drift=d2))

    table = []
    for backend in small_backends():
        rng = make_rng(seed, S, "mc", backend.name)
        f = smooth_test_function(backend)
        c = backend.project(f)
        probes = backend.random_points(5, rng)
        for problem in (Heat(), TimeFractional(0.5), SpaceFractional(Stable(0.5))):
            exact = multiplier(backend, problem, 0.5) * c.values
            spectral = np.real(backend.evaluate(exact, probes))
            est = mc_solution(backend, lambda p: np.real(c.evaluate(p)), problem, 0.5, probes, 10_000, rng)
            for k in range(5):
                table.append({"backend": backend.name, "problem": type(problem).__name__, "probe": k,
                              "spectral": float(spectral[k]), "mc": float(est.mean[k]), "se": float(est.se[k]),
                              "z": float((est.mean[k] - spectral[k]) / est.se[k])})
    zmax = max(abs(r["z"]) for r in table)
    out.append(_check(S, "stochastic_representation", zmax <= 3, "MC E f(B_tau) vs spectral within 3 SE (N = 1e4)", max_abs_z=zmax, table=table))

    lam2 = s.index(1, 0)
    semi = abs(multiplier(s, Heat(), 2.0)[lam2] - multiplier(s, Heat(), 1.0)[lam2] ** 2)
    tf = abs(multiplier(s, TimeFractional(0.5), 2.0)[lam2] - multiplier(s, TimeFractional(0.5), 1.0)[lam2] ** 2)
    out.append(_check(S, "semigroup", semi < 1e-12 and tf > 1e-3, "heat factorises in time; time-fractional does not", heat_defect=float(semi), frac_defect=float(tf)))

    limits = {}
    for backend in (Sphere2(16), Torus(1, 16), Torus(2, 8)):
        c = backend.project(smooth_test_function(backend))
        for name, snap in (("heat", heat_solve(backend, c, 50.0)), ("stable", frac_space_solve(backend, c, Stable(0.5), 50.0))):
            limits[f"{backend.name}_{name}"] = float(np.sum(np.abs(snap.coefficients.values[backend.eigenvalues > 0]) ** 2))
    out.append(_check(S, "long_time_limit", max(limits.values()) < 1e-8, "non-constant energy at t = 50", energies=limits))

    I = IntervalDirichlet(64)
    c = I.project(smooth_test_function(I))
    ts = np.linspace(2, 6, 9)
    norms = [np.linalg.norm(heat_solve(I, c, t).coefficients.values) for t in ts]
    slope = float(np.polyfit(ts, np.log(norms), 1)[0])
    out.append(_check(S, "dirichlet_decay", abs(slope + 1) < 0.02, "log L2 norm slope equals -lambda_1 = -1", slope=slope))

    probes = Sphere2(8).random_points(5, make_rng(seed, S, "residual"))
    s8 = Sphere2(8)
    c8 = s8.project(smooth_test_function(s8))
    ns = [32, 64, 128, 256]
    res = [pde_residual(s8, c8, TimeFractional(0.5), np.linspace(0, 1, n + 1), probes) for n in ns]
    order = fitted_order(1.0 / np.array(ns), res)
    const = pde_residual(s8, s8.project(lambda p: np.full(len(p), 2.0)), TimeFractional(0.5), np.linspace(0, 1, 33), probes)
    out.append(_check(S, "pde_residual", order >= 1.4 and const <= 1e-12, "L1 residual order for b = 0.5; constant data exact", order=order, residuals=res, constant=const))
    return out


# ---------------------------------------------------------------------------
# fields


def fields_suite(seed: int) -> list[dict]:
    S = "fields"
    out = []
    s = Sphere2(64)
    spec = PowerSpectrum.parametric(s, 1.0, 3.0)
    draws = synthesize_coefficients(s, spec, make_rng(seed, S, "ensemble"), 1000)
    zmax = 0.0
    for law in (Subordinate(Stable(0.5)), TimeFractional(0.5)):
        est = estimate_spectrum(draws * multiplier(s, law, 1.0), s)
        model = shell_model(s, model_variance(s, spec, law, 1.0))
        z = (est.degree_mean[:17] - model[:17]) / est.degree_se[:17]
        zmax = max(zmax, float(np.max(np.abs(z))))
    out.append(_check(S, "spectrum_damping", zmax <= 3, "per-degree variance at t = 1 vs model, l <= 16", max_abs_z=zmax))

    # decay law C_j (1 + t^b j^(2/n))^(-2) with C_j ~ j^(-gamma) in the mode index j
    j = np.arange(1, s.n_modes + 1, dtype=float)
    lam = s.eigenvalues
    cj = j ** -3.0
    fac = mittag_leffler(0.5, -lam)
    sel = (s.degree >= 16) & (s.degree <= 64)
    slope_modes = loglog_slope(j[sel], cj[sel] * fac[sel] ** 2)
    l = np.arange(16, 65)
    slope_degree = loglog_slope(l, (1.0 + l) ** -3.0 * mittag_leffler(0.5, -(l * (l + 1.0))) ** 2)
    out.append(_check(S, "fractional_tail_slope", -5.6 <= slope_modes <= -4.4,
                      "log-log slope of C_j E_b(-t^b lam_j)^2 with C_j = j^-3 against mode index",
                      slope_mode_index=slope_modes, slope_degree_per_degree_spectrum=slope_degree))

    small = Sphere2(16)
    field = synthesize(small, PowerSpectrum.parametric(small, 1.0, 3.0), make_rng(seed, S, "fixed_field"))
    rng = make_rng(seed, S, "coordinate_changed")
    pts = small.random_points(3, rng)
    zs = []
    for tc, law, steps in ((Subordinate(Stable(0.5)), Subordinate(Stable(0.5)), 20), (InverseStable(0.5), TimeFractional(0.5), 1000)):
        ev = evolve(field, law, 1.0)
        for m in pts:
            v = sample_coordinate_changed_batch(field, tc, m, 1.0, 10_000, rng, steps=steps)
            zs.append(float((v.mean() - ev.evaluate(m)) / (v.std(ddof=1) / 100.0)))
    out.append(_check(S, "conditional_expectation", max(map(abs, zs)) <= 3, "mean of T(B_tau) equals evolved field within 3 SE", z=zs))

    steady = {}
    for law in (Subordinate(Stable(0.5)), Subordinate(Gamma()), Subordinate(GeometricStable(0.5)), Heat()):
        ev = evolve(field, law, 50.0)
        nonconst = ev.coefficients.copy()
        nonconst[0] = 0.0
        steady[repr(law)] = float(np.max(np.abs(small.evaluate(nonconst, small.quadrature()[0]))))
    out.append(_check(S, "steady_state", max(steady.values()) < 1e-6, "sup distance to c0 phi0 at t = 50", distances=steady))

    vals = small.evaluate(field.coefficients, small.quadrature()[0])
    imag = float(np.max(np.abs(np.imag(vals))))
    out.append(_check(S, "realness", imag < 1e-10, "synthesised field is real on the grid", max_imag=imag))
    return out


_RUNNERS = {
    "specfun": specfun_suite,
    "subordinate": subordinate_suite,
    "manifold": manifold_suite,
    "solver": solver_suite,
    "fields": fields_suite,
}


def run_suite(suite: str, seed: int = 42) -> dict:
    if suite not in (*SUITES, "all"):
        raise ValueError(f"unknown suite {suite!r}; expected one of {[*SUITES, 'all']}")
    names = SUITES if suite == "all" else (suite,)
    checks = []
    for name in names:
        checks.extend(_RUNNERS[name](seed))
    return {
        "suite": suite,
        "seed": seed,
        "tool_version": __version__,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
