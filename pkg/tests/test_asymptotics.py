import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from covol.asymptotics import (SpeedSpec, abs_moment, c1_statistic, check_speed,
                               check_speed_numeric, expected_Vn, gaussian_functional,
                               integrated_covolatility, isserlis_variance_oracle, nu, nu_ell,
                               rate_function, sigma_bipower, variance_Vn)
from covol.design import build_reduced_design, dual_reduced_design
from covol.estimators import abs_power, constant_one, monomial
from covol.paths import ModelSpec, constant_model, piecewise_model, sine_model
from covol.quadrature import Quadrature, QuadratureError, integrate_vol
from covol.sampling import Interval, alternating_grids, poisson_grids, synchronous_grid


def test_nu_constant():
    assert nu(Interval(0, 1), constant_model(1, 1, 0.5)) == pytest.approx(0.5, abs=1e-14)
    assert nu(Interval(0, 1), constant_model(1, 1, 0.0)) == 0.0


def test_nu_linear_volatility():
    m = ModelSpec(lambda t: t, lambda t: 1.0, lambda t: 1.0)
    assert nu(Interval(0, 1), m) == pytest.approx(0.5, abs=1e-13)
    assert nu_ell(1, Interval(0, 1), m) == pytest.approx(1 / 3, abs=1e-13)


def test_nu_outside_horizon():
    with pytest.raises(ValueError):
        nu(Interval(0.5, 1.5), constant_model())


def test_quadrature_against_scipy():
    m = sine_model(1.0, 1.5, 0.3, amplitude=0.7, frequency=3.0)
    f = lambda t: m.sigma1(np.asarray(t)) ** 2
    ref = integrate.quad(f, 0.1, 0.93, epsabs=1e-13, epsrel=1e-13)[0]
    assert integrate_vol(m, 1, 0.1, 0.93)[0] == pytest.approx(ref, abs=1e-12)


def test_quadrature_splits_at_jumps():
    m = piecewise_model([1 / 3], [1.0, 2.0], 1.0, 0.0)
    assert integrate_vol(m, 1, 0.0, 1.0)[0] == pytest.approx(1 / 3 + 4 * 2 / 3, abs=1e-13)


def test_trapezoid_method():
    q = Quadrature(method="trapezoid_on_mesh", abs_tol=1e-7, rel_tol=1e-7)
    m = ModelSpec(lambda t: t, lambda t: 1.0, lambda t: 1.0)
    assert integrate_vol(m, 1, 0.0, 1.0, q)[0] == pytest.approx(1 / 3, abs=1e-7)


def test_quadrature_failure_raises():
    q = Quadrature(max_depth=2)
    m = ModelSpec(lambda t: np.abs(np.sin(400 * t)) ** 0.5, lambda t: 1.0, lambda t: 0.0)
    with pytest.raises(QuadratureError):
        integrate_vol(m, 1, 0.0, 1.0, q)


def test_synchronous_variance_closed_form():
    g = synchronous_grid(10)
    d = build_reduced_design(g, g)
    assert variance_Vn(d, constant_model(1, 1, 0.5)) == pytest.approx(0.125, rel=1e-12)
    assert variance_Vn(d, constant_model(1, 1, 0.5)) == pytest.approx(
        isserlis_variance_oracle(g, g, constant_model(1, 1, 0.5)), rel=1e-10)


def test_zero_correlation_keeps_only_cross_term(worked_grids):
    gi, gj = worked_grids
    d = build_reduced_design(gi, gj)
    m = constant_model(1.0, 2.0, 0.0)
    nu1 = d.merged.lengths * 1.0
    nu2 = gj.lengths * 4.0
    cross = sum(nu1[i] * nu2[j] for i, j in zip(*np.nonzero(d.k_matrix())))
    assert variance_Vn(d, m) == pytest.approx(cross, rel=1e-13)


def test_worked_example_against_oracle(worked_grids):
    gi, gj = worked_grids
    m = constant_model(1, 1, 1.0)
    assert variance_Vn(build_reduced_design(gi, gj), m) == pytest.approx(
        isserlis_variance_oracle(gi, gj, m), rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_oracle_on_poisson_grids(seed, preset):
    gi, gj = poisson_grids(15, 25, 1.0, seed)
    exact = isserlis_variance_oracle(gi, gj, preset)
    assert variance_Vn(build_reduced_design(gi, gj), preset) == pytest.approx(exact, rel=1e-10)
    assert variance_Vn(dual_reduced_design(gi, gj), preset) == pytest.approx(exact, rel=1e-10)


def test_oracle_mean_matches(preset):
    gi, gj = poisson_grids(10, 14, 1.0, 5)
    _, mean = isserlis_variance_oracle(gi, gj, preset, with_mean=True)
    assert expected_Vn(build_reduced_design(gi, gj), preset) == pytest.approx(mean, rel=1e-11)
    assert mean == pytest.approx(integrated_covolatility(preset), rel=1e-11)


def test_oracle_size_cap():
    g = synchronous_grid(150)
    with pytest.raises(ValueError, match="capped"):
        isserlis_variance_oracle(g, g, constant_model())


def test_c1_closed_forms():
    g = synchronous_grid(10)
    assert c1_statistic(g, g, constant_model(1, 1, 0.0)) == pytest.approx(0.1, rel=1e-13)
    s1, s2, r, n, T = 1.3, 0.6, 0.7, 40, 2.0
    g = synchronous_grid(n, T)
    m = constant_model(s1, s2, r, T=T)
    assert c1_statistic(g, g, m) == pytest.approx(T ** 2 / n * s1 ** 2 * s2 ** 2 * (1 + r * r), rel=1e-12)


def test_c1_alternating_limit():
    a, b = alternating_grids(1000)
    r = 0.5
    ratio = c1_statistic(a, b, constant_model(1, 1, r)) * 1000
    assert ratio == pytest.approx(2 + 1.5 * r * r, rel=0.02)


@given(st.integers(0, 10**6), st.floats(3, 40), st.floats(3, 40))
def test_c1_reduced_substitution(seed, r1, r2):
    gi, gj = poisson_grids(r1, r2, 1.0, seed)
    m = sine_model(1.2, 0.8, 0.6)
    assert c1_statistic(gi, gj, m, reduced=True) == pytest.approx(c1_statistic(gi, gj, m), rel=1e-12)


def test_abs_moments():
    assert abs_moment(0) == 1.0
    assert abs_moment(2) == pytest.approx(1.0, rel=1e-15)
    assert abs_moment(4) == pytest.approx(3.0, rel=1e-15)
    assert abs_moment(1) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
    with pytest.raises(ValueError):
        abs_moment(-1)


@pytest.mark.parametrize("r", [0.5, 1, 1.5, 3, 7.3])
def test_abs_moment_against_scipy_integral(r):
    pdf = lambda x: abs(x) ** r * math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    ref = 2 * integrate.quad(pdf, 0, np.inf, epsabs=0, epsrel=1e-13)[0]
    assert abs_moment(r) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("r", [0, 1, 2, 3, 4])
def test_closed_and_quadrature_paths_agree(r):
    f = abs_power(r)
    for s in (0.5, 1.0, 2.3):
        assert gaussian_functional(f, s, "folded") == pytest.approx(
            gaussian_functional(f, s, "closed"), rel=1e-10)


@pytest.mark.parametrize("k", [0, 2, 4, 6])
def test_hermite_exact_for_even_polynomials(k):
    got = gaussian_functional(monomial(k), 1.7, "hermite")
    assert got == pytest.approx(1.7 ** k * special.factorial2(k - 1, exact=True) if k else 1.0,
                                rel=1e-12)


def test_gaussian_functional_examples():
    assert gaussian_functional(monomial(2), 2.0) == pytest.approx(4.0, rel=1e-14)
    assert gaussian_functional(constant_one(), 3.0) == 1.0
    assert gaussian_functional(abs_power(1), 1.0) == pytest.approx(abs_moment(1), rel=1e-15)


def test_sigma_bipower_moment_formula():
    mu = abs_moment
    for r, q in ((1, 1), (0.5, 1.5), (2, 1)):
        expected = mu(2 * r) * mu(2 * q) + 2 * mu(r) * mu(q) * mu(r + q) - 3 * mu(r) ** 2 * mu(q) ** 2
        got = sigma_bipower(abs_power(r), abs_power(q), constant_model())
        assert got.sigma == pytest.approx(expected, rel=1e-12)
        assert got.limit == pytest.approx(mu(r) * mu(q), rel=1e-12)
    assert sigma_bipower(abs_power(1), abs_power(1), constant_model()).sigma == pytest.approx(
        1.05739, abs=1e-5)


@pytest.mark.parametrize("model", [constant_model(1.4), piecewise_model([0.4], [0.5, 2.0], 1, 0),
                                   sine_model(1.1, amplitude=0.6)], ids=["const", "piece", "sine"])
def test_realised_volatility_variance(model):
    quartic = integrate.quad(lambda t: float(model.sigma1(np.asarray(t))) ** 4, 0, 1,
                             points=model.breakpoints or None, epsabs=1e-13, epsrel=1e-13)[0]
    got = sigma_bipower(monomial(2), constant_one(), model).sigma
    assert got == pytest.approx(2 * quartic, rel=1e-10)


def test_sigma_bipower_rejects_odd():
    with pytest.raises(ValueError):
        sigma_bipower(monomial(1), abs_power(1), constant_model())


def test_rate_function():
    assert rate_function(0, 1) == 0
    assert rate_function(1, 2) == 0.25
    s = sigma_bipower(abs_power(1), abs_power(1), constant_model()).sigma
    assert rate_function(1, s) == pytest.approx(1 / (2 * 1.0573853410271088), rel=1e-12)
    with pytest.raises(ValueError):
        rate_function(1, 0)


@given(st.floats(-50, 50).filter(lambda x: abs(x) > 1e-100), st.floats(0.01, 10), st.floats(0.01, 10))
def test_rate_function_even_and_decreasing(x, s1, s2):
    assert rate_function(x, s1) == rate_function(-x, s1)
    if s1 < s2:
        assert rate_function(x, s1) > rate_function(x, s2)


@pytest.mark.parametrize("alpha,ok", [(0.3, True), (0.1, True), (0.6, False), (0.0, False), (0.5, False)])
def test_check_speed_hy(alpha, ok):
    v = check_speed(SpeedSpec(alpha, 1.0), "sync")
    assert v.admissible is ok
    if alpha == 0.6:
        assert not v.conditions["b_n*sqrt(c_n)->0"]
    if alpha == 0.0:
        assert not v.conditions["b_n->inf"]


def test_check_speed_bipower():
    assert check_speed(SpeedSpec(0.3), target="bipower").admissible
    assert not check_speed(SpeedSpec(0.5), target="bipower").admissible


def test_check_speed_numeric_warns():
    with pytest.warns(UserWarning, match="heuristic"):
        out = check_speed_numeric(lambda n: n ** 0.3, lambda n: 1 / n)
    assert out["b_n*sqrt(c_n)->0"] and out["b_n->inf"]
