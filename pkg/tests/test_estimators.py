import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_walk
from covol.estimators import (EstimateResult, FunctionSpec, abs_power,
                              bipower_power, check_equidistant, drift_free_estimator,
                              hayashi_yoshida, monomial, parse_function, realized_covolatility)
from covol.paths import ObservedPath, constant_model, master_grid, simulate_paths
from covol.sampling import overlap, poisson_grids, synchronous_grid


def brute_hy(x1, gi, x2, gj):
    d1, d2 = np.diff(x1), np.diff(x2)
    return math.fsum(d1[i] * d2[j] for i, a in enumerate(gi.intervals())
                     for j, b in enumerate(gj.intervals()) if overlap(a, b))


@st.composite
def observed_pairs(draw):
    seed = draw(st.integers(0, 10**6))
    gi, gj = poisson_grids(draw(st.floats(2, 40)), draw(st.floats(2, 40)), 1.0, seed)
    return gi, random_walk(gi, seed + 1), gj, random_walk(gj, seed + 2)


@given(observed_pairs())
def test_modes_agree(pair):
    gi, x1, gj, x2 = pair
    ref = brute_hy(x1, gi, x2, gj)
    for mode in ("direct", "reduced", "dual"):
        assert hayashi_yoshida(x1, gi, x2, gj, mode) == pytest.approx(ref, abs=1e-12)


@given(observed_pairs(), st.floats(-3, 3), st.floats(-3, 3))
def test_bilinear(pair, a, b):
    gi, x1, gj, x2 = pair
    y1 = random_walk(gi, 99)
    lhs = hayashi_yoshida(a * x1 + b * y1, gi, x2, gj)
    rhs = a * hayashi_yoshida(x1, gi, x2, gj) + b * hayashi_yoshida(y1, gi, x2, gj)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_synchronous_reduces_to_realised_covolatility():
    g = synchronous_grid(30)
    x1, x2 = random_walk(g, 1), random_walk(g, 2)
    assert hayashi_yoshida(x1, g, x2, g) == pytest.approx(realized_covolatility(x1, x2), abs=1e-13)


def test_batched_rows():
    gi, gj = poisson_grids(10, 15, 1.0, 4)
    x1 = np.stack([random_walk(gi, s) for s in range(3)])
    x2 = np.stack([random_walk(gj, s + 10) for s in range(3)])
    out = hayashi_yoshida(x1, gi, x2, gj)
    for k in range(3):
        assert out[k] == pytest.approx(hayashi_yoshida(x1[k], gi, x2[k], gj), abs=1e-13)


def test_length_mismatch():
    g = synchronous_grid(3)
    with pytest.raises(ValueError):
        hayashi_yoshida(np.zeros(3), g, np.zeros(4), g)


def test_drift_free_uses_martingale_part():
    gi, gj = poisson_grids(10, 12, 1.0, 0)
    p = simulate_paths(constant_model(1, 1, 0.5, drift1=3.0), master_grid(gi, gj), 2)
    v = drift_free_estimator(p, gi, gj)
    idx_i = np.searchsorted(p.master_grid, gi.times)
    idx_j = np.searchsorted(p.master_grid, gj.times)
    assert v == pytest.approx(hayashi_yoshida(p.m1[idx_i], gi, p.m2[idx_j], gj), abs=1e-13)


def test_drift_free_rejects_external_data():
    g = synchronous_grid(2)
    obs = ObservedPath(g.times, np.zeros(3), np.zeros(3))
    with pytest.raises(TypeError, match="hayashi_yoshida"):
        drift_free_estimator((obs, obs), g, g)


def test_bipower_constant_path():
    n = 8
    x = np.arange(n + 2) / math.sqrt(n)
    assert bipower_power(1, 1, x) == pytest.approx(1.0)
    y = np.arange(n + 1) / math.sqrt(n)
    # n + 1 points: unit scaled increments, but only n - 1 summands
    assert bipower_power(2, 0, y, index_range="rbp1") == pytest.approx((n - 1) / n)


def test_bipower_index_ranges_differ_by_one_term():
    rng = np.random.default_rng(3)
    x = np.concatenate(([0], np.cumsum(rng.standard_normal(101) / 10)))
    lm = bipower_power(1, 1, x)
    body = x[:-1]
    rbp = bipower_power(1, 1, body, index_range="rbp1")
    assert lm != rbp and abs(lm - rbp) < 0.2


def test_bipower_requires_equidistant():
    with pytest.raises(ValueError, match="equidistant"):
        bipower_power(1, 1, np.zeros(4), times=[0, 0.1, 0.5, 1])
    assert check_equidistant(np.linspace(0, 1, 11)) == pytest.approx(0.1)


def test_function_specs():
    assert parse_function("abs^1.5").power == 1.5
    assert parse_function("x^2")(np.array([-3.0])) == 9
    assert parse_function("1")(np.array([5.0, -2.0])).tolist() == [1.0, 1.0]
    with pytest.raises(ValueError):
        parse_function("sin")
    with pytest.raises(ValueError, match="declared even"):
        FunctionSpec(lambda x: x, declared_even=True)
    assert not monomial(3).declared_even
    assert (abs_power(1) * abs_power(2)).power == 3


def test_estimate_result_validation():
    with pytest.raises(ValueError):
        EstimateResult(float("nan"), "U", 3, 3)
    with pytest.raises(ValueError):
        EstimateResult(1.0, "XYZ", 3, 3)
    assert EstimateResult(1.0, "U", 3, 4).to_dict()["estimator"] == "U"
