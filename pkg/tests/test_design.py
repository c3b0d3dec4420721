import numpy as np
from hypothesis import given, strategies as st

from covol.design import build_reduced_design, containers, dual_reduced_design
from covol.sampling import (ObservationGrid, alternating_grids, is_subset, poisson_grids,
                            synchronous_grid)


def test_worked_example(worked_grids):
    gi, gj = worked_grids
    d = build_reduced_design(gi, gj)
    assert d.tau == (2,) and d.sigma_stops == (2,)
    assert d.n0 == 1 and d.n_hat == 3 and d.n_hat_upper_bound() == 3
    assert d.k_matrix().tolist() == [[1, 0], [1, 1], [0, 1]]


def test_run_inside_one_interval_is_merged():
    d = build_reduced_design(ObservationGrid([0, 0.1, 0.2, 1]), ObservationGrid([0, 0.25, 1]))
    np.testing.assert_allclose(d.merged.times, [0, 0.2, 1])
    assert d.source_first.tolist() == [0, 2] and d.source_last.tolist() == [1, 2]


def test_synchronous_design():
    g = synchronous_grid(5)
    d = build_reduced_design(g, g)
    # nothing merges; the recursion stops at n - 1 on a synchronous grid
    assert d.n_hat == 5 and d.n0 == 4
    assert d.n0 <= d.n_hat <= 2 * d.n0 + 1


def test_dual_has_one_fewer_stop_on_alternating():
    a, b = alternating_grids(4)
    assert build_reduced_design(b, a).n0 == 4
    assert dual_reduced_design(b, a).n0 == 3


def test_containers():
    box = containers(ObservationGrid([0, 0.2, 0.6, 1]), ObservationGrid([0, 0.5, 1]))
    assert box.tolist() == [0, -1, 1]


@st.composite
def grid_pairs(draw):
    seed = draw(st.integers(0, 10**6))
    r1 = draw(st.floats(2, 60))
    r2 = draw(st.floats(2, 60))
    return poisson_grids(r1, r2, 1.0, seed)


@given(grid_pairs())
def test_design_size_bounds(pair):
    d = build_reduced_design(*pair)
    assert d.n0 <= d.n_hat <= d.n_hat_upper_bound() <= 2 * d.n0 + 1


@given(grid_pairs())
def test_each_interval_holds_at_most_one_merged_interval(pair):
    d = build_reduced_design(*pair)
    for jv in pair[1].intervals():
        assert sum(is_subset(iv, jv) for iv in d.i_hat) <= 1


@given(grid_pairs())
def test_merged_grid_coarsens_source(pair):
    d = build_reduced_design(*pair)
    assert set(d.merged.times) <= set(pair[0].times)
    assert d.source_last[-1] == pair[0].n - 1
    assert np.all(d.source_first[1:] == d.source_last[:-1] + 1)


@given(grid_pairs())
def test_stopping_times_increase(pair):
    d = build_reduced_design(*pair)
    assert all(b > a for a, b in zip(d.tau, d.tau[1:]))
    assert all(1 <= t <= pair[0].n for t in d.tau)


@given(grid_pairs())
def test_dual_design_mirrors(pair):
    gi, gj = pair
    assert dual_reduced_design(gi, gj).to_dict() | {"side": "I"} == \
        build_reduced_design(gj, gi).to_dict()


def test_serialisation():
    d = build_reduced_design(*alternating_grids(3))
    assert '"n_hat": ' in d.to_json()
