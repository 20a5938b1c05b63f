import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from xyaubry.lettergraph import build_graph, reduce
from xyaubry.potential import builtin
from xyaubry.spectrum import karp_min_mean_cycle
from xyaubry.subaction import (SubactionConvergenceError, bellman_operator, critical_nodes,
                               reweight, solve_subaction, verify_calibration,
                               write_subaction_csv)

import oracles

small = st.integers(1, 5).flatmap(
    lambda n: arrays(np.float64, (n, n),
                     elements=st.floats(-3, 3, allow_nan=False, width=32)))


def reduced_for(spec, n_cells):
    _, w = build_graph(spec, n_cells)
    alpha, _, _ = karp_min_mean_cycle(w)
    return reduce(w, alpha)


def test_product_one_cell():
    r = reduced_for(builtin("product"), 1)
    np.testing.assert_allclose(r, [[1.0, 1.0], [1.0, 0.0]])
    s = solve_subaction(r)
    np.testing.assert_allclose(s.values, [1.0, 0.0], atol=1e-12)
    assert s.critical_nodes == (1,)
    assert s.method == "value_iteration"


def test_squared_difference_is_zero():
    r = reduced_for(builtin("squared_difference"), 8)
    s = solve_subaction(r)
    np.testing.assert_allclose(s.values, 0.0, atol=1e-12)
    assert s.critical_nodes == tuple(range(9))


def test_well_potential_grid_eight():
    spec = builtin("squared_difference_plus_well", 0.5)
    r = reduced_for(spec, 8)
    s = solve_subaction(r)
    cal = verify_calibration(r, s)
    assert cal.calibrated
    assert s.critical_nodes == (4,)
    assert s.values[4] == 0.0
    # the well is symmetric about 1/2
    np.testing.assert_allclose(s.values, s.values[::-1], atol=1e-12)


def test_reweight_example():
    r = np.array([[1.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(reweight(r, np.array([1.0, 0.0])), [[1.0, 2.0], [0.0, 0.0]])


def test_reweight_snaps_roundoff():
    r = np.array([[0.0, 1e-14], [2.0, -1e-15]])
    ru = reweight(r, np.zeros(2))
    assert ru[0, 1] == 0.0 and ru[1, 1] == 0.0


def test_wrong_alpha_is_detected():
    _, w = build_graph(builtin("squared_difference_plus_well", 0.5), 16)
    alpha, _, _ = karp_min_mean_cycle(w)
    with pytest.raises(SubactionConvergenceError) as info:
        solve_subaction(reduce(w, alpha - 0.1))
    assert info.value.residual > 0.05


def test_periodic_critical_cycle_uses_path_closure():
    r = np.array([[0.5, -0.5], [0.5, 0.5]])
    s = solve_subaction(r)
    assert s.method == "path_closure"
    assert verify_calibration(r, s).calibrated
    assert s.critical_nodes == (0, 1)


def test_local_bump_moves_subaction_locally():
    spec = builtin("squared_difference_plus_well", 0.5)
    r = reduced_for(spec, 16)
    base = solve_subaction(r).values
    bumped = r.copy()
    bumped[:, 2] += 0.05  # entering letter 2 costs more
    v = solve_subaction(bumped).values
    assert v[2] > base[2]
    assert verify_calibration(bumped, v).calibrated


def test_second_init_records_difference():
    r = reduced_for(builtin("product"), 8)
    s = solve_subaction(r, second_init=True)
    assert s.alt_sup_difference is not None and s.alt_sup_difference <= 1e-9


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_subaction(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        solve_subaction(np.zeros((2, 2)), tol=0.0)
    with pytest.raises(ValueError):
        verify_calibration(np.zeros((2, 2)), np.zeros(3))


def test_csv_roundtrip(tmp_path):
    nodes = np.linspace(0, 1, 3)
    path = write_subaction_csv(tmp_path / "v.csv", nodes, np.array([0.5, 0.0, 0.25]))
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, -1], [0.5, 0.0, 0.25])


@given(small)
def test_calibrated_and_nonnegative_reweighting(w):
    alpha, _, _ = karp_min_mean_cycle(w)
    r = reduce(w, alpha)
    s = solve_subaction(r)
    cal = verify_calibration(r, s)
    assert cal.max_residual <= 1e-9
    assert cal.max_inequality_violation <= 1e-9
    assert np.min(reweight(r, s)) >= -1e-9
    assert np.min(s.values[list(s.critical_nodes)]) == 0.0


@given(small)
def test_reweighting_preserves_cycle_sums(w):
    alpha, _, _ = karp_min_mean_cycle(w)
    r = reduce(w, alpha)
    ru = reweight(r, solve_subaction(r))
    for cyc in oracles.simple_cycles(w.shape[0]):
        assert abs(oracles.cycle_sum(ru, cyc) - oracles.cycle_sum(r, cyc)) <= 1e-9


@given(small)
def test_critical_nodes_lie_on_zero_cycles(w):
    alpha, _, _ = karp_min_mean_cycle(w)
    r = reduce(w, alpha)
    s = solve_subaction(r)
    on_zero = set()
    for cyc in oracles.simple_cycles(w.shape[0]):
        if abs(oracles.cycle_sum(r, cyc)) <= 1e-9:
            on_zero.update(cyc)
    assert set(s.critical_nodes) == on_zero
    assert critical_nodes(r, s.values) == s.critical_nodes


def test_bellman_is_min_plus_vector_product():
    r = np.array([[0.0, 2.0], [1.0, 3.0]])
    np.testing.assert_array_equal(bellman_operator(r, np.array([0.0, 1.0])), [0.0, 2.0])
