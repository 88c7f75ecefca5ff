import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gtompc.axis import transfer_time_arrays
from gtompc.core import State3
from gtompc.decomposition import (BenchmarkStats, DecompositionConfig, benchmark_random_pairs,
                                  decompose_thrust, is_time_equal, rho_t_delta, rho_t_min, sample_pairs)

WORKED = (State3([-2.0, -1.5, -2.5], [-3.0, 1.0, 0.0]), State3([0.0, 0.0, 0.0], [1.0, 0.0, 2.0]))

vec = st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3)
states = st.builds(State3, vec, vec)


def test_is_time_equal_examples():
    assert is_time_equal([1.25, 1.25, 1.25], 1e-3)
    assert not is_time_equal([1.75, 0.9, 0.8], 1e-3)
    assert is_time_equal([1.0, 1e-6, 1e-6], 1e-3)


def test_worked_pair_initial_iterate():
    res = decompose_thrust(*WORKED, 10.0)
    a0, t0 = res.trace[0]
    assert np.allclose(a0, 10 / np.sqrt(3))
    assert t0.max() == pytest.approx(1.7555, abs=1e-3)


def test_worked_pair_fixed_point():
    # the unique equal-time split on the sphere (see the notes on the printed values)
    res = decompose_thrust(*WORKED, 10.0)
    assert res.converged
    assert res.a_max == pytest.approx([9.026, 2.339, 3.613], abs=2e-3)
    assert res.t_min == pytest.approx(1.285, abs=1e-3)
    assert res.t_min < res.trace[0][1].max()


def test_worked_pair_indicators():
    res = decompose_thrust(*WORKED, 10.0)
    assert rho_t_delta(res.trace, 0) == 1.0
    assert rho_t_delta(res.trace, 10) < 0.02
    assert rho_t_min(res.trace, 0) == 0.0
    assert rho_t_min(res.trace, 10) > 0.98
    assert rho_t_min(res.trace, len(res.trace) - 1) == 1.0


def test_symmetric_task_converges_at_start():
    res = decompose_thrust(State3([0, 0, 0], [0, 0, 0]), State3([2, 2, 2], [0, 0, 0]), 6.0)
    assert res.converged and res.iterations == 0
    assert np.allclose(res.a_max, 6 / np.sqrt(3))


def test_one_dimensional_task():
    res = decompose_thrust(State3([0, 1, 1], [0, 0, 0]), State3([4, 1, 1], [0, 0, 0]), 8.0)
    assert res.a_max[0] == pytest.approx(8.0, rel=1e-2)
    assert np.all(res.a_max[1:] < 0.05)
    single = 2 * np.sqrt(4 / 8.0)
    assert res.t_min == pytest.approx(single, rel=1e-2)


def test_coincident_states():
    s = State3([1, 2, 3], [0, 1, 0])
    res = decompose_thrust(s, s, 5.0)
    assert res.converged and res.t_min == 0.0
    assert np.allclose(res.a_max, 5 / np.sqrt(3))


def test_config_validation():
    with pytest.raises(ValueError):
        DecompositionConfig(eps_t=0)
    with pytest.raises(ValueError):
        DecompositionConfig(max_iters=0)
    with pytest.raises(ValueError):
        decompose_thrust(*WORKED, 0.0)


@given(states, states, st.floats(1.0, 20.0))
def test_iterates_stay_on_sphere(a, b, budget):
    res = decompose_thrust(a, b, budget, DecompositionConfig(max_iters=20))
    for a_max, _ in res.trace:
        assert np.linalg.norm(a_max) == pytest.approx(budget, rel=1e-9)
        assert np.all(a_max > 0)


@given(states, states)
def test_converged_results_are_fixed_points(a, b):
    res = decompose_thrust(a, b, 10.0)
    if not res.converged:
        return
    again = decompose_thrust(a, b, 10.0, direction0=res.a_max)
    assert again.iterations == 0
    assert np.abs(again.a_max - res.a_max).max() <= 1e-6 * 10.0


@given(states, states)
def test_never_worse_than_uniform(a, b):
    res = decompose_thrust(a, b, 10.0)
    assert res.t_min <= res.trace[0][1].max() + 1e-3


@given(states, states)
def test_converged_times_equal(a, b):
    res = decompose_thrust(a, b, 10.0)
    if res.converged:
        active = res.t_axis[res.t_axis > 1e-3]
        if active.size > 1:
            assert active.max() - active.min() <= 1e-3


def test_ratio_condition_on_converged_result():
    res = decompose_thrust(*WORKED, 10.0)
    T = transfer_time_arrays(WORKED[0].p, WORKED[0].v, WORKED[1].p, WORKED[1].v, res.a_max)
    assert res.a_max / res.a_max.sum() == pytest.approx(T / T.sum(), rel=1e-3)


def test_rho_t_delta_degenerate():
    trace = [(np.ones(3), np.array([1.0, 1.0, 1.0]))]
    assert rho_t_delta(trace, 0) == 0.0
    assert rho_t_min(trace, 0) == 1.0


def test_sampler_deterministic():
    a = sample_pairs(5, 11)
    b = sample_pairs(5, 11)
    for (x, u), (y, w) in zip(a, b):
        assert np.array_equal(x.to_vector(), y.to_vector()) and np.array_equal(u.to_vector(), w.to_vector())


def test_benchmark_deterministic_and_csv(tmp_path):
    s1 = benchmark_random_pairs(20, 4)
    s2 = benchmark_random_pairs(20, 4)
    assert np.array_equal(s1.rho_tdelta_mean, s2.rho_tdelta_mean)
    assert np.array_equal(s1.rho_tmin_std, s2.rho_tmin_std)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    s1.write_csv(p1)
    s2.write_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_text().splitlines()[0] == ",".join(BenchmarkStats.CSV_HEADER)
    assert len(s1.iters) == DecompositionConfig().max_iters + 1


def test_benchmark_workers_do_not_change_result():
    s1 = benchmark_random_pairs(16, 2, workers=1)
    s2 = benchmark_random_pairs(16, 2, workers=2)
    assert np.array_equal(s1.rho_tmin_mean, s2.rho_tmin_mean)


def test_benchmark_symmetric_single_pair(monkeypatch):
    import gtompc.decomposition as dec
    sym = [(State3([0, 0, 0], [0, 0, 0]), State3([1, 1, 1], [0, 0, 0]))]
    monkeypatch.setattr(dec, "sample_pairs", lambda n, seed, ranges: sym)
    s = benchmark_random_pairs(1, 0)
    assert np.all(s.rho_tdelta_mean == 0.0)
    assert np.all(s.rho_tmin_mean == 1.0)


def test_benchmark_rejects_empty():
    with pytest.raises(ValueError):
        benchmark_random_pairs(0, 0)


def test_worked_pair_is_fast():
    t0 = time.perf_counter()
    for _ in range(20):
        decompose_thrust(*WORKED, 10.0)
    assert (time.perf_counter() - t0) / 20 < 10e-3
