import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gtompc.axis import (AxisBoundary, min_time, oracle_solve, sample_axis, sample_axis_arrays,
                         solve_axis, switch_function, transfer_time_arrays)

pos = st.floats(-10, 10, allow_nan=False)
vel = st.floats(-5, 5, allow_nan=False)
acc = st.floats(0.1, 10, allow_nan=False)
boundaries = st.builds(AxisBoundary, pos, vel, pos, vel, acc)


def test_rest_to_rest_unit():
    b = AxisBoundary(0.0, 0.0, 1.0, 0.0, 1.0)
    sol = solve_axis(b)
    assert sol.t_total == pytest.approx(2.0)
    assert sol.sign_first == 1
    assert sol.t_switch == pytest.approx(1.0)


def test_brake_first_when_ahead():
    b = AxisBoundary(1.0, 0.0, 0.0, 0.0, 1.0)
    assert switch_function(b) > 0
    sol = solve_axis(b)
    assert sol.sign_first == -1
    assert oracle_solve(b)[1] == -1
    assert sol.t_total == pytest.approx(2.0)


def test_pure_velocity_change():
    # h = 0 exactly: one arc from v = 0 to v = 2 covering p = 2
    b = AxisBoundary(0.0, 0.0, 2.0, 2.0, 1.0)
    assert switch_function(b) == 0
    sol = solve_axis(b)
    assert sol.t_total == pytest.approx(2.0)
    assert sol.sign_first == 1
    p, v, a = sample_axis(sol, sol.t_total)
    assert (p, v) == pytest.approx((2.0, 2.0))


def test_coincident_is_degenerate():
    b = AxisBoundary(3.0, -1.0, 3.0, -1.0, 2.0)
    sol = solve_axis(b)
    assert sol.t_total == 0.0
    assert sol.sign_first == 0


def test_invalid_boundary():
    with pytest.raises(ValueError):
        AxisBoundary(0, 0, 1, 0, 0.0)
    with pytest.raises(ValueError):
        AxisBoundary(0, np.inf, 1, 0, 1.0)


@given(boundaries)
def test_matches_oracle(b):
    t, sign, _ = oracle_solve(b)
    assert min_time(b) == pytest.approx(t, abs=1e-6)
    sol = solve_axis(b)
    if t > 1e-6 and 1e-6 < sol.t_switch < sol.t_total - 1e-6:
        assert sol.sign_first == sign


@given(boundaries)
def test_trajectory_hits_target(b):
    sol = solve_axis(b)
    p, v, a = sample_axis(sol, sol.t_total)
    scale = 1 + abs(b.pf) + abs(b.vf)
    assert p == pytest.approx(b.pf, abs=1e-7 * scale)
    assert v == pytest.approx(b.vf, abs=1e-7 * scale)


@given(boundaries)
def test_bang_bang_magnitude(b):
    sol = solve_axis(b)
    assume(sol.t_total > 1e-6)
    t = np.linspace(0, sol.t_total, 50, endpoint=False)
    _, _, a = sample_axis_arrays(sol, t)
    assert np.allclose(np.abs(a), b.a_max)


@given(boundaries, st.floats(1.1, 4.0))
def test_more_authority_is_never_slower(b, factor):
    faster = AxisBoundary(b.p0, b.v0, b.pf, b.vf, b.a_max * factor)
    assert min_time(faster) <= min_time(b) + 1e-9


@given(boundaries)
def test_velocity_continuous_at_switch(b):
    sol = solve_axis(b)
    assume(1e-3 < sol.t_switch < sol.t_total - 1e-3)
    eps = 1e-9
    _, v0, _ = sample_axis(sol, sol.t_switch - eps)
    _, v1, _ = sample_axis(sol, sol.t_switch + eps)
    assert v0 == pytest.approx(v1, abs=1e-6)


def test_coast_after_arrival():
    sol = solve_axis(AxisBoundary(0.0, 0.0, 1.0, 0.5, 2.0))
    p, v, a = sample_axis(sol, sol.t_total + 1.0)
    assert (p, v, a) == pytest.approx((1.5, 0.5, 0.0))


def test_negative_time_rejected():
    sol = solve_axis(AxisBoundary(0.0, 0.0, 1.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        sample_axis(sol, -0.1)


def test_vectorised_agrees_with_scalar():
    rng = np.random.default_rng(3)
    p0, pf = rng.uniform(-5, 5, (2, 200))
    v0, vf = rng.uniform(-3, 3, (2, 200))
    A = rng.uniform(0.5, 5, 200)
    T = transfer_time_arrays(p0, v0, pf, vf, A)
    ref = [min_time(AxisBoundary(*x)) * x[4] for x in zip(p0, v0, pf, vf, A)]
    assert np.allclose(T, ref, rtol=0, atol=1e-12)
