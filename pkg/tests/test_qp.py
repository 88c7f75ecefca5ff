import numpy as np
import pytest

from gtompc.core import State3
from gtompc.guidance import build_guidance
from gtompc.mpc import MpcParams, build_mpc_qp
from gtompc.qp import INFEASIBLE, SOLVED, AdmmSolver, QpProblem, QpSettings, kkt_residuals, solve_qp

cvxopt = pytest.importorskip("cvxopt")
cvxopt.solvers.options.update(show_progress=False, abstol=1e-9, reltol=1e-9, feastol=1e-9)


def reference(p: QpProblem):
    """Interior-point solution of the same QP, finite rows only."""
    G = np.vstack([p.A, -p.A])
    h = np.concatenate([p.u, -p.l])
    keep = np.isfinite(h)
    r = cvxopt.solvers.qp(cvxopt.matrix(p.H), cvxopt.matrix(p.f), cvxopt.matrix(G[keep]), cvxopt.matrix(h[keep]))
    assert r["status"] == "optimal"
    return np.array(r["x"]).ravel()


def random_qp(rng, n=12, m=18):
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    A = rng.normal(size=(m, n))
    x_feas = rng.normal(size=n)
    Ax = A @ x_feas
    l = Ax - rng.uniform(0.1, 2, m)
    u = Ax + rng.uniform(0.1, 2, m)
    return QpProblem(H, rng.normal(size=n) * 5, A, l, u)


def mpc_instance(rng, Np=30):
    params = MpcParams(Np=Np)
    cur = State3(rng.uniform(-3, 3, 3), rng.uniform(-2, 2, 3))
    tgt = State3(rng.uniform(-3, 3, 3), rng.uniform(-2, 2, 3))
    a_max = rng.uniform(0.5, 4, 3)
    g = build_guidance(cur, tgt, a_max, params.dt, Np)
    a_prev = rng.uniform(-1, 1, 3) * a_max
    return build_mpc_qp(cur, g, a_prev, params, a_max)


def test_box_example():
    p = QpProblem(np.eye(3), -2 * np.ones(3), np.eye(3), -np.ones(3), np.ones(3))
    sol = solve_qp(p)
    assert sol.status == SOLVED
    assert sol.x == pytest.approx(np.ones(3), abs=1e-4)


def test_unconstrained_matches_linear_solve():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(5, 5))
    H = M @ M.T + np.eye(5)
    f = rng.normal(size=5)
    p = QpProblem(H, f, np.eye(5), -np.full(5, np.inf), np.full(5, np.inf))
    sol = solve_qp(p)
    assert sol.x == pytest.approx(np.linalg.solve(H, -f), abs=1e-4)


def test_equality_rows():
    p = QpProblem(np.eye(2), np.zeros(2), np.array([[1.0, 1.0]]), np.array([1.0]), np.array([1.0]))
    sol = solve_qp(p)
    assert sol.status == SOLVED
    assert sol.x == pytest.approx([0.5, 0.5], abs=1e-4)


def test_random_against_reference():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = random_qp(rng)
        sol = solve_qp(p)
        assert sol.status == SOLVED
        rp, rd = kkt_residuals(p, sol.x, sol.y)
        assert rp <= 1e-4 and rd <= 1e-4
        assert sol.objective == pytest.approx(p.objective(reference(p)), abs=1e-3)


def test_mpc_instances_against_reference():
    rng = np.random.default_rng(2)
    for _ in range(10):
        p = mpc_instance(rng)
        assert p.n == 93
        sol = solve_qp(p)
        assert sol.status == SOLVED
        assert sol.objective == pytest.approx(p.objective(reference(p)), abs=1e-3)


def test_infeasible_detected():
    A = np.array([[1.0], [1.0]])
    p = QpProblem(np.eye(1), np.zeros(1), A, np.array([1.0, -3.0]), np.array([2.0, -2.0]))
    assert solve_qp(p).status == INFEASIBLE


def test_max_iter_reported_honestly():
    rng = np.random.default_rng(5)
    p = random_qp(rng)
    sol = solve_qp(p, QpSettings(max_iter=5, polish=False))
    assert sol.status != SOLVED or max(kkt_residuals(p, sol.x, sol.y)) <= 1e-4


def test_warm_start_reduces_iterations():
    rng = np.random.default_rng(3)
    p = mpc_instance(rng)
    cold = solve_qp(p)
    warm = solve_qp(p, warm_start=cold.x, warm_dual=cold.y)
    assert warm.iterations <= cold.iterations
    assert warm.objective == pytest.approx(cold.objective, abs=1e-3)


def test_update_keeps_factorisation():
    rng = np.random.default_rng(4)
    p = mpc_instance(rng)
    solver = AdmmSolver(p)
    q = mpc_instance(rng)
    solver.update(q.f, q.l, q.u)
    a = solver.solve()
    b = solve_qp(q)
    assert a.objective == pytest.approx(b.objective, abs=1e-3)


def test_deterministic():
    rng = np.random.default_rng(6)
    p = mpc_instance(rng)
    a, b = solve_qp(p), solve_qp(p)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


def test_problem_validation():
    with pytest.raises(ValueError):
        QpProblem(np.eye(2), np.zeros(3), np.eye(2), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        QpProblem(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2), np.eye(2), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        QpProblem(np.eye(2), np.zeros(2), np.eye(2), np.ones(2), np.zeros(2))
