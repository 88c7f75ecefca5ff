"""Shortest exact transfer for the line-to-circle task under the jerk bound, on the 0.05 s grid.

Bisects the step count N of a feasibility LP: zero-order-hold double
integrator, rate rows |a[k] - a[k-1]| <= j_max dt with a[-1] = 0, and
either the symmetric box (baseline) or an outer polytope of the thrust
sphere. The polytope contains the sphere, so its time is a lower bound.
"""
import numpy as np
from scipy.optimize import linprog

from gtompc.mpc import discrete_matrices
from gtompc.sim import NO_RESET_START, NO_RESET_TARGET

DT, BUDGET, JMAX = 0.05, 5.0, 5.0


def _directions(n=200):
    # Fibonacci sphere
    k = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * k / n)
    th = np.pi * (1 + 5**0.5) * k
    return np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=1)


def feasible(N, sphere: bool) -> bool:
    Ad, Bd = discrete_matrices(DT)
    nv = 3 * N
    # terminal state = Ad^N x0 + sum Ad^(N-1-k) Bd a[k]
    M = np.zeros((6, nv))
    Ak = np.eye(6)
    for k in reversed(range(N)):
        M[:, 3 * k:3 * k + 3] = Ak @ Bd
        Ak = Ad @ Ak
    rhs = NO_RESET_TARGET.to_vector() - Ak @ NO_RESET_START.to_vector()
    D = (np.eye(N) - np.eye(N, k=-1))
    R = np.kron(D, np.eye(3))
    A_ub = [R, -R]
    b_ub = [np.full(nv, JMAX * DT)] * 2
    if sphere:
        dirs = _directions()
        A_ub.append(np.kron(np.eye(N), dirs))
        b_ub.append(np.full(N * len(dirs), BUDGET))
        bounds = (None, None)
    else:
        bounds = (-BUDGET / np.sqrt(3), BUDGET / np.sqrt(3))
    res = linprog(np.zeros(nv), A_ub=np.vstack(A_ub), b_ub=np.concatenate(b_ub),
                  A_eq=M, b_eq=rhs, bounds=bounds, method="highs")
    return res.status == 0


def min_steps(sphere: bool, lo=10, hi=200) -> int:
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if feasible(mid, sphere) else (mid, hi)
    return hi


if __name__ == "__main__":
    for sphere, name in ((True, "thrust sphere (outer polytope)"), (False, "symmetric box budget/sqrt(3)")):
        n = min_steps(sphere)
        print(f"{name}: {n} steps = {n * DT:.2f} s")
