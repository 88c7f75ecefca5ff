"""Dense operator-splitting (ADMM) solver for small convex QPs.

    minimize    0.5 x'Hx + f'x
    subject to  l <= Ax <= u

The iteration follows the OSQP scheme: Ruiz equilibration, over-relaxed
ADMM with a cached Cholesky factor of H + sigma I + A' diag(rho) A, adaptive
rho, a primal infeasibility certificate, and an active-set polish step.
Termination uses absolute residual tolerances on the unscaled problem.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

SOLVED = "solved"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    A: np.ndarray
    l: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        f = np.asarray(self.f, dtype=float).reshape(-1)
        l = np.asarray(self.l, dtype=float).reshape(-1)
        u = np.asarray(self.u, dtype=float).reshape(-1)
        n = f.size
        if H.shape != (n, n):
            raise ValueError(f"H must be {n}x{n}, got {H.shape}")
        if A.shape[1] != n or l.size != A.shape[0] or u.size != A.shape[0]:
            raise ValueError("constraint dimensions do not match")
        if not np.allclose(H, H.T, rtol=0, atol=1e-12):
            raise ValueError("H must be symmetric")
        if np.any(l > u):
            raise ValueError("need l <= u componentwise")
        for name, val in (("H", H), ("A", A), ("f", f), ("l", l), ("u", u)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.f.size

    @property
    def m(self) -> int:
        return self.l.size

    def objective(self, x) -> float:
        return float(0.5 * x @ self.H @ x + self.f @ x)


@dataclass(frozen=True)
class QpSettings:
    eps_prim: float = 1e-4
    eps_dual: float = 1e-4
    eps_pinf: float = 1e-5
    max_iter: int = 4000
    sigma: float = 1e-6
    rho: float = 0.1
    alpha: float = 1.6
    scaling_iters: int = 10
    check_every: int = 5
    adapt_every: int = 25
    polish: bool = True


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    y: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    iterations: int
    objective: float
    polished: bool = False
    rho: float = field(default=0.0, repr=False)


def kkt_residuals(p: QpProblem, x, y) -> tuple[float, float]:
    """(||Ax - clip(Ax, l, u)||inf, ||Hx + f + A'y||inf)."""
    Ax = p.A @ x
    r_prim = np.max(np.abs(Ax - np.clip(Ax, p.l, p.u)), initial=0.0)
    r_dual = np.max(np.abs(p.H @ x + p.f + p.A.T @ y), initial=0.0)
    return float(r_prim), float(r_dual)


def _ruiz(H, A, f, iters):
    n, m = H.shape[0], A.shape[0]
    D, E = np.ones(n), np.ones(m)
    Hs, As, fs = H.copy(), A.copy(), f.copy()
    for _ in range(iters):
        col = np.maximum(np.abs(Hs).max(axis=0), np.abs(As).max(axis=0, initial=0.0))
        row = np.abs(As).max(axis=1, initial=0.0)
        d = 1.0 / np.sqrt(np.clip(col, 1e-4, 1e4))
        e = 1.0 / np.sqrt(np.clip(row, 1e-4, 1e4))
        Hs = d[:, None] * Hs * d[None, :]
        As = e[:, None] * As * d[None, :]
        fs = d * fs
        D *= d
        E *= e
    c_norm = max(np.abs(Hs).max(axis=0).mean(), np.abs(fs).max(initial=0.0))
    c = 1.0 / np.clip(c_norm, 1e-4, 1e4)
    return Hs * c, As, fs * c, D, E, c


class AdmmSolver:
    """Workspace for repeated solves of one problem (not thread-safe)."""

    def __init__(self, problem: QpProblem, settings: QpSettings = QpSettings()):
        self.problem = problem
        self.settings = settings
        p = problem
        self.Hs, self.As, self.fs, self.D, self.E, self.c = _ruiz(p.H, p.A, p.f, settings.scaling_iters)
        self.ls = np.where(np.isfinite(p.l), self.E * p.l, -np.inf)
        self.us = np.where(np.isfinite(p.u), self.E * p.u, np.inf)
        self.eq = (p.u - p.l) <= 1e-8
        self._set_rho(settings.rho)

    def update(self, f=None, l=None, u=None) -> None:
        """Swap the vector data of the problem, keeping scaling and factorisation."""
        p = self.problem
        p = QpProblem(p.H, p.f if f is None else f, p.A, p.l if l is None else l, p.u if u is None else u)
        self.problem = p
        self.fs = self.c * self.D * p.f
        self.ls = np.where(np.isfinite(p.l), self.E * p.l, -np.inf)
        self.us = np.where(np.isfinite(p.u), self.E * p.u, np.inf)
        eq = (p.u - p.l) <= 1e-8
        if np.any(eq != self.eq):
            self.eq = eq
            self._set_rho(self.rho)

    def _set_rho(self, rho: float) -> None:
        self.rho = float(np.clip(rho, 1e-6, 1e6))
        self.rho_vec = np.where(self.eq, 1e3 * self.rho, self.rho)
        M = self.Hs + self.settings.sigma * np.eye(self.problem.n) + self.As.T @ (self.rho_vec[:, None] * self.As)
        self.factor = cho_factor(M)

    def solve(self, x0=None, y0=None) -> QpSolution:
        st, p = self.settings, self.problem
        Hs, As, fs, D, E, c = self.Hs, self.As, self.fs, self.D, self.E, self.c
        ls, us = self.ls, self.us
        n, m = p.n, p.m
        xs = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float) / D
        zs = np.clip(As @ xs, ls, us)
        ys = np.zeros(m) if y0 is None else np.asarray(y0, dtype=float) / E * c
        status, k = MAX_ITER, 0
        r_prim = r_dual = np.inf
        for k in range(1, st.max_iter + 1):
            y_prev = ys
            rhs = st.sigma * xs - fs + As.T @ (self.rho_vec * zs - ys)
            xt = cho_solve(self.factor, rhs)
            zt = As @ xt
            xs = st.alpha * xt + (1 - st.alpha) * xs
            zr = st.alpha * zt + (1 - st.alpha) * zs
            zs = np.clip(zr + ys / self.rho_vec, ls, us)
            ys = ys + self.rho_vec * (zr - zs)

            if k % st.check_every and k != st.max_iter:
                continue
            Axs = As @ xs
            r_prim = np.max(np.abs((Axs - zs) / E), initial=0.0)
            Hx, Aty = Hs @ xs, As.T @ ys
            r_dual = np.max(np.abs((Hx + fs + Aty) / D), initial=0.0) / c
            if r_prim <= st.eps_prim and r_dual <= st.eps_dual:
                status = SOLVED
                break
            if self._primal_infeasible(ys - y_prev):
                status = INFEASIBLE
                break
            if k % st.adapt_every == 0:
                num = r_prim / max(np.max(np.abs(Axs / E), initial=0.0), np.max(np.abs(zs / E), initial=0.0), 1e-12)
                den = r_dual / max(np.max(np.abs(Hx / D)) / c, np.max(np.abs(Aty / D)) / c,
                                   np.max(np.abs(p.f), initial=0.0), 1e-12)
                rho_new = self.rho * np.sqrt(num / max(den, 1e-12))
                if rho_new > 5 * self.rho or rho_new < 0.2 * self.rho:
                    self._set_rho(rho_new)

        x = D * xs
        y = E * ys / c
        polished = False
        if st.polish and status == SOLVED:
            pol = self._polish(x, y, zs / E)
            if pol is not None:
                x, y = pol
                polished = True
        r_prim, r_dual = kkt_residuals(p, x, y)
        if status == SOLVED and (r_prim > st.eps_prim or r_dual > st.eps_dual):
            status = MAX_ITER
        return QpSolution(x=x, y=y, status=status, primal_residual=r_prim, dual_residual=r_dual,
                          iterations=k, objective=p.objective(x), polished=polished, rho=self.rho)

    def _primal_infeasible(self, dy) -> bool:
        """Certificate on the unscaled dual step: A'dy ~ 0 with negative support."""
        p = self.problem
        dy = self.E * dy
        norm = np.max(np.abs(dy), initial=0.0)
        if norm < 1e-12:
            return False
        eps = self.settings.eps_pinf * norm
        if np.max(np.abs(p.A.T @ dy), initial=0.0) > eps:
            return False
        pos, neg = dy > 0, dy < 0
        support = np.sum(p.u[pos] * dy[pos]) + np.sum(p.l[neg] * dy[neg])
        return bool(support < -eps)

    def _polish(self, x, y, z, rounds: int = 10):
        """Solve the equality-constrained QP on the guessed active set.

        Rows violated by the polished point are added and rows whose dual has
        the wrong sign are dropped, for a few rounds: directions with almost
        no curvature (late inputs of a long horizon) are otherwise fixed only
        by the regularisation and can leave the feasible set.
        """
        p = self.problem
        tol = 0.1 * self.settings.eps_prim
        lower = (z - p.l < -y) | self.eq
        upper = (p.u - z < y) & ~lower
        best = None
        for _ in range(rounds):
            sol = self._solve_active(lower, upper)
            if sol is None:
                break
            xp, yp = sol
            Ax = p.A @ xp
            wrong = (yp > 1e-9) & lower & ~self.eq | (yp < -1e-9) & upper
            viol_l, viol_u = Ax < p.l - tol, Ax > p.u + tol
            if not (wrong.any() or viol_l.any() or viol_u.any()):
                best = (xp, yp)
                break
            lower = (lower & ~wrong) | viol_l
            upper = (upper & ~wrong & ~viol_l) | viol_u
        if best is None:
            return None
        rp_old, rd_old = kkt_residuals(p, x, y)
        rp, rd = kkt_residuals(p, *best)
        if max(rp, rd) < max(rp_old, rd_old):
            return best
        return None

    def _solve_active(self, lower, upper):
        p = self.problem
        act = lower | upper
        Aa = p.A[act]
        b = np.where(lower[act], p.l[act], p.u[act])
        k = Aa.shape[0]
        delta = 1e-9
        K = np.block([[p.H + delta * np.eye(p.n), Aa.T], [Aa, -delta * np.eye(k)]])
        Kt = np.block([[p.H, Aa.T], [Aa, np.zeros((k, k))]])
        rhs = np.concatenate([-p.f, b])
        try:
            lu = lu_factor(K, check_finite=False)
        except (ValueError, np.linalg.LinAlgError):
            return None
        sol = lu_solve(lu, rhs)
        for _ in range(3):
            sol = sol + lu_solve(lu, rhs - Kt @ sol)
        if not np.all(np.isfinite(sol)):
            return None
        yp = np.zeros(p.m)
        yp[act] = sol[p.n:]
        return sol[: p.n], yp


def solve_qp(problem: QpProblem, settings: QpSettings = QpSettings(), warm_start=None, warm_dual=None) -> QpSolution:
    return AdmmSolver(problem, settings).solve(warm_start, warm_dual)
