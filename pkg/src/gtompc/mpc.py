"""Guided time-optimal MPC and the fixed-bound baseline.

Every control step: split the thrust budget (GTOMPC only), build the
bang-bang guidance from the current state, condense the tracking problem
over the acceleration sequence a[0..Np] into a dense QP with box and
jerk-rate rows, solve it and apply a[0].

Dynamics are zero-order hold, x[k+1] = A_d x[k] + B_d a[k], so a[0] acts on
the first transition and a[Np] only enters through the rate constraints.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .core import State3
from .decomposition import DecompositionConfig, DecompositionResult, decompose_thrust
from .guidance import GuidanceTrajectory, build_guidance
from .qp import SOLVED, AdmmSolver, QpProblem, QpSettings, QpSolution

GTOMPC = "GTOMPC"
DTOTP = "DTOTP"
HESSIAN_REG = 1e-8


@dataclass(frozen=True)
class MpcParams:
    dt: float = 0.05
    Np: int = 30
    rho0: float = 1.0
    rho1: float = 0.5
    j_max: np.ndarray = field(default_factory=lambda: np.full(3, 5.0))
    mode: str = GTOMPC
    # per-axis bound of the baseline as a fraction of the budget
    dtotp_fraction: float = 1 / np.sqrt(3)

    def __post_init__(self):
        object.__setattr__(self, "j_max", np.broadcast_to(np.asarray(self.j_max, dtype=float), (3,)).copy())
        object.__setattr__(self, "mode", self.mode.upper())
        if not self.dt > 0 or self.Np < 1:
            raise ValueError(f"need dt > 0 and Np >= 1, got dt={self.dt}, Np={self.Np}")
        if self.rho0 < 0 or self.rho1 < 0 or not self.rho0 + self.rho1 > 0:
            raise ValueError("weights must be nonnegative with a positive sum")
        if np.any(self.j_max <= 0):
            raise ValueError(f"j_max must be positive, got {self.j_max}")
        if self.mode not in (GTOMPC, DTOTP):
            raise ValueError(f"mode must be {GTOMPC} or {DTOTP}, got {self.mode}")

    @property
    def n_vars(self) -> int:
        return 3 * (self.Np + 1)


@dataclass
class WarmStart:
    a_seq: np.ndarray | None = None
    y: np.ndarray | None = None
    direction: np.ndarray | None = None


@dataclass(frozen=True)
class MpcSolution:
    a_seq: np.ndarray  # (Np + 1, 3)
    predicted: np.ndarray  # (Np + 1, 6) stacked [p, v]
    cost: float
    qp: QpSolution | None
    a_command: np.ndarray
    a_max: np.ndarray
    guidance: GuidanceTrajectory
    decomposition: DecompositionResult | None = None
    fallback: bool = False
    projection: float = 0.0

    @property
    def predicted_states(self) -> list[State3]:
        return [State3.from_vector(x) for x in self.predicted]


def discrete_matrices(dt: float) -> tuple[np.ndarray, np.ndarray]:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    I = np.eye(3)
    Ad = np.block([[I, dt * I], [np.zeros((3, 3)), I]])
    Bd = np.vstack([0.5 * dt * dt * I, dt * I])
    return Ad, Bd


@lru_cache(maxsize=16)
def _condensed(dt: float, Np: int, rho0: float, rho1: float):
    """Prediction maps X = Phi x0 + G a, the weight Q and H = G'QG + reg."""
    Ad, Bd = discrete_matrices(dt)
    n_u = 3 * (Np + 1)
    Phi = np.zeros((6 * (Np + 1), 6))
    G = np.zeros((6 * (Np + 1), n_u))
    Ak = np.eye(6)
    for k in range(Np + 1):
        Phi[6 * k:6 * k + 6] = Ak
        Ak = Ad @ Ak
    # column block j (input a[j]) first reaches state k = j + 1
    AkB = [Bd]
    for _ in range(Np - 1):
        AkB.append(Ad @ AkB[-1])
    for k in range(1, Np + 1):
        for j in range(k):
            G[6 * k:6 * k + 6, 3 * j:3 * j + 3] = AkB[k - 1 - j]
    q = np.tile(np.r_[np.full(3, rho0), np.full(3, rho1)], Np + 1)
    H = G.T @ (q[:, None] * G) + HESSIAN_REG * np.eye(n_u)
    H = 0.5 * (H + H.T)
    # constraint rows: box on every a[k], then first differences with a[-1] = a_prev
    Dm = np.eye(Np + 1) - np.eye(Np + 1, k=-1)
    A = np.vstack([np.eye(n_u), np.kron(Dm, np.eye(3))])
    for arr in (Phi, G, q, H, A):
        arr.setflags(write=False)
    return Phi, G, q, H, A


def _bounds(a_prev, a_max, params: MpcParams):
    Np = params.Np
    box = np.tile(a_max, Np + 1)
    rate = np.tile(params.j_max * params.dt, Np + 1)
    shift = np.concatenate([a_prev, np.zeros(3 * Np)])
    l = np.concatenate([-box, shift - rate])
    u = np.concatenate([box, shift + rate])
    return l, u


def _linear_term(current: State3, guidance: GuidanceTrajectory, params: MpcParams):
    Phi, G, q, _, _ = _condensed(params.dt, params.Np, params.rho0, params.rho1)
    ref = np.hstack([guidance.p, guidance.v]).reshape(-1)
    free = Phi @ current.to_vector() - ref
    return G.T @ (q * free)


def build_mpc_qp(current: State3, guidance: GuidanceTrajectory, a_prev, params: MpcParams, a_max) -> QpProblem:
    """Condensed QP over [a[0], ..., a[Np]] (3 (Np + 1) variables)."""
    if guidance.p.shape[0] != params.Np + 1:
        raise ValueError(f"guidance has {guidance.p.shape[0]} samples, need Np + 1 = {params.Np + 1}")
    if not np.isclose(guidance.dt, params.dt):
        raise ValueError(f"guidance dt {guidance.dt} differs from controller dt {params.dt}")
    _, _, _, H, A = _condensed(params.dt, params.Np, params.rho0, params.rho1)
    f = _linear_term(current, guidance, params)
    l, u = _bounds(np.asarray(a_prev, dtype=float), np.asarray(a_max, dtype=float), params)
    return QpProblem(H, f, A, l, u)


def predict(current: State3, a_seq, params: MpcParams) -> np.ndarray:
    Phi, G, _, _, _ = _condensed(params.dt, params.Np, params.rho0, params.rho1)
    return (Phi @ current.to_vector() + G @ np.asarray(a_seq).reshape(-1)).reshape(-1, 6)


def tracking_cost(predicted, guidance: GuidanceTrajectory, params: MpcParams) -> float:
    """Sum over k = 0..Np of rho0 |p - p*|^2 + rho1 |v - v*|^2."""
    ep = predicted[:, :3] - guidance.p
    ev = predicted[:, 3:] - guidance.v
    return float(params.rho0 * np.sum(ep * ep) + params.rho1 * np.sum(ev * ev))


def feasible_interval(a_prev, a_max, params: MpcParams):
    """Per-axis set of commands meeting both the box and the rate bound."""
    step = params.j_max * params.dt
    lo = np.maximum(-a_max, a_prev - step)
    hi = np.minimum(a_max, a_prev + step)
    return lo, hi


def reachable_bound(desired, a_prev, max_drop) -> np.ndarray:
    """Raise any axis of ``desired`` that the previous command cannot get inside in one step.

    With |a_prev| above the bound by more than the rate step the box and rate
    rows of the QP have no common point. Such axes are held at
    |a_prev| - max_drop and the rest of the sphere of radius |desired| is
    shared by the other axes in proportion to the desired split.
    """
    desired = np.asarray(desired, dtype=float)
    radius = float(np.linalg.norm(desired))
    floor = np.maximum(np.abs(np.asarray(a_prev, dtype=float)) - max_drop, 0.0)
    a = desired.copy()
    fixed = np.zeros(3, dtype=bool)
    for _ in range(3):
        low = ~fixed & (a < floor)
        if not low.any():
            break
        fixed |= low
        a[fixed] = floor[fixed]
        free = ~fixed
        rest = radius**2 - np.sum(a[fixed] ** 2)
        if not free.any():
            break
        if rest <= 0:
            a[free] = 0.0
            break
        norm_free = np.linalg.norm(desired[free])
        a[free] = desired[free] * np.sqrt(rest) / norm_free
    return a


class MpcController:
    """Receding-horizon controller that owns its warm-start state (single-threaded)."""

    def __init__(self, params: MpcParams, budget: float,
                 cfg: DecompositionConfig = DecompositionConfig(),
                 qp_settings: QpSettings = QpSettings(), warm_start: bool = True):
        if not budget > 0:
            raise ValueError(f"budget must be positive, got {budget}")
        self.params = params
        self.budget = float(budget)
        self.cfg = cfg
        self.qp_settings = qp_settings
        self.use_warm = warm_start
        self.warm = WarmStart()
        self._solver: AdmmSolver | None = None

    def reset(self) -> None:
        self.warm = WarmStart()

    def limit_box(self, desired, a_prev) -> np.ndarray:
        """Per-axis bound for this step, kept reachable from the previous command."""
        return reachable_bound(desired, a_prev, self.params.j_max * self.params.dt)

    def a_max_for(self, current: State3, target: State3):
        if self.params.mode == DTOTP:
            return np.full(3, self.budget * self.params.dtotp_fraction), None
        direction = self.warm.direction if self.use_warm else None
        dec = decompose_thrust(current, target, self.budget, self.cfg, direction0=direction)
        self.warm.direction = dec.direction
        return dec.a_max, dec

    def step(self, current: State3, target: State3, a_prev) -> MpcSolution:
        a_max, dec = self.a_max_for(current, target)
        a_max = self.limit_box(a_max, a_prev)
        guidance = build_guidance(current, target, a_max, self.params.dt, self.params.Np)
        return self.track(current, guidance, a_prev, a_max, dec)

    def track(self, current: State3, guidance: GuidanceTrajectory, a_prev, a_max,
              decomposition: DecompositionResult | None = None) -> MpcSolution:
        """Solve the tracking QP for an arbitrary guidance and return the command."""
        params = self.params
        a_prev = np.asarray(a_prev, dtype=float)
        a_max = self.limit_box(a_max, a_prev)
        problem = build_mpc_qp(current, guidance, a_prev, params, a_max)
        if self._solver is None or self._solver.problem.H is not problem.H:
            self._solver = AdmmSolver(problem, self.qp_settings)
        else:
            self._solver.update(problem.f, problem.l, problem.u)

        x0 = y0 = None
        if self.use_warm and self.warm.a_seq is not None:
            prev = self.warm.a_seq
            x0 = np.vstack([prev[1:], prev[-1:]]).reshape(-1)
            y0 = self.warm.y
        sol = self._solver.solve(x0, y0)

        lo, hi = feasible_interval(a_prev, a_max, params)
        if sol.status == SOLVED:
            a_seq = sol.x.reshape(-1, 3)
            cmd = np.clip(a_seq[0], lo, hi)
            projection = float(np.max(np.abs(cmd - a_seq[0])))
            fallback = False
            self.warm.a_seq, self.warm.y = a_seq.copy(), sol.y.copy()
        else:
            # hold the previous command as closely as the constraints allow
            cmd = np.clip(np.clip(a_prev, -a_max, a_max), a_prev - params.j_max * params.dt,
                          a_prev + params.j_max * params.dt)
            a_seq = np.tile(cmd, (params.Np + 1, 1))
            projection = 0.0
            fallback = True
            self.warm.a_seq = self.warm.y = None
        predicted = predict(current, a_seq, params)
        return MpcSolution(
            a_seq=a_seq,
            predicted=predicted,
            cost=tracking_cost(predicted, guidance, params),
            qp=sol,
            a_command=cmd,
            a_max=a_max,
            guidance=guidance,
            decomposition=decomposition,
            fallback=fallback,
            projection=projection,
        )


def step(current: State3, target: State3, a_prev, params: MpcParams, budget: float,
         cfg: DecompositionConfig = DecompositionConfig(), warm: WarmStart | None = None) -> MpcSolution:
    """One control step; ``warm`` is updated in place when given."""
    ctrl = MpcController(params, budget, cfg, warm_start=warm is not None)
    if warm is not None:
        ctrl.warm = warm
    return ctrl.step(current, target, a_prev)


def with_mode(params: MpcParams, mode: str) -> MpcParams:
    return replace(params, mode=mode)
