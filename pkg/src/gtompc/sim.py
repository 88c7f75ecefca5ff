"""Point-mass closed loop, reference generators and the line-to-circle flight."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_TOLERANCES, State3
from .decomposition import DecompositionConfig, decompose_thrust
from .guidance import build_guidance, reference_guidance
from .mpc import DTOTP, GTOMPC, MpcController, MpcParams, feasible_interval, with_mode

LINE_START = np.array([4.0, 4.0, 4.0])
LINE_END = np.array([7.0, 7.0, 4.0])
LINE_VELOCITY = np.array([1.0, 1.0, 0.0])
CIRCLE_CENTER = np.array([14.0, 0.0, 6.0])
CIRCLE_RADIUS = 2.0
CIRCLE_RATE = math.pi / 5
CIRCLE_PHASE = -0.75 * math.pi
# entry state as printed; it sits ~7 cm off the circle equation
NO_RESET_START = State3(LINE_END, LINE_VELOCITY)
NO_RESET_TARGET = State3([12.516, -1.446, 6.0], [0.888, -0.888, 0.0])

CSV_HEADER = ("t", "px", "py", "pz", "vx", "vy", "vz", "ax_cmd", "ay_cmd", "az_cmd",
              "axmax", "aymax", "azmax", "qp_iters")


@dataclass(frozen=True)
class SimConfig:
    dt_sim: float | None = None  # None: controller dt / 5
    actuator_lag_tau: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dt_sim is not None and not self.dt_sim > 0:
            raise ValueError(f"dt_sim must be positive, got {self.dt_sim}")
        if self.actuator_lag_tau < 0:
            raise ValueError(f"actuator_lag_tau must be >= 0, got {self.actuator_lag_tau}")

    def substeps(self, dt_ctrl: float) -> tuple[int, float]:
        dt_sim = dt_ctrl / 5 if self.dt_sim is None else self.dt_sim
        n = round(dt_ctrl / dt_sim)
        if n < 1 or abs(n * dt_sim - dt_ctrl) > 1e-9 * dt_ctrl:
            raise ValueError(f"dt_sim {dt_sim} must divide the controller period {dt_ctrl}")
        return n, dt_ctrl / n


@dataclass
class ScenarioResult:
    mode: str
    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    a_cmd: np.ndarray
    a_max: np.ndarray
    qp_iters: np.ndarray
    arrival_time: float | None
    constraint_violations: int = 0
    fallbacks: int = 0
    max_box_violation: float = 0.0
    max_rate_violation: float = 0.0
    phase: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    info: dict = field(default_factory=dict)

    @property
    def arrived(self) -> bool:
        return self.arrival_time is not None

    def rows(self):
        for k in range(len(self.t)):
            yield [self.t[k], *self.p[k], *self.v[k], *self.a_cmd[k], *self.a_max[k], int(self.qp_iters[k])]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row[:-1]] + [row[-1]])


def state_arrived(state: State3, target: State3, pos_tol: float, vel_tol: float) -> bool:
    return state.allclose(target, pos_tol, vel_tol)


def integrate(state: State3, a_cmd, dt_sim: float, a_eff=None, tau: float = 0.0):
    """Exact step of p' = v, v' = a_eff with a_eff' = (a_cmd - a_eff) / tau.

    ``tau = 0`` applies ``a_cmd`` directly; ``tau = inf`` freezes ``a_eff``.
    Returns the new state and the new effective acceleration.
    """
    if not dt_sim > 0:
        raise ValueError(f"dt_sim must be positive, got {dt_sim}")
    a_cmd = np.asarray(a_cmd, dtype=float)
    a0 = a_cmd if a_eff is None else np.asarray(a_eff, dtype=float)
    h = dt_sim
    if tau == 0:
        a0 = a_cmd
        dv, dp, a1 = a_cmd * h, 0.5 * a_cmd * h * h, a_cmd
    elif math.isinf(tau):
        dv, dp, a1 = a0 * h, 0.5 * a0 * h * h, a0
    else:
        x = h / tau
        one_minus = -math.expm1(-x)
        gap = a0 - a_cmd
        dv = a_cmd * h + gap * tau * one_minus
        dp = 0.5 * a_cmd * h * h + gap * tau * (h - tau * one_minus)
        a1 = a_cmd + gap * (1.0 - one_minus)
    return State3(state.p + state.v * h + dp, state.v + dv), a1


def line_reference(t):
    """Straight segment [4, 4, 4] -> [7, 7, 4] at constant velocity [1, 1, 0]."""
    t = float(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    return LINE_START + LINE_VELOCITY * t, LINE_VELOCITY.copy()


def circle_reference(t, with_accel: bool = False):
    """Circle of radius 2 about [14, 0, 6] with angular rate pi/5, phase -3pi/4 at t = 0."""
    t = np.asarray(t, dtype=float)
    th = CIRCLE_RATE * t + CIRCLE_PHASE
    c, s = np.cos(th), np.sin(th)
    z = np.zeros_like(th)
    p = np.stack([CIRCLE_CENTER[0] + CIRCLE_RADIUS * c, CIRCLE_RADIUS * s, z + CIRCLE_CENTER[2]], axis=-1)
    w = CIRCLE_RADIUS * CIRCLE_RATE
    v = np.stack([-w * s, w * c, z], axis=-1)
    if not with_accel:
        return p, v
    a = np.stack([-w * CIRCLE_RATE * c, -w * CIRCLE_RATE * s, z], axis=-1)
    return p, v, a


def circle_phase_fit(p) -> float:
    """Circle time whose reference point is closest to ``p`` (first lap)."""
    rel = np.asarray(p)[:2] - CIRCLE_CENTER[:2]
    th = math.atan2(rel[1], rel[0])
    return ((th - CIRCLE_PHASE) % (2 * math.pi)) / CIRCLE_RATE


def circle_deviation(p, t_circle) -> float:
    return float(np.linalg.norm(np.asarray(p) - circle_reference(t_circle)[0]))


class _Recorder:
    def __init__(self):
        self.t, self.p, self.v, self.a, self.amax, self.iters, self.phase = ([] for _ in range(7))

    def add(self, t, state, a, amax, iters, phase):
        self.t.append(t)
        self.p.append(state.p.copy())
        self.v.append(state.v.copy())
        self.a.append(np.array(a, dtype=float))
        self.amax.append(np.array(amax, dtype=float))
        self.iters.append(iters)
        self.phase.append(phase)

    def result(self, mode, arrival, stats, info):
        arr = lambda x, d=3: np.array(x, dtype=float).reshape(-1, d)
        return ScenarioResult(
            mode=mode,
            t=np.array(self.t, dtype=float),
            p=arr(self.p), v=arr(self.v), a_cmd=arr(self.a), a_max=arr(self.amax),
            qp_iters=np.array(self.iters, dtype=int),
            arrival_time=arrival,
            phase=np.array(self.phase, dtype=int),
            info=info,
            **stats,
        )


class _Loop:
    """Shared closed-loop machinery: plant integration and constraint audit."""

    def __init__(self, ctrl: MpcController, sim_cfg: SimConfig, state: State3, a_prev, t0: float):
        self.ctrl = ctrl
        self.n_sub, self.h = sim_cfg.substeps(ctrl.params.dt)
        self.tau = sim_cfg.actuator_lag_tau
        self.rng = np.random.default_rng(sim_cfg.seed)
        self.noise = sim_cfg.noise_std
        self.state = state
        self.a_prev = np.asarray(a_prev, dtype=float)
        self.a_eff = self.a_prev.copy()
        self.t = t0
        self.violations = 0
        self.fallbacks = 0
        self.box_viol = 0.0
        self.rate_viol = 0.0
        self.watch = None
        self.arrived_at = None

    def watch_arrival(self, target: State3, pos_tol: float, vel_tol: float):
        self.watch = (target, pos_tol, vel_tol)
        self.arrived_at = self.t if state_arrived(self.state, *self.watch) else None

    def apply(self, sol):
        params = self.ctrl.params
        cmd = sol.a_command
        box = float(np.max(np.abs(cmd) - sol.a_max))
        rate = float(np.max(np.abs(cmd - self.a_prev) - params.j_max * params.dt))
        self.box_viol = max(self.box_viol, box)
        self.rate_viol = max(self.rate_viol, rate)
        if box > 1e-6 or rate > 1e-6:
            self.violations += 1
        self.fallbacks += int(sol.fallback)
        for i in range(self.n_sub):
            self.state, self.a_eff = integrate(self.state, cmd, self.h, self.a_eff, self.tau)
            if self.watch is not None and self.arrived_at is None and state_arrived(self.state, *self.watch):
                self.arrived_at = self.t + (i + 1) * self.h
        if self.noise > 0:
            self.state = State3(self.state.p, self.state.v + self.rng.normal(0, self.noise, 3))
        self.a_prev = cmd
        self.t = self.t + params.dt

    def stats(self):
        return dict(constraint_violations=self.violations, fallbacks=self.fallbacks,
                    max_box_violation=max(self.box_viol, 0.0), max_rate_violation=max(self.rate_viol, 0.0))


def initial_t_min(initial: State3, target: State3, params: MpcParams, budget: float,
                  cfg: DecompositionConfig = DecompositionConfig()) -> float:
    if params.mode == DTOTP:
        a_max = np.full(3, budget * params.dtotp_fraction)
    else:
        a_max = decompose_thrust(initial, target, budget, cfg).a_max
    return build_guidance(initial, target, a_max, params.dt, 1).t_min


def _transfer(loop: _Loop, rec: _Recorder, target: State3, t_cap: float, phase: int,
              pos_tol: float, vel_tol: float):
    """Run the point-to-point loop until arrival or the time cap; returns arrival duration."""
    t_start = loop.t
    loop.watch_arrival(target, pos_tol, vel_tol)
    n_max = int(math.ceil(t_cap / loop.ctrl.params.dt - 1e-9))
    for _ in range(n_max):
        if loop.arrived_at is not None:
            break
        sol = loop.ctrl.step(loop.state, target, loop.a_prev)
        rec.add(loop.t, loop.state, sol.a_command, sol.a_max, sol.qp.iterations, phase)
        loop.apply(sol)
    loop.watch = None
    return None if loop.arrived_at is None else loop.arrived_at - t_start


def run_point_to_point(initial: State3, target: State3, mode: str = GTOMPC,
                       params: MpcParams = MpcParams(), budget: float = 5.0,
                       sim_cfg: SimConfig = SimConfig(),
                       cfg: DecompositionConfig = DecompositionConfig(),
                       a_prev=None, t_cap: float | None = None,
                       pos_tol: float = DEFAULT_TOLERANCES.arrival_pos,
                       vel_tol: float = DEFAULT_TOLERANCES.arrival_vel) -> ScenarioResult:
    params = with_mode(params, mode)
    if t_cap is None:
        t_cap = max(5.0 * initial_t_min(initial, target, params, budget, cfg), params.dt)
    ctrl = MpcController(params, budget, cfg)
    loop = _Loop(ctrl, sim_cfg, initial, np.zeros(3) if a_prev is None else a_prev, 0.0)
    rec = _Recorder()
    arrival = _transfer(loop, rec, target, t_cap, 2, pos_tol, vel_tol)
    rec.add(loop.t, loop.state, loop.a_prev, np.full(3, np.nan) if not rec.amax else rec.amax[-1], 0, 2)
    info = {"t_cap": t_cap, "final_state": loop.state}
    return rec.result(params.mode, arrival, loop.stats(), info)


def _track_circle(loop: _Loop, rec: _Recorder, budget: float, duration: float) -> np.ndarray:
    """Track circle samples from the best-fit phase; returns the position error per period."""
    params = loop.ctrl.params
    dt = params.dt
    a_box = np.full(3, budget / np.sqrt(3))
    tc = circle_phase_fit(loop.state.p)
    horizon = dt * np.arange(params.Np + 1)
    err = []
    for _ in range(int(round(duration / dt))):
        p_ref, v_ref, a_ref = circle_reference(tc + horizon, with_accel=True)
        guidance = reference_guidance(p_ref, v_ref, a_ref, dt, a_box)
        sol = loop.ctrl.track(loop.state, guidance, loop.a_prev, a_box)
        rec.add(loop.t, loop.state, sol.a_command, a_box, sol.qp.iterations, 3)
        loop.apply(sol)
        tc += dt
        err.append(circle_deviation(loop.state.p, tc))
    return np.array(err)


def run_circle_tracking(initial: State3, params: MpcParams = MpcParams(), budget: float = 5.0,
                        duration: float = 3.0, sim_cfg: SimConfig = SimConfig(), a_prev=None) -> ScenarioResult:
    """Circle capture on its own: MPC tracking of circle samples from ``initial``."""
    ctrl = MpcController(params, budget)
    loop = _Loop(ctrl, sim_cfg, initial, np.zeros(3) if a_prev is None else a_prev, 0.0)
    rec = _Recorder()
    err = _track_circle(loop, rec, budget, duration)
    rec.add(loop.t, loop.state, loop.a_prev, rec.amax[-1], 0, 3)
    return rec.result(params.mode, None, loop.stats(), {"circle_error": err, "final_state": loop.state})


def run_no_reset_scenario(params: MpcParams = MpcParams(), budget: float = 5.0,
                          sim_cfg: SimConfig = SimConfig(), mode: str = GTOMPC,
                          cfg: DecompositionConfig = DecompositionConfig(),
                          line_duration: float = 3.0, circle_duration: float = 3.0,
                          pos_tol: float = DEFAULT_TOLERANCES.arrival_pos,
                          vel_tol: float = DEFAULT_TOLERANCES.arrival_vel) -> ScenarioResult:
    """Line -> transfer -> circle. ``arrival_time`` is the duration of the transfer.

    Phase 1 is the line flown open loop at constant velocity (the plant is
    ideal, so the transfer simply starts from the line's end state). Phase 3
    keeps the same MPC running with circle samples as the reference, using the
    symmetric per-axis bound.
    """
    params = with_mode(params, mode)
    rec = _Recorder()
    dt = params.dt
    n_line = int(round(line_duration / dt))
    for k in range(n_line):
        p, v = line_reference(k * dt)
        rec.add(k * dt, State3(p, v), np.zeros(3), np.full(3, np.nan), 0, 1)
    t_handoff = n_line * dt

    ctrl = MpcController(params, budget, cfg)
    loop = _Loop(ctrl, sim_cfg, NO_RESET_START, np.zeros(3), t_handoff)
    t_cap = max(5.0 * initial_t_min(NO_RESET_START, NO_RESET_TARGET, params, budget, cfg), dt)
    arrival = _transfer(loop, rec, NO_RESET_TARGET, t_cap, 2, pos_tol, vel_tol)

    circle_err = np.zeros(0)
    if arrival is not None:
        ctrl.warm.a_seq = ctrl.warm.y = None
        circle_err = _track_circle(loop, rec, budget, circle_duration)
    rec.add(loop.t, loop.state, loop.a_prev, rec.amax[-1], 0, 3 if arrival is not None else 2)
    info = {
        "t_handoff": t_handoff,
        "t_cap": t_cap,
        "circle_error": circle_err,
        "final_state": loop.state,
    }
    return rec.result(params.mode, arrival, loop.stats(), info)


def closest_approach(result: ScenarioResult, target: State3,
                     pos_tol: float = DEFAULT_TOLERANCES.arrival_pos,
                     vel_tol: float = DEFAULT_TOLERANCES.arrival_vel, phase: int = 2) -> tuple[float, float]:
    """(time, error) of the recorded row nearest the target, error in units of the arrival tolerance.

    An error below 1 means the arrival test passed at that row.
    """
    rows = np.flatnonzero(result.phase == phase)
    if rows.size == 0:
        raise ValueError(f"no rows recorded in phase {phase}")
    e = np.maximum(np.linalg.norm(result.p[rows] - target.p, axis=1) / pos_tol,
                   np.linalg.norm(result.v[rows] - target.v, axis=1) / vel_tol)
    k = int(np.argmin(e))
    return float(result.t[rows[k]] - result.t[rows[0]]), float(e[k])
