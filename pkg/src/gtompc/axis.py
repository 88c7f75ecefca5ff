"""Closed-form minimum-time control of a single double-integrator axis.

Notation, per axis with bound A > 0::

    dp = p0 - pf     sp = p0 + pf
    dv = v0 - vf     sv = v0 + vf

Switch function and branch convention (reconciled against ``oracle_solve``)::

    h = dp + sv * |dv| / (2 A)

    h > 0:  first arc -A,  T = sv + sqrt(4 A dp + sv^2 + dv^2)
    h < 0:  first arc +A,  T = -sv + sqrt(-4 A dp + sv^2 + dv^2)
    h = 0:  single arc -sgn(dv) A,  T = |dv|

``h`` is the signed position overshoot left after driving the velocity
straight to ``vf`` at full authority: positive means the vehicle would end up
past the target, so it must brake first. The minimum time is ``T / A``. Both
square-root arguments are >= (sv -/+ |dv|)^2 on their branch, so they are
never negative for valid inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar


@dataclass(frozen=True)
class AxisBoundary:
    p0: float
    v0: float
    pf: float
    vf: float
    a_max: float

    def __post_init__(self):
        vals = (self.p0, self.v0, self.pf, self.vf, self.a_max)
        if not all(np.isfinite(vals)):
            raise ValueError(f"boundary values must be finite, got {vals}")
        if not self.a_max > 0:
            raise ValueError(f"a_max must be positive, got {self.a_max}")

    @property
    def dp(self) -> float:
        return self.p0 - self.pf

    @property
    def sp(self) -> float:
        return self.p0 + self.pf

    @property
    def dv(self) -> float:
        return self.v0 - self.vf

    @property
    def sv(self) -> float:
        return self.v0 + self.vf


@dataclass(frozen=True)
class AxisSolution:
    t_total: float
    sign_first: int
    t_switch: float
    boundary: AxisBoundary

    @property
    def v_switch(self) -> float:
        b = self.boundary
        return b.v0 + self.sign_first * b.a_max * self.t_switch

    @property
    def p_switch(self) -> float:
        b = self.boundary
        ts = self.t_switch
        return b.p0 + b.v0 * ts + 0.5 * self.sign_first * b.a_max * ts * ts


def switch_function_arrays(p0, v0, pf, vf, a_max):
    dp = np.subtract(p0, pf)
    dv = np.subtract(v0, vf)
    sv = np.add(v0, vf)
    return dp + sv * np.abs(dv) / (2.0 * np.asarray(a_max, dtype=float))


def transfer_time_arrays(p0, v0, pf, vf, a_max):
    """Vectorised ``T`` (units of m/s). Inputs broadcast against each other."""
    a_max = np.asarray(a_max, dtype=float)
    dp = np.subtract(p0, pf, dtype=float)
    dv = np.subtract(v0, vf, dtype=float)
    sv = np.add(v0, vf, dtype=float)
    h = dp + sv * np.abs(dv) / (2.0 * a_max)
    base = sv * sv + dv * dv
    arg_brake = 4.0 * a_max * dp + base
    arg_accel = -4.0 * a_max * dp + base
    arg = np.where(h > 0, arg_brake, arg_accel)
    # tiny negatives from cancellation near h = 0 are rounding, not domain errors
    scale = np.maximum(base, np.abs(4.0 * a_max * dp))
    if np.any((arg < -1e-9 * np.maximum(scale, 1.0)) & (h != 0)):
        raise ArithmeticError("negative square-root argument in transfer time")
    root = np.sqrt(np.maximum(arg, 0.0))
    return np.where(h > 0, sv + root, np.where(h < 0, -sv + root, np.abs(dv)))


def switch_function(b: AxisBoundary) -> float:
    return float(switch_function_arrays(b.p0, b.v0, b.pf, b.vf, b.a_max))


def transfer_time_T(b: AxisBoundary) -> float:
    return float(transfer_time_arrays(b.p0, b.v0, b.pf, b.vf, b.a_max))


def min_time(b: AxisBoundary) -> float:
    return transfer_time_T(b) / b.a_max


def solve_axis(b: AxisBoundary) -> AxisSolution:
    h = switch_function(b)
    T = transfer_time_T(b)
    t_total = T / b.a_max
    if h > 0:
        sign = -1
    elif h < 0:
        sign = 1
    else:
        sign = -int(np.sign(b.dv))
    if h == 0 or sign == 0:
        # single arc (or nothing to do): the switch happens at arrival
        return AxisSolution(t_total, sign, t_total, b)
    # peak/trough velocity from T = 2 v1 - sv (accelerate first) or sv - 2 v1 (brake first)
    v1 = 0.5 * (sign * T + b.sv)
    t_switch = min(max(sign * (v1 - b.v0) / b.a_max, 0.0), t_total)
    return AxisSolution(t_total, sign, t_switch, b)


def sample_axis_arrays(sol: AxisSolution, t):
    """Analytic (p, v, a) of the bang-bang trajectory at times ``t``."""
    b = sol.boundary
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("sample time must be nonnegative")
    s, A, ts = sol.sign_first, b.a_max, sol.t_switch
    t1 = np.minimum(t, ts)
    t2 = np.clip(t - ts, 0.0, None)
    a1 = s * A
    v_sw = b.v0 + a1 * ts
    p_sw = b.p0 + b.v0 * ts + 0.5 * a1 * ts * ts
    in_first = t <= ts
    p = np.where(
        in_first,
        b.p0 + b.v0 * t1 + 0.5 * a1 * t1 * t1,
        p_sw + v_sw * t2 - 0.5 * a1 * t2 * t2,
    )
    v = np.where(in_first, b.v0 + a1 * t1, v_sw - a1 * t2)
    # right-continuous: the value at a switch instant is the arc that follows it
    a = np.where(t < ts, a1, -a1).astype(float)
    # past arrival: coast on the target velocity (a pure hold when vf = 0)
    done = t >= sol.t_total
    p = np.where(done, b.pf + b.vf * (t - sol.t_total), p)
    v = np.where(done, b.vf, v)
    a = np.where(done, 0.0, a)
    return p, v, a


def sample_axis(sol: AxisSolution, t: float) -> tuple[float, float, float]:
    """State on the optimal arc at time ``t``; coasts from (pf, vf) once t >= t_total."""
    p, v, a = sample_axis_arrays(sol, t)
    return float(p), float(v), float(a)


def _time_upper_bound(b: AxisBoundary) -> float:
    # brake to rest, rest-to-rest transfer, then accelerate to vf
    A = b.a_max
    travel = abs(b.dp) + (b.v0**2 + b.vf**2) / (2 * A)
    return 1.01 * ((abs(b.v0) + abs(b.vf)) / A + 2 * np.sqrt(travel / A)) + 1e-9


def _arcs_for_sign(b: AxisBoundary, s: int, grid_resolution: int):
    """All (t1, t2) >= 0 with arcs s*A then -s*A hitting the target, by root bracketing."""
    A = b.a_max
    lo = max(0.0, s * (b.vf - b.v0) / A)
    hi = lo + _time_upper_bound(b)

    def t2_of(t1):
        return s * (b.v0 + s * A * t1 - b.vf) / A

    def residual(t1):
        v1 = b.v0 + s * A * t1
        t2 = t2_of(t1)
        p1 = b.p0 + b.v0 * t1 + 0.5 * s * A * t1 * t1
        return p1 + v1 * t2 - 0.5 * s * A * t2 * t2 - b.pf

    grid = np.linspace(lo, hi, grid_resolution)
    vals = residual(grid)
    # the residual is unimodal in t1: cut at its interior extremum so every
    # piece is monotone and holds at most one root
    cuts = [lo, hi]
    for k, sgn in ((int(np.argmax(vals)), 1.0), (int(np.argmin(vals)), -1.0)):
        if 0 < k < len(grid) - 1:
            res = minimize_scalar(lambda t: -sgn * residual(t),
                                  bounds=(grid[k - 1], grid[k + 1]),
                                  method="bounded", options={"xatol": 1e-14})
            cuts.append(float(res.x))
    cuts = sorted(cuts)
    scale = abs(b.dp) + abs(b.sv) + abs(b.dv) + A + 1.0
    for c0, c1 in zip(cuts[:-1], cuts[1:]):
        r0, r1 = residual(c0), residual(c1)
        if r0 * r1 < 0:
            r = brentq(residual, c0, c1, xtol=1e-15, rtol=1e-15)
            yield r, t2_of(r)
    # tangential roots and exact single arcs do not change sign
    for t1 in cuts:
        if abs(residual(t1)) < 1e-12 * scale:
            yield t1, t2_of(t1)


def oracle_solve(b: AxisBoundary, grid_resolution: int = 64) -> tuple[float, int, float]:
    """Brute-force minimum time for testing: returns (t_total, sign_first, t1).

    Enumerates both first-arc signs, finds every root of the terminal position
    residual numerically and keeps the fastest nonnegative pair of arcs.
    """
    if b.dp == 0 and b.dv == 0:
        return 0.0, 0, 0.0
    best = None
    for s in (1, -1):
        for t1, t2 in _arcs_for_sign(b, s, grid_resolution):
            if t1 < -1e-12 or t2 < -1e-12:
                continue
            t1, t2 = max(t1, 0.0), max(t2, 0.0)
            sign = s if t1 > 0 else -s
            cand = (t1 + t2, sign, t1 if t1 > 0 else t2)
            if best is None or cand[0] < best[0]:
                best = cand
    if best is None:
        raise ArithmeticError(f"no bang-bang arcs connect {b}")
    return best


def oracle_min_time(b: AxisBoundary, grid_resolution: int = 64) -> float:
    return oracle_solve(b, grid_resolution)[0]
