"""Jerk-free time-optimal reference (p*, v*, a*) sampled on the MPC grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .axis import AxisBoundary, AxisSolution, sample_axis_arrays, solve_axis
from .core import State3


@dataclass(frozen=True)
class GuidanceTrajectory:
    t_min: float
    dt: float
    p: np.ndarray  # (Np + 1, 3)
    v: np.ndarray
    a: np.ndarray
    a_max: np.ndarray
    axes: tuple[AxisSolution, ...] = ()

    @property
    def horizon(self) -> int:
        return self.p.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.p.shape[0])

    @property
    def t_axis(self) -> np.ndarray:
        return np.array([s.t_total for s in self.axes])


def build_guidance(initial: State3, target: State3, a_max, dt: float, Np: int) -> GuidanceTrajectory:
    """Solve the three axes independently and sample them at t = k * dt, k = 0..Np."""
    a_max = np.asarray(a_max, dtype=float)
    if np.any(a_max <= 0):
        raise ValueError(f"a_max components must be positive, got {a_max}")
    if not dt > 0 or Np < 1:
        raise ValueError(f"need dt > 0 and Np >= 1, got dt={dt}, Np={Np}")
    t = dt * np.arange(Np + 1)
    sols = []
    P, V, A = (np.empty((Np + 1, 3)) for _ in range(3))
    for i in range(3):
        sol = solve_axis(AxisBoundary(initial.p[i], initial.v[i], target.p[i], target.v[i], a_max[i]))
        sols.append(sol)
        P[:, i], V[:, i], A[:, i] = sample_axis_arrays(sol, t)
    return GuidanceTrajectory(
        t_min=max(s.t_total for s in sols),
        dt=float(dt),
        p=P,
        v=V,
        a=A,
        a_max=a_max,
        axes=tuple(sols),
    )


def reference_guidance(p, v, a, dt: float, a_max) -> GuidanceTrajectory:
    """Wrap an externally sampled reference (e.g. a circle) as guidance."""
    p = np.asarray(p, dtype=float)
    return GuidanceTrajectory(
        t_min=0.0, dt=float(dt), p=p, v=np.asarray(v, dtype=float),
        a=np.asarray(a, dtype=float), a_max=np.asarray(a_max, dtype=float),
    )
