"""Shared value types and the conservative acceleration budget.

Axis convention: index 0, 1, 2 is x, y, z. z is the gravity axis and points
up. The translational model is the decoupled double integrator, so the sign
convention never enters the dynamics; it only matters for reading scenario
files and plots.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAVITY = 9.81


def _vec3(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances used across the package, in one place."""

    # decomposition: arrival-time equality (s), iteration cap, per-axis floor
    eps_t: float = 1e-3
    max_iters: int = 50
    floor_fraction: float = 1e-3
    # qp: absolute residual tolerances and iteration cap
    eps_prim: float = 1e-4
    eps_dual: float = 1e-4
    qp_max_iter: int = 4000
    hessian_reg: float = 1e-8
    # scenario arrival: position (m) and velocity (m/s)
    arrival_pos: float = 0.05
    arrival_vel: float = 0.1


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class State3:
    """Translational state: position p (m) and velocity v (m/s)."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _vec3(self.p, "p"))
        object.__setattr__(self, "v", _vec3(self.v, "v"))

    @classmethod
    def from_vector(cls, x) -> "State3":
        x = np.asarray(x, dtype=float)
        return cls(x[:3], x[3:6])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v])

    def allclose(self, other: "State3", pos_tol: float, vel_tol: float) -> bool:
        return bool(
            np.linalg.norm(self.p - other.p) < pos_tol
            and np.linalg.norm(self.v - other.v) < vel_tol
        )


@dataclass(frozen=True)
class VehicleParams:
    """Thrust-to-mass ratio (m/s^2), gravity (m/s^2) and per-axis jerk bound (m/s^3)."""

    f_max_over_m: float
    g: float = GRAVITY
    j_max: np.ndarray = field(default_factory=lambda: np.full(3, 5.0))

    def __post_init__(self):
        object.__setattr__(self, "j_max", _vec3(self.j_max, "j_max"))
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not self.f_max_over_m > self.g:
            raise ValueError(
                f"maximum thrust must exceed weight (f_max/m > g), got "
                f"f_max/m = {self.f_max_over_m} with g = {self.g}"
            )
        if np.any(self.j_max <= 0):
            raise ValueError(f"j_max components must be positive, got {self.j_max}")

    @classmethod
    def from_budget(cls, budget: float, g: float = GRAVITY, j_max=5.0) -> "VehicleParams":
        return cls(f_max_over_m=budget + g, g=g, j_max=np.broadcast_to(j_max, 3))

    @property
    def budget(self) -> float:
        return accel_budget(self)


@dataclass(frozen=True)
class AccelBudget:
    """Scalar acceleration magnitude and its per-axis split, which lies on the sphere."""

    magnitude: float
    a_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a_max", _vec3(self.a_max, "a_max"))
        if not self.magnitude > 0:
            raise ValueError(f"budget magnitude must be positive, got {self.magnitude}")
        if np.any(self.a_max < 0):
            raise ValueError(f"a_max components must be nonnegative, got {self.a_max}")
        norm = float(np.linalg.norm(self.a_max))
        if abs(norm - self.magnitude) > 1e-9 * self.magnitude:
            raise ValueError(f"a_max norm {norm} is off the budget sphere {self.magnitude}")

    @classmethod
    def uniform(cls, magnitude: float) -> "AccelBudget":
        return cls(magnitude, np.full(3, magnitude / np.sqrt(3.0)))


def accel_budget(params: VehicleParams) -> float:
    """Conservative symmetric acceleration bound f_max/m - g.

    Raises ValueError when thrust cannot lift the vehicle.
    """
    budget = params.f_max_over_m - params.g
    if not budget > 0:
        raise ValueError(
            f"maximum thrust must exceed weight (f_max/m > g), got budget {budget}"
        )
    return float(budget)
