"""Iterative split of the scalar acceleration budget into per-axis bounds.

Each sweep sets the direction of ``a_max`` proportional to the per-axis
transfer times ``T`` evaluated at the current split, then rescales it back
onto the budget sphere. The fixed point is the split where all three axes
arrive together, which minimises the slowest axis time.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .axis import transfer_time_arrays
from .core import State3


@dataclass(frozen=True)
class DecompositionConfig:
    eps_t: float = 1e-3
    max_iters: int = 50
    floor_fraction: float = 1e-3

    def __post_init__(self):
        if not self.eps_t > 0:
            raise ValueError(f"eps_t must be positive, got {self.eps_t}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0 <= self.floor_fraction < 1 / np.sqrt(3):
            raise ValueError(f"floor_fraction must lie in [0, 1/sqrt(3)), got {self.floor_fraction}")


@dataclass(frozen=True)
class DecompositionResult:
    a_max: np.ndarray
    t_axis: np.ndarray
    t_min: float
    iterations: int
    converged: bool
    budget: float
    trace: list = field(default_factory=list, repr=False)

    @property
    def direction(self) -> np.ndarray:
        return self.a_max / self.budget


def axis_transfer_times(initial: State3, target: State3, a_max) -> np.ndarray:
    return transfer_time_arrays(initial.p, initial.v, target.p, target.v, a_max)


def is_time_equal(t_axis, eps_t: float) -> bool:
    """True unless two axes that still need time (> eps_t) differ by more than eps_t."""
    t = np.asarray(t_axis, dtype=float)
    active = t[t > eps_t]
    if active.size < 2:
        return True
    return bool(active.max() - active.min() <= eps_t)


def _on_sphere(direction, budget: float) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    return d / np.linalg.norm(d) * budget


def decompose_thrust(
    initial: State3,
    target: State3,
    budget: float,
    cfg: DecompositionConfig = DecompositionConfig(),
    direction0=None,
) -> DecompositionResult:
    """Equalise per-axis arrival times by reallocating the budget.

    ``direction0`` seeds the iteration (default [1, 1, 1]); passing the
    previous control step's direction warm-starts it. When ``max_iters`` runs
    out the best iterate seen is returned with ``converged=False``.
    """
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget}")
    a = _on_sphere(np.ones(3) if direction0 is None else direction0, budget)
    trace = []
    while True:
        T = axis_transfer_times(initial, target, a)
        t = T / a
        trace.append((a.copy(), t.copy()))
        norm_T = np.linalg.norm(T)
        if norm_T == 0:
            # nothing to do on any axis
            converged = True
            break
        # axes already on target give T = 0; keep a sliver of authority there
        a_next = _on_sphere(np.maximum(T, cfg.floor_fraction * norm_T), budget)
        if is_time_equal(t, cfg.eps_t):
            idle = t <= cfg.eps_t
            # exempt axes must also have released their share of the budget
            if not idle.any() or np.abs(a_next - a)[idle].max() <= 1e-6 * budget:
                converged = True
                break
        if len(trace) > cfg.max_iters:
            converged = False
            break
        a = a_next

    if converged:
        a_best, t_best = trace[-1]
    else:
        a_best, t_best = min(trace, key=lambda rec: rec[1].max())
    return DecompositionResult(
        a_max=a_best,
        t_axis=t_best,
        t_min=float(t_best.max()),
        iterations=len(trace) - 1,
        converged=converged,
        budget=float(budget),
        trace=trace,
    )


def _spread(t_axis) -> float:
    t = np.asarray(t_axis)
    return float(t.max() - t.min())


def rho_t_delta(trace: Sequence, i: int) -> float:
    """Arrival-time spread at iteration i relative to the spread at iteration 0."""
    d0 = _spread(trace[0][1])
    if d0 == 0:
        return 0.0
    return _spread(trace[i][1]) / d0


def rho_t_min(trace: Sequence, i: int, t_min_star: float | None = None) -> float:
    """Fraction of the achievable t_min improvement realised by iteration i."""
    if t_min_star is None:
        t_min_star = float(trace[-1][1].max())
    t0 = float(trace[0][1].max())
    if not t0 > t_min_star:
        return 1.0
    return (t0 - float(trace[i][1].max())) / (t0 - t_min_star)


@dataclass(frozen=True)
class SamplerRanges:
    p: tuple = (-5.0, 5.0)
    v: tuple = (-3.0, 3.0)


@dataclass(frozen=True)
class BenchmarkStats:
    iters: np.ndarray
    rho_tdelta_mean: np.ndarray
    rho_tdelta_std: np.ndarray
    rho_tmin_mean: np.ndarray
    rho_tmin_std: np.ndarray
    n_pairs: int
    n_converged: int

    CSV_HEADER = ("iter", "rho_tdelta_mean", "rho_tdelta_std", "rho_tmin_mean", "rho_tmin_std")

    def crossover_iteration(self, tdelta_below: float = 0.05, tmin_above: float = 0.95) -> int | None:
        ok = (self.rho_tdelta_mean < tdelta_below) & (self.rho_tmin_mean > tmin_above)
        idx = np.flatnonzero(ok)
        return int(idx[0]) if idx.size else None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_HEADER)
            for row in zip(self.iters, self.rho_tdelta_mean, self.rho_tdelta_std,
                           self.rho_tmin_mean, self.rho_tmin_std):
                w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])


def sample_pairs(n: int, seed: int, ranges: SamplerRanges = SamplerRanges()):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        p0, pf = rng.uniform(*ranges.p, size=(2, 3))
        v0, vf = rng.uniform(*ranges.v, size=(2, 3))
        pairs.append((State3(p0, v0), State3(pf, vf)))
    return pairs


def _indicator_rows(args):
    initial, target, budget, cfg, length = args
    res = decompose_thrust(initial, target, budget, cfg)
    trace = res.trace
    # pad with the final iterate so every pair contributes to every index
    idx = [min(i, len(trace) - 1) for i in range(length)]
    t_star = float(trace[-1][1].max())
    rd = [rho_t_delta(trace, i) for i in idx]
    rm = [rho_t_min(trace, i, t_star) for i in idx]
    return rd, rm, res.converged


def benchmark_random_pairs(
    n: int,
    seed: int,
    budget: float = 10.0,
    cfg: DecompositionConfig = DecompositionConfig(),
    ranges: SamplerRanges = SamplerRanges(),
    workers: int | None = None,
) -> BenchmarkStats:
    """Mean/std of both convergence indicators per iteration over ``n`` random pairs."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    length = cfg.max_iters + 1
    jobs = [(i0, tf, budget, cfg, length) for i0, tf in sample_pairs(n, seed, ranges)]
    if workers is None:
        workers = int(os.environ.get("GTOMPC_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_indicator_rows, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        rows = [_indicator_rows(j) for j in jobs]
    rd = np.array([r[0] for r in rows])
    rm = np.array([r[1] for r in rows])
    return BenchmarkStats(
        iters=np.arange(length),
        rho_tdelta_mean=rd.mean(axis=0),
        rho_tdelta_std=rd.std(axis=0),
        rho_tmin_mean=rm.mean(axis=0),
        rho_tmin_std=rm.std(axis=0),
        n_pairs=n,
        n_converged=sum(r[2] for r in rows),
    )
