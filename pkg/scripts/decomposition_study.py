"""Budget decomposition study: the worked pair and the random-pair convergence statistics.

    python3 scripts/decomposition_study.py --n 1000 --seed 0 --out-dir out/
"""
import argparse
import time
from pathlib import Path

import numpy as np

from gtompc.core import State3
from gtompc.decomposition import SamplerRanges, benchmark_random_pairs, decompose_thrust


def worked_pair():
    initial = State3([-2.0, -1.5, -2.5], [-3.0, 1.0, 0.0])
    target = State3([0.0, 0.0, 0.0], [1.0, 0.0, 2.0])
    t0 = time.perf_counter()
    res = decompose_thrust(initial, target, 10.0)
    ms = (time.perf_counter() - t0) * 1e3
    print("worked pair (budget 10)")
    for i, (a, t) in enumerate(res.trace):
        print(f"  {i:2d}  a_max {np.round(a, 4)}  t_axis {np.round(t, 4)}  t_min {t.max():.4f}")
    print(f"  converged={res.converged} in {res.iterations} iterations, {ms:.2f} ms")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    worked_pair()
    samplers = {
        "default": SamplerRanges(),
        "slow": SamplerRanges(v=(-1.0, 1.0)),
        "rest_to_rest": SamplerRanges(v=(0.0, 0.0)),
    }
    for name, ranges in samplers.items():
        t0 = time.perf_counter()
        stats = benchmark_random_pairs(args.n, args.seed, 10.0, ranges=ranges)
        path = out / f"benchmark_{name}.csv"
        stats.write_csv(path)
        print(f"{name:13s} p{ranges.p} v{ranges.v}: converged {stats.n_converged}/{stats.n_pairs}, "
              f"iter 10 rho_tdelta {stats.rho_tdelta_mean[10]:.4f} rho_tmin {stats.rho_tmin_mean[10]:.4f}, "
              f"crossover {stats.crossover_iteration()}, {time.perf_counter() - t0:.2f} s -> {path}")


if __name__ == "__main__":
    main()
