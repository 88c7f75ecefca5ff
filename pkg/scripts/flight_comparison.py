"""Line-to-circle flight, GTOMPC against the fixed-bound baseline, plus a jerk-bound sweep.

    python3 scripts/flight_comparison.py --out-dir out/ [--sweep]
"""
import argparse
import time
from pathlib import Path

import numpy as np

from gtompc.mpc import DTOTP, GTOMPC, MpcParams
from gtompc.sim import (NO_RESET_START, NO_RESET_TARGET, closest_approach, run_circle_tracking,
                        run_no_reset_scenario, run_point_to_point)


def report(res):
    ph = res.phase == 2
    mean_a = np.abs(res.a_cmd[ph]).mean(axis=0)
    t_near, err = closest_approach(res, NO_RESET_TARGET)
    arr = "none" if res.arrival_time is None else f"{res.arrival_time:.3f} s"
    print(f"{res.mode:6s} arrival {arr:9s} closest {err:6.2f} x tol at {t_near:5.2f} s  "
          f"mean|a| {np.round(mean_a, 3)}  fallbacks {res.fallbacks}  violations {res.constraint_violations}  "
          f"qp iters mean {res.qp_iters[ph].mean():.0f} max {res.qp_iters[ph].max()}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--sweep", action="store_true", help="also sweep j_max and Np")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for mode in (GTOMPC, DTOTP):
        t0 = time.perf_counter()
        res = run_no_reset_scenario(mode=mode)
        res.write_csv(out / f"no_reset_{mode.lower()}.csv")
        report(res)
        print(f"       {time.perf_counter() - t0:.2f} s")

    circ = run_circle_tracking(NO_RESET_TARGET, duration=4.0)
    print(f"circle tracking from the printed entry state: max error {circ.info['circle_error'].max():.4f} m, "
          f"last second {circ.info['circle_error'][-20:].max():.5f} m")

    if args.sweep:
        print("\nj_max sweep (point-to-point, cap 12 s)")
        for jm in (5.0, 10.0, 20.0, 50.0, 1000.0):
            for mode in (GTOMPC, DTOTP):
                res = run_point_to_point(NO_RESET_START, NO_RESET_TARGET, mode, MpcParams(j_max=jm), t_cap=12.0)
                t_near, err = closest_approach(res, NO_RESET_TARGET)
                print(f"  j_max {jm:6.0f} {mode:6s} arrival {res.arrival_time}  closest {err:.2f} x tol at {t_near:.2f} s")
        print("\nhorizon sweep (j_max 5)")
        for Np in (30, 45, 60, 80):
            for mode in (GTOMPC, DTOTP):
                res = run_point_to_point(NO_RESET_START, NO_RESET_TARGET, mode, MpcParams(Np=Np), t_cap=12.0)
                t_near, err = closest_approach(res, NO_RESET_TARGET)
                print(f"  Np {Np:3d} {mode:6s} arrival {res.arrival_time}  closest {err:.2f} x tol at {t_near:.2f} s")


if __name__ == "__main__":
    main()
