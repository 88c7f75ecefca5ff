"""Command-line front end: ``gtompc decompose | benchmark | fly``.

Exit codes: 0 success, 1 invalid input, 2 runtime failure (non-convergence,
no arrival within the time cap). ``GTOMPC_THREADS`` caps worker processes.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from .core import State3, VehicleParams
from .decomposition import DecompositionConfig, benchmark_random_pairs, decompose_thrust
from .guidance import build_guidance
from .mpc import DTOTP, GTOMPC, MpcParams
from .sim import NO_RESET_START, NO_RESET_TARGET, SimConfig, closest_approach, run_no_reset_scenario, run_point_to_point

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

DEFAULT_CONFIG = {
    "vehicle": {"f_max_over_m": 14.81, "g": 9.81, "j_max": [5.0, 5.0, 5.0]},
    "controller": {"dt": 0.05, "Np": 30, "rho0": 1.0, "rho1": 0.5, "mode": "gtompc"},
    "decomposition": {"eps_t": 1e-3, "max_iters": 50, "floor_fraction": 1e-3},
    "task": {"scenario": "no_reset"},
    "sim": {"dt_sim": None, "tau": 0.0},
    "output": {"trajectory_csv": "trajectory.csv", "iters_csv": None, "benchmark_csv": "benchmark.csv"},
}

_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}
_state = {
    "type": "object",
    "properties": {"p": _vec, "v": _vec},
    "required": ["p", "v"],
    "additionalProperties": False,
}


def _section(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _section({
    "vehicle": _section({"f_max_over_m": _num, "g": _num, "j_max": {"oneOf": [_num, _vec]}}),
    "controller": _section({
        "dt": _num,
        "Np": {"type": "integer"},
        "rho0": _num,
        "rho1": _num,
        "mode": {"type": "string", "enum": ["gtompc", "dtotp", "GTOMPC", "DTOTP"]},
        "dtotp_fraction": _num,
    }),
    "decomposition": _section({"eps_t": _num, "max_iters": {"type": "integer"}, "floor_fraction": _num}),
    "task": {
        "oneOf": [
            _section({"scenario": {"type": "string", "enum": ["no_reset"]}}, ["scenario"]),
            _section({"initial": _state, "target": _state}, ["initial", "target"]),
        ]
    },
    "sim": _section({"dt_sim": {"type": ["number", "null"]}, "tau": _num}),
    "output": _section({
        "trajectory_csv": {"type": ["string", "null"]},
        "iters_csv": {"type": ["string", "null"]},
        "benchmark_csv": {"type": ["string", "null"]},
    }),
})


class ConfigError(ValueError):
    pass


class Scenario:
    """Validated scenario file with defaults filled in."""

    def __init__(self, doc: dict):
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{where}: {exc.message}") from None
        cfg = copy.deepcopy(DEFAULT_CONFIG)
        for key, val in doc.items():
            if key == "task":
                cfg["task"] = copy.deepcopy(val)
            else:
                cfg[key].update(val)
        self.raw = cfg
        veh, ctl, dec, sim = cfg["vehicle"], cfg["controller"], cfg["decomposition"], cfg["sim"]
        try:
            self.vehicle = VehicleParams(veh["f_max_over_m"], veh["g"], np.broadcast_to(veh["j_max"], 3))
            self.budget = self.vehicle.budget
            extra = {"dtotp_fraction": ctl["dtotp_fraction"]} if "dtotp_fraction" in ctl else {}
            self.params = MpcParams(dt=ctl["dt"], Np=ctl["Np"], rho0=ctl["rho0"], rho1=ctl["rho1"],
                                    j_max=self.vehicle.j_max, mode=ctl["mode"], **extra)
            self.decomposition = DecompositionConfig(dec["eps_t"], dec["max_iters"], dec["floor_fraction"])
            self.sim = SimConfig(dt_sim=sim["dt_sim"], actuator_lag_tau=sim["tau"])
            self.sim.substeps(self.params.dt)
            task = cfg["task"]
            if "scenario" in task:
                self.named = task["scenario"]
                self.initial, self.target = NO_RESET_START, NO_RESET_TARGET
            else:
                self.named = None
                self.initial = State3(task["initial"]["p"], task["initial"]["v"])
                self.target = State3(task["target"]["p"], task["target"]["v"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.output = cfg["output"]

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls(doc)


def _threads() -> int:
    raw = os.environ.get("GTOMPC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GTOMPC_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"GTOMPC_THREADS must be >= 1, got {n}")
    return n


def _fmt(x) -> str:
    return np.array2string(np.asarray(x), precision=4, separator=", ")


def cmd_decompose(args) -> int:
    sc = Scenario.load(args.scenario)
    t0 = time.perf_counter()
    res = decompose_thrust(sc.initial, sc.target, sc.budget, sc.decomposition)
    elapsed = time.perf_counter() - t0
    print(f"budget      {sc.budget:.6g} m/s^2")
    print(f"a_max       {_fmt(res.a_max)} m/s^2")
    print(f"t_axis      {_fmt(res.t_axis)} s")
    print(f"t_min       {res.t_min:.4f} s (initial {res.trace[0][1].max():.4f} s)")
    print(f"iterations  {res.iterations} ({'converged' if res.converged else 'NOT converged'}, {elapsed * 1e3:.2f} ms)")
    path = args.iters_csv or sc.output.get("iters_csv")
    if path:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "ax_max", "ay_max", "az_max", "tx", "ty", "tz", "t_min"])
            for i, (a, t) in enumerate(res.trace):
                w.writerow([i, *map(repr, map(float, a)), *map(repr, map(float, t)), repr(float(t.max()))])
        print(f"wrote {path}")
    return EXIT_OK if res.converged else EXIT_RUNTIME


def cmd_benchmark(args) -> int:
    if args.n < 1:
        raise ConfigError(f"--n must be >= 1, got {args.n}")
    if args.scenario:
        sc = Scenario.load(args.scenario)
        budget, cfg, out = sc.budget, sc.decomposition, sc.output.get("benchmark_csv")
    else:
        budget, cfg, out = args.budget, DecompositionConfig(), None
    if not budget > 0:
        raise ConfigError(f"budget must be positive, got {budget}")
    out = args.out or out or "benchmark.csv"
    t0 = time.perf_counter()
    stats = benchmark_random_pairs(args.n, args.seed, budget, cfg, workers=_threads())
    elapsed = time.perf_counter() - t0
    stats.write_csv(out)
    k = stats.crossover_iteration()
    print(f"pairs {stats.n_pairs}, converged {stats.n_converged}, {elapsed:.2f} s")
    i10 = min(10, len(stats.iters) - 1)
    print(f"iteration {i10}: mean rho_tdelta {stats.rho_tdelta_mean[i10]:.4f}, mean rho_tmin {stats.rho_tmin_mean[i10]:.4f}")
    print(f"crossover iteration: {k if k is not None else 'none'}")
    print(f"wrote {out}")
    return EXIT_OK


GUIDANCE_HEADER = ("t", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az")


def _write_guidance(sc: Scenario, mode: str, path) -> float:
    if mode == DTOTP:
        a_max = np.full(3, sc.budget * sc.params.dtotp_fraction)
    else:
        a_max = decompose_thrust(sc.initial, sc.target, sc.budget, sc.decomposition).a_max
    probe = build_guidance(sc.initial, sc.target, a_max, sc.params.dt, 1)
    n = max(1, int(np.ceil(probe.t_min / sc.params.dt)))
    g = build_guidance(sc.initial, sc.target, a_max, sc.params.dt, n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GUIDANCE_HEADER)
        for t, p, v, a in zip(g.times, g.p, g.v, g.a):
            w.writerow([repr(float(x)) for x in (t, *p, *v, *a)])
    return g.t_min


def _run(job):
    sc, mode = job
    if sc.named == "no_reset":
        return run_no_reset_scenario(sc.params, sc.budget, sc.sim, mode, sc.decomposition)
    return run_point_to_point(sc.initial, sc.target, mode, sc.params, sc.budget, sc.sim, sc.decomposition)


def _out_path(base, mode, both: bool) -> Path:
    base = Path(base)
    return base.with_name(f"{base.stem}_{mode.lower()}{base.suffix}") if both else base


def cmd_fly(args) -> int:
    sc = Scenario.load(args.scenario)
    modes = [GTOMPC, DTOTP] if args.mode == "both" else [args.mode.upper()]
    both = len(modes) > 1
    base = args.out or sc.output.get("trajectory_csv") or "trajectory.csv"
    if args.open_loop:
        for mode in modes:
            path = _out_path(base, mode, both)
            t_min = _write_guidance(sc, mode, path)
            print(f"{mode}: guidance t_min {t_min:.4f} s, wrote {path}")
        return EXIT_OK

    jobs = [(sc, m) for m in modes]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run, jobs))
    else:
        results = [_run(j) for j in jobs]

    arrivals = {}
    for mode, res in zip(modes, results):
        path = _out_path(base, mode, both)
        res.write_csv(path)
        arrivals[mode] = res.arrival_time
        if res.arrived:
            msg = f"arrival {res.arrival_time:.3f} s"
        else:
            t_near, err = closest_approach(res, sc.target)
            msg = f"NO arrival within {res.info['t_cap']:.2f} s (closest: {err:.2f} x tolerance at {t_near:.2f} s)"
        print(f"{mode}: {msg}; fallbacks {res.fallbacks}, constraint violations {res.constraint_violations}; wrote {path}")
        circle = res.info.get("circle_error")
        if circle is not None and len(circle):
            print(f"{mode}: circle tracking max error {float(np.max(circle)):.4f} m")
    if both and all(a is not None for a in arrivals.values()):
        ratio = arrivals[GTOMPC] / arrivals[DTOTP] if arrivals[DTOTP] > 0 else float("nan")
        print(f"ratio GTOMPC/DTOTP {ratio:.3f}")
    return EXIT_OK if all(a is not None for a in arrivals.values()) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gtompc", description=__doc__.splitlines()[0])
    ap.add_argument("--print-default-config", action="store_true",
                    help="print a template scenario file and exit")
    sub = ap.add_subparsers(dest="command")

    d = sub.add_parser("decompose", help="split the thrust budget for the scenario task")
    d.add_argument("scenario")
    d.add_argument("--iters-csv", help="per-iteration trace CSV")
    d.set_defaults(func=cmd_decompose)

    b = sub.add_parser("benchmark", help="convergence statistics over random state pairs")
    b.add_argument("scenario", nargs="?", help="optional scenario file (vehicle and decomposition sections)")
    b.add_argument("--n", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--budget", type=float, default=10.0, help="used when no scenario file is given")
    b.add_argument("--out", help="statistics CSV path")
    b.set_defaults(func=cmd_benchmark)

    f = sub.add_parser("fly", help="closed-loop flight in the point-mass simulator")
    f.add_argument("scenario")
    f.add_argument("--mode", choices=["gtompc", "dtotp", "both"], default="gtompc")
    f.add_argument("--out", help="trajectory CSV path (suffixed per mode with --mode both)")
    f.add_argument("--open-loop", action="store_true", help="write the guidance samples instead of flying")
    f.set_defaults(func=cmd_fly)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.print_default_config:
        print(json.dumps(DEFAULT_CONFIG, indent=2))
        return EXIT_OK
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
