"""Command-line front end: simulate, verify, bench."""
from __future__ import annotations

import argparse
import sys

from .dynamics import StateInterval
from .efficient import approx_verify
from .errors import CrossguardError, InfeasibleInitialCondition
from .exact import exact_verify
from .harness.bench import bench_scaling, format_bench
from .harness.scenario import load_scenario
from .harness.simulate import emit_outputs, run_simulation
from .scheduling import SchedulingInstance
from .supervisor import SupervisorConfig

VERIFY_NO_EXIT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossguard",
        description="Intersection collision-avoidance supervisors and simulation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a closed-loop scenario")
    sim.add_argument("--scenario", required=True, help="scenario file path")
    sim.add_argument("--mode", required=True, choices=["exact", "efficient"])
    sim.add_argument("--trace", required=True, help="output trace CSV path")
    sim.add_argument("--metrics", required=True, help="output metrics path")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--steps", type=int, default=None, help="override the step count")
    sim.add_argument(
        "--no-timing",
        action="store_true",
        help="zero the wall-time fields for byte-reproducible outputs",
    )

    ver = sub.add_parser("verify", help="one-shot verification of the initial estimate")
    ver.add_argument("--scenario", required=True)
    ver.add_argument("--mode", required=True, choices=["exact", "approx"])

    ben = sub.add_parser("bench", help="per-iteration timing vs fleet size")
    ben.add_argument("--scenario", required=True, help="template scenario")
    ben.add_argument("--n", required=True, help="comma-separated controlled-vehicle counts")
    ben.add_argument("--reps", type=int, required=True, help="iterations per measurement")

    return parser


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    try:
        trace, metrics = run_simulation(
            scenario,
            args.mode,
            seed=args.seed,
            steps=args.steps,
            record_timing=not args.no_timing,
        )
    except InfeasibleInitialCondition as exc:
        print(f"infeasible initial condition: {exc}", file=sys.stderr)
        return 1
    emit_outputs(trace, metrics, args.trace, args.metrics)
    print(
        f"steps={len({r.step for r in trace})} collisions={metrics.collisions} "
        f"overrides={metrics.overrides} completed={int(metrics.completed)}"
    )
    return 0


def _cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    sup = SupervisorConfig(tau=scenario.tau)
    # the scenario state is the exact initial state, same as a run start
    estimates = {
        v.vid: StateInterval.point(v.initial) for v in scenario.vehicles
    }
    instance = SchedulingInstance.build(scenario.params_by_id(), estimates, sup.dt)
    if args.mode == "exact":
        _, answer = exact_verify(instance)
    else:
        _, answer = approx_verify(instance)
    print("yes" if answer else "no")
    return 0 if answer else VERIFY_NO_EXIT


def _cmd_bench(args) -> int:
    scenario = load_scenario(args.scenario)
    n_list = [int(tok) for tok in args.n.split(",") if tok]
    rows = bench_scaling(scenario, n_list, args.reps)
    sys.stdout.write(format_bench(rows))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_bench(args)
    except CrossguardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
