"""Command-line front end: ``dpnash simulate | validate | oracle``.

Exit codes: 0 success, 2 configuration or validation failure, 1 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time

import numpy as np

from .game import (OracleFailure, SpecInconsistency, aggregate, linear_ne, solve_ne_oracle,
                   verify_strong_monotonicity_sample)
from .graphs import check_d_strong_connectivity
from .harness import ConfigError, density_report, load_config, preset_names, run_experiment
from .privacy import check_budget_summable
from .schedules import validate_assumptions
from .seeker import ValidationError

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def _seed_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpnash", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run every seed and write CSVs + summary")
    sim.add_argument("--config", required=True, help="config file or preset name")
    seeds = sim.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int)
    seeds.add_argument("--seeds", type=_seed_list)
    sim.add_argument("--horizon", type=int)
    sim.add_argument("--zero-noise", action="store_true")
    sim.add_argument("--convention", choices=["theoretical", "empirical"])
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--workers", type=int, default=None)
    sim.add_argument("--assume-valid", action="store_true",
                     help="skip the schedule and connectivity preconditions")

    val = sub.add_parser("validate", help="run the schedule, connectivity and game checks")
    val.add_argument("--config", required=True)
    val.add_argument("--samples", type=int, default=1000)

    orc = sub.add_parser("oracle", help="print the Nash equilibrium")
    orc.add_argument("--config", required=True)
    orc.add_argument("--tol", type=float, default=1e-10)
    orc.add_argument("--json", action="store_true")

    sub.add_parser("presets", help="list bundled configs")
    return p


def _apply_overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seeds"] = [args.seed]
    elif args.seeds:
        changes["seeds"] = args.seeds
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.zero_noise:
        changes["noise"] = "zero-noise"
    if args.convention:
        changes["convention"] = args.convention
    changes["out"] = args.out
    return dataclasses.replace(cfg, **changes)


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    t0 = time.perf_counter()
    res = run_experiment(cfg, workers=args.workers, assume_valid=args.assume_valid)
    print(res.summary.format())
    print(f"{len(res.files)} files written to {args.out} in {time.perf_counter() - t0:.2f}s")
    if not res.complete:
        print("warning: at least one run aborted early; partial CSVs written", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    spec, graphs, sched = cfg.game_spec(), cfg.graph_schedule(), cfg.schedule_set()
    ok = True

    conn = check_d_strong_connectivity(graphs)
    ok &= conn
    print(f"[{'PASS' if conn else 'FAIL'}] D-strong connectivity (period {graphs.period}, "
          f"D {graphs.d_window})")
    dens = density_report(graphs)
    print(f"       density per phase: {', '.join(f'{d:.3f}' for d in dens.per_phase)}")

    rep = validate_assumptions(sched)
    ok &= rep.passed
    for line in rep.lines():
        print(line)

    bud = check_budget_summable(sched)
    print(f"[{'PASS' if bud.converged else 'FAIL'}] sum rho/b_hat: {bud.status}, "
          f"~{bud.estimate:.6g} ({bud.terms_used} terms)")
    ok &= bud.converged

    problems = spec.check()
    for msg in problems:
        print(f"[FAIL] game: {msg}")
    ok &= not problems
    mono = verify_strong_monotonicity_sample(spec, args.samples, seed=0)
    print(f"[{'PASS' if mono.passed else 'FAIL'}] strong monotonicity: min ratio "
          f"{mono.min_ratio:.6g} vs m = {mono.m:.6g} over {mono.samples} pairs")
    ok &= mono.passed
    return EXIT_OK if ok else EXIT_INVALID


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.game_spec()
    t0 = time.perf_counter()
    q = solve_ne_oracle(spec, tol=args.tol)
    dt = time.perf_counter() - t0
    gap = None
    if spec.is_quadratic:
        lin = linear_ne(spec)
        if np.all((lin > spec.lo) & (lin < spec.hi)):
            gap = float(np.max(np.abs(lin - q)))
    if args.json:
        print(json.dumps({"q_star": q.tolist(), "sigma_star": float(aggregate(spec, q)),
                          "linear_gap": gap, "seconds": dt}))
        return EXIT_OK
    for i, v in enumerate(q, 1):
        print(f"q_{i} = {v:.6f}")
    print(f"sigma = {aggregate(spec, q):.6f}")
    if gap is not None:
        print(f"fixed-point vs linear solve: {gap:.2e}")
    print(f"solved in {dt * 1e3:.1f} ms")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in preset_names():
        print(name)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "validate": cmd_validate, "oracle": cmd_oracle,
            "presets": cmd_presets}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValidationError, SpecInconsistency) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OracleFailure, RuntimeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
