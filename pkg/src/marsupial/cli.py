"""Command-line front end: ``marsupial plan --scenario FILE ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import OptimizerConfig, PlannerConfig, apply_overrides, load_params
from .errors import GridTooLarge
from .scenario import batch_means, load_scenario, run_batch


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="marsupial", description="Tethered UGV/UAV path planning and trajectory optimization.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plan", help="plan and optimize one scenario for one or more seeds")
    p.add_argument("--scenario", required=True, type=Path, help="scenario file")
    p.add_argument("--seed", type=int, default=0, help="first seed (default 0)")
    p.add_argument("--runs", type=int, default=1, help="number of consecutive seeds (default 1)")
    p.add_argument("--max-rrt-iters", type=int, default=PlannerConfig.max_iters)
    p.add_argument("--max-opt-iters", type=int, default=OptimizerConfig.max_iters)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--skip-optimizer", action="store_true", help="export the initial trajectory only")
    p.add_argument("--params", type=Path, help="key = value overrides such as 'weights.ot = 0.2'")
    return ap


def _plan(args) -> int:
    if not args.out:
        print("error: --out must not be empty", file=sys.stderr)
        return 2
    if args.runs < 1 or args.seed < 0:
        print("error: --runs must be positive and --seed non-negative", file=sys.stderr)
        return 2
    scenario = load_scenario(args.scenario)
    planner_cfg = PlannerConfig(max_iters=args.max_rrt_iters)
    opt_cfg = OptimizerConfig(max_iters=args.max_opt_iters)
    if args.params:
        planner_cfg, opt_cfg = apply_overrides(planner_cfg, opt_cfg, load_params(args.params))
    seeds = range(args.seed, args.seed + args.runs)
    summary, results = run_batch(scenario, seeds, planner_cfg, opt_cfg, args.skip_optimizer, args.out)
    for r in results:
        m = r.report
        print(f"seed {r.seed}: feasible={m.feasibility} tci={m.tci:.3f}s tco={m.tco:.3f}s "
              f"v_uav={m.vto['uav']['mean']:.3f} v_ugv={m.vto['ugv']['mean']:.3f} "
              f"tether_min={m.dcoo['min']:.3f}")
    for seed, why in sorted(summary.failures.items()):
        print(f"seed {seed}: no path ({why})")
    print(f"{summary.scenario}: planned {summary.planned}/{summary.runs}, "
          f"feasible {summary.feasibility:.1f}%")
    if results:
        print(json.dumps({k: round(v, 4) for k, v in batch_means(results).items()}, sort_keys=True))
    return 0 if summary.planned == summary.runs else 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _plan(args)
    except (OSError, KeyError, ValueError, GridTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
