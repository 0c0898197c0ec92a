"""Run seeded batches over the bundled scenarios and print a summary table.

    python3 scripts/run_batch.py                   # all scenarios, 20 seeds
    python3 scripts/run_batch.py arch --seeds 5 --out results/
"""
from __future__ import annotations

import argparse
from pathlib import Path

from marsupial.scenario import batch_means, load_scenario, run_batch

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
COLUMNS = ("tci", "tco", "vti_uav", "vto_uav", "vti_ugv", "vto_ugv", "ato_uav_abs", "ato_ugv_abs")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", default=sorted(p.stem for p in SCENARIOS.glob("*.scenario")))
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--out", type=Path, help="write per-seed results below this directory")
    args = ap.parse_args()

    print("| scenario | planned | feasible % | " + " | ".join(COLUMNS) + " |")
    print("|---" * (len(COLUMNS) + 3) + "|")
    for name in args.names:
        sc = load_scenario(SCENARIOS / f"{name}.scenario")
        out = args.out / name if args.out else None
        summary, results = run_batch(sc, range(args.seeds), out_dir=out)
        means = batch_means(results)
        cells = " | ".join(f"{means.get(c, float('nan')):.3f}" for c in COLUMNS)
        print(f"| {name} | {summary.planned}/{summary.runs} | {summary.feasibility:.0f} | {cells} |", flush=True)


if __name__ == "__main__":
    main()
