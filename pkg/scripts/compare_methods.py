"""Run the full method comparison on a preset graph and emit curves.

Trains the embedding and the value network, then attacks the same graph with
every method and writes per-cell CSVs, summary.csv, curves.csv, and SVG
charts under --out.

Example:
    python3 scripts/compare_methods.py --preset desk --episodes 500 --out runs/desk
"""

import argparse
import json
import sys
import time

from infranet.harness import ExperimentPlan, emit_curves, run_plan


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="desk")
    ap.add_argument("--graph-seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=10)
    ap.add_argument("--episodes", type=int, default=500)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--methods", nargs="+",
                    default=["agent", "de", "ci", "gdm", "random"])
    ap.add_argument("--embed-epochs", type=int, default=200)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    plan = ExperimentPlan.from_json(json.dumps({
        "graph": {"preset": args.preset, "seed": args.graph_seed},
        "methods": args.methods,
        "budget": args.budget,
        "seeds": args.seeds,
        "embed": {"epochs": args.embed_epochs},
        "agent": {"episodes": args.episodes},
    }))
    t0 = time.time()
    reports = run_plan(plan, args.out)
    emit_curves(reports.values(), args.out)
    print(f"{len(reports)} cells in {time.time() - t0:.0f}s -> {args.out}")
    for (m, s), rep in sorted(reports.items()):
        print(f"  {m:>24s} seed {s}: cum_reward {rep.final_cum_reward:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
