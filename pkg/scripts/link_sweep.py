"""Accuracy and realized edges against the number of random links per query.

More links let adversarial answers reach the persuadable agent more often.

    python scripts/link_sweep.py --seeds 3 --max-edges 10
"""

from __future__ import annotations

import argparse
from pathlib import Path

from credteam import ExperimentConfig
from credteam.datasets import load_dataset
from credteam.harness import sweep, write_sweep_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="synthetic-200")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--max-edges", type=int, default=10)
    ap.add_argument("--adversaries", type=int, default=2)
    ap.add_argument("--persuadable", type=int, default=1)
    ap.add_argument("--threshold", type=int, default=1, help="disagreeing neighbors needed to persuade")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/link_sweep")
    args = ap.parse_args()

    dataset = load_dataset(args.dataset)
    values = list(range(1, args.max_edges + 1))
    all_rows = []
    for seed in range(args.seeds):
        base = ExperimentConfig(topology="sia-random", adversary_count=args.adversaries,
                                persuadable_count=args.persuadable,
                                persuasion_threshold=args.threshold, seed=seed)
        rows, _ = sweep("edge-count", values, base, dataset, jobs=args.jobs)
        all_rows.extend(rows)
    for m in values:
        pts = [r for r in all_rows if r["value"] == m]
        acc = sum(r["accuracy"] for r in pts) / len(pts)
        edges = sum(r["mean_realized_edges"] for r in pts) / len(pts)
        flips = sum(r["flips"] for r in pts) / len(pts)
        print(f"m={m:2d}  accuracy {acc:.3f}  mean realized edges {edges:.2f}  flips {flips:.1f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_table(all_rows, out / "sweep.csv")
    print(f"wrote {out / 'sweep.csv'}")


if __name__ == "__main__":
    main()
