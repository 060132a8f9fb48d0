"""Accuracy against the number of adversaries, weighted versus unweighted majority.

    python scripts/adversary_sweep.py --seeds 5 --eta 0.1 --warmup 20
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
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--eta", type=float, default=0.1)
    ap.add_argument("--warmup", type=int, default=20)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/adversary_sweep")
    args = ap.parse_args()

    dataset = load_dataset(args.dataset)
    counts = [0, 1, 2, 3, 4]
    all_rows = []
    for agg in ("weighted-majority", "majority"):
        acc = {k: 0.0 for k in counts}
        for seed in range(args.seeds):
            base = ExperimentConfig(aggregator=agg, eta=args.eta, warmup_rounds=args.warmup, seed=seed)
            rows, _ = sweep("adversary-count", counts, base, dataset, jobs=args.jobs)
            for row in rows:
                row["aggregator"] = agg
                acc[row["value"]] += row["accuracy"] / args.seeds
            all_rows.extend(rows)
        spread = max(acc[k] for k in counts[1:]) - min(acc[k] for k in counts[1:])
        print(f"{agg:18s} " + "  ".join(f"{k}adv={acc[k]:.3f}" for k in counts) + f"  spread(1-4)={spread:.3f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_table(all_rows, out / "sweep.csv")
    print(f"wrote {out / 'sweep.csv'}")


if __name__ == "__main__":
    main()
