"""Credibility separation between faithful and adversarial agents over rounds.

Runs 2 faithful + 3 adversarial agents with Shapley contributions and prints the
per-round credibility trajectory averaged over seeds, plus the final gap per seed.

    python scripts/separation.py --seeds 10 --rounds 50 --out out/separation
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

from credteam import ExperimentConfig, run_experiment
from credteam.datasets import synthetic_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=50)
    ap.add_argument("--eta", type=float, default=0.02)
    ap.add_argument("--adversary-kind", default="adversarial-consistent")
    ap.add_argument("--out", default="out/separation")
    args = ap.parse_args()

    dataset = synthetic_dataset(args.rounds, seed=30, numeric_fraction=0.0)
    base = ExperimentConfig(team_size=5, adversary_count=3, faithful_accuracy=0.95,
                            adversary_kind=args.adversary_kind, contribution_mode="shapley", eta=args.eta)
    trajectories = []
    for seed in range(args.seeds):
        res = run_experiment(base.replace(seed=seed), dataset)
        crs = res.metrics.final_crs()
        gap = min(crs[:2]) - max(crs[2:])
        print(f"seed {seed}: final CrS {' '.join(f'{x:.3f}' for x in crs)}  gap {gap:+.3f}")
        trajectories.append([r.ledger_after for r in res.records])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "mean_crs.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round"] + [f"crs_{i}" for i in range(5)])
        for t in range(args.rounds):
            mean = [sum(tr[t][i] for tr in trajectories) / len(trajectories) for i in range(5)]
            w.writerow([t] + [f"{x:.6f}" for x in mean])
    print(f"wrote {out / 'mean_crs.csv'}")


if __name__ == "__main__":
    main()
