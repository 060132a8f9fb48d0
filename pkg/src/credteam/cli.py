"""Command-line entry point: ``credteam {run,sweep,replay,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import ExperimentConfig, apply_overrides, load_config
from .datasets import load_dataset
from .errors import DatasetError, InvalidField, JudgeUnavailable, MalformedJudgeReply
from .harness import (
    SWEEP_PARAMETERS,
    compare_accuracy,
    replay,
    run_experiment,
    summarize_record_file,
    sweep,
    write_sweep_table,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATASET = 2
EXIT_DIVERGENCE = 3
EXIT_JUDGE = 4

log = logging.getLogger("credteam")


def _config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return apply_overrides(config, overrides)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_run(args) -> int:
    config = _config(args)
    dataset = load_dataset(args.dataset)
    result = run_experiment(config, dataset)
    paths = result.write(args.out)
    s = result.summary()
    print(f"{s['rounds']} rounds, accuracy {s['accuracy']:.3f}")
    print("final CrS: " + " ".join(f"{x:.4f}" for x in s["final_crs"]))
    for name, p in paths.items():
        print(f"  {name:8s} {p}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config(args)
    dataset = load_dataset(args.dataset)
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    for v in values:
        config.replace(**{SWEEP_PARAMETERS[args.param]: v})
    rows, results = sweep(args.param, values, config, dataset, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for v, res in zip(values, results):
        res.write(out / f"{args.param}={v}")
    write_sweep_table(rows, out / "sweep.csv")
    for row in rows:
        print(f"{args.param}={row['value']}: accuracy {row['accuracy']:.3f}  "
              f"edges {row['mean_realized_edges']:.2f}")
    print(f"  table    {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_replay(args) -> int:
    report = replay(args.records)
    print(report.describe())
    return EXIT_OK if report.ok else EXIT_DIVERGENCE


def _record_files(paths: list[str]) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.rglob("records.jsonl")))
        elif p.exists():
            files.append(p)
    return files


def cmd_report(args) -> int:
    files = _record_files(args.paths)
    if not files:
        print("no record files found", file=sys.stderr)
        return EXIT_DATASET
    summaries = [summarize_record_file(f) for f in files]
    for s in summaries:
        if not s.get("rounds"):
            print(f"{s['path']}: empty")
            continue
        crs = " ".join(f"{x:.4f}" for x in s["final_crs"])
        print(f"{s['path']}: aggregator={s['aggregator']} adversaries={s['adversary_count']} "
              f"topology={s['topology']} seed={s['seed']} rounds={s['rounds']} "
              f"accuracy={s['accuracy']:.3f}")
        print(f"    final CrS: {crs}")
    deltas = compare_accuracy(summaries)
    if len(deltas) > 1:
        print("accuracy delta vs baseline:")
        for k, d in sorted(deltas.items()):
            print(f"    {k:18s} {d:+.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="credteam", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--dataset", default="synthetic-20",
                        help="JSONL dataset path or bundled name (synthetic-20, synthetic-200)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, help="master seed; overrides the config")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override, repeatable")

    sp = sub.add_parser("run", help="run one experiment")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run one experiment per parameter value")
    common(sp)
    sp.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMETERS))
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("replay", help="re-derive and verify a record file")
    sp.add_argument("records")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("report", help="summarize existing record files")
    sp.add_argument("paths", nargs="+")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidField as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except (JudgeUnavailable, MalformedJudgeReply) as exc:
        print(f"judge failure: {exc}", file=sys.stderr)
        return EXIT_JUDGE


if __name__ == "__main__":
    sys.exit(main())
