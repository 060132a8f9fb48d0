"""The round loop, whole experiments, parameter sweeps, and record replay."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import rng as rngmod
from .agents import (
    AgentProfile,
    AgentState,
    NeighborMessage,
    adversarial_consistent,
    adversarial_subtle,
    faithful,
    persuadable,
    respond,
)
from .aggregation import (
    AggregationResult,
    centroid_aggregate,
    coordinator_aggregate,
    embed,
    majority,
    similarity_ensemble,
    single_agent,
    weighted_majority,
)
from .core import AgentId, AgentOutput, ExperimentConfig, Query, validate_config
from .datasets import DatasetItem, parse_item
from .judge import SyntheticJudge, judge_from_config
from .reward import GradingRubric, grade, is_correct
from .scoring import (
    ContributionVector,
    CredibilityLedger,
    judge_contributions,
    shapley_contributions,
    update_credibility,
)
from .topology import TopologyGraph, generate_topology, run_interaction

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SWEEP_PARAMETERS = {
    "adversary-count": "adversary_count",
    "edge-count": "edge_count",
    "aggregator-kind": "aggregator",
}


# --- team and aggregation wiring -------------------------------------------------


def team_profiles(config: ExperimentConfig) -> list[AgentProfile]:
    """Faithful agents first, then persuadable ones, adversaries in the last slots."""
    n_adv = config.adversary_count
    n_pers = config.persuadable_count
    n_faith = config.team_size - n_adv - n_pers
    profiles = [faithful(config.faithful_accuracy) for _ in range(n_faith)]
    profiles += [persuadable(config.persuasion_threshold, config.faithful_accuracy) for _ in range(n_pers)]
    if config.adversary_kind == "adversarial-subtle":
        profiles += [adversarial_subtle(config.flip_prob, config.subtle_offset) for _ in range(n_adv)]
    else:
        profiles += [adversarial_consistent() for _ in range(n_adv)]
    return profiles


def build_team(config: ExperimentConfig) -> list[AgentState]:
    labels = {"faithful": "faithful", "persuadable": "persuadable"}
    team = []
    for i, prof in enumerate(team_profiles(config)):
        role = labels.get(prof.behavior_kind, "adversary")
        team.append(AgentState(AgentId(i, f"{role}-{i}"), prof))
    return team


def make_aggregator(
    config: ExperimentConfig,
    crs: dict[int, float],
    judge=None,
    prompt: str = "",
) -> Callable[[Sequence[AgentOutput]], AggregationResult]:
    embedder = partial(embed, dim=config.embedding_dim)
    kind = config.aggregator
    if kind == "crs-centroid":
        return lambda outs: centroid_aggregate(outs, crs, embedder)
    if kind == "centroid":
        ones = {k: 1.0 for k in crs}
        return lambda outs: centroid_aggregate(outs, ones, embedder)
    if kind == "weighted-majority":
        return lambda outs: weighted_majority(outs, crs)
    if kind == "majority":
        return majority
    if kind == "similarity":
        return lambda outs: single_agent(outs) if len(outs) == 1 else similarity_ensemble(outs, embedder)
    if kind == "coordinator":
        if judge is None:
            raise ValueError("coordinator aggregation needs a judge channel")
        return lambda outs: coordinator_aggregate(outs, crs, judge, prompt)
    return single_agent


def resolve_mode(config: ExperimentConfig, communicated: bool) -> str:
    if config.contribution_mode != "auto":
        return config.contribution_mode
    if communicated or config.aggregator == "coordinator":
        return "judge"
    return "shapley"


def _sign(x: float) -> int:
    return -1 if x < 0 else 1


def compute_contributions(
    config: ExperimentConfig,
    mode: str,
    item: DatasetItem,
    finals: Sequence[AgentOutput],
    messages: Sequence[NeighborMessage],
    final: str,
    reward_value: float,
    aggregate: Callable[[Sequence[AgentOutput]], AggregationResult],
    judge,
) -> ContributionVector:
    if mode == "judge":
        return judge_contributions(item.query.prompt, final, finals, messages, judge, config.judge_signed)
    cv = shapley_contributions(
        list(finals),
        lambda subset: aggregate(subset).final,
        lambda text: grade(text, item.query.gold, item.rubric).value,
    )
    if config.credit_orientation == "aligned":
        # Shapley values of the reward game already carry the reward's sign;
        # orient them so the update below does not apply that sign twice.
        cv = cv.oriented(_sign(reward_value))
    return cv


# --- records ------------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    config: ExperimentConfig
    item: DatasetItem
    topology: TopologyGraph
    initial: tuple[AgentOutput, ...]
    final_outputs: tuple[AgentOutput, ...]
    messages: tuple[NeighborMessage, ...]
    aggregation: AggregationResult
    reward: float
    reward_flag: str | None
    correct: bool
    contributions: ContributionVector
    ledger_before: tuple[float, ...]
    ledger_after: tuple[float, ...]
    judge: str

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "round": self.round_index,
            "query_id": self.item.query.id,
            "item": self.item.to_dict(),
            "config": self.config.to_dict(),
            "topology": self.topology.to_dict(),
            "initial": [o.to_dict() for o in self.initial],
            "final_outputs": [o.to_dict() for o in self.final_outputs],
            "messages": [m.to_dict() for m in self.messages],
            "aggregation": self.aggregation.to_dict(),
            "reward": self.reward,
            "reward_flag": self.reward_flag,
            "correct": self.correct,
            "contributions": self.contributions.to_dict(),
            "ledger_before": list(self.ledger_before),
            "ledger_after": list(self.ledger_after),
            "judge": self.judge,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def flips(self) -> list[int]:
        return [o.flips for o in self.final_outputs]


@dataclass
class GameState:
    config: ExperimentConfig
    agents: list[AgentState]
    ledger: CredibilityLedger
    judge: object
    round_index: int = 0
    chain: TopologyGraph | None = None

    @classmethod
    def fresh(cls, config: ExperimentConfig, judge=None) -> GameState:
        config = validate_config(config)
        ledger = CredibilityLedger.uniform(config.team_size, config.initial_crs, config.crs_clamp)
        return cls(config, build_team(config), ledger, judge or judge_from_config(config))


def _round_topology(state: GameState) -> TopologyGraph:
    c = state.config
    if c.topology == "crs-chain":
        # ordered once, from the ledger at the start of the experiment
        if state.chain is None:
            state.chain = generate_topology("crs-chain", c.team_size, crs=state.ledger.values())
        return state.chain
    if c.team_size < 2:
        return generate_topology("edgeless", c.team_size)
    return generate_topology(
        c.topology, c.team_size, c.edge_count, state.ledger.values(),
        rngmod.topology_stream(c.seed, state.round_index),
    )


def run_round(state: GameState, item: DatasetItem) -> RoundRecord:
    """Play one query. The state's ledger changes only if the whole round succeeds."""
    c = state.config
    t = state.round_index
    query = item.query
    streams = [rngmod.agent_stream(c.seed, t, a.id.index) for a in state.agents]
    initial = []
    for agent, stream in zip(state.agents, streams):
        agent.start_query()
        initial.append(respond(agent, query, stream))

    graph = _round_topology(state)
    if graph.edges:
        finals, messages = run_interaction(graph, state.agents, initial, c.interaction_phases, streams)
    else:
        finals, messages = list(initial), []

    crs = dict(state.ledger.scores)
    aggregate = make_aggregator(c, crs, state.judge, query.prompt)
    agg = aggregate(finals)
    reward = grade(agg.final, query.gold, item.rubric)
    mode = resolve_mode(c, bool(messages))
    contributions = compute_contributions(
        c, mode, item, finals, messages, agg.final, reward.value, aggregate, state.judge
    )
    new_ledger = update_credibility(state.ledger, contributions, reward, c.eta,
                                    team=[a.id.index for a in state.agents])
    record = RoundRecord(
        round_index=t,
        config=c,
        item=item,
        topology=graph,
        initial=tuple(initial),
        final_outputs=tuple(finals),
        messages=tuple(messages),
        aggregation=agg,
        reward=reward.value,
        reward_flag=reward.flag,
        correct=is_correct(reward, item.rubric),
        contributions=contributions,
        ledger_before=tuple(state.ledger.values()),
        ledger_after=tuple(new_ledger.values()),
        judge=getattr(state.judge, "name", "custom"),
    )
    state.ledger = new_ledger
    state.round_index = t + 1
    return record


# --- experiments --------------------------------------------------------------


@dataclass
class ExperimentMetrics:
    correct: list[bool] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    crs: list[list[float]] = field(default_factory=list)
    realized_edges: list[int] = field(default_factory=list)
    flips: list[list[int]] = field(default_factory=list)
    warmup: int = 0

    def add(self, rec: RoundRecord) -> None:
        self.correct.append(rec.correct)
        self.rewards.append(rec.reward)
        self.crs.append(list(rec.ledger_after))
        self.realized_edges.append(rec.topology.realized_edges)
        self.flips.append(rec.flips)

    @property
    def rounds(self) -> int:
        return len(self.correct)

    def cumulative_accuracy(self) -> list[float]:
        out, hits = [], 0
        for i, c in enumerate(self.correct, 1):
            hits += c
            out.append(hits / i)
        return out

    @property
    def accuracy(self) -> float:
        """Accuracy over rounds after the warmup window (all rounds if the window covers them)."""
        window = self.correct[self.warmup:] or self.correct
        return sum(window) / len(window) if window else float("nan")

    def flip_totals(self) -> list[int]:
        if not self.flips:
            return []
        return [sum(col) for col in zip(*self.flips)]

    def final_crs(self) -> list[float]:
        return self.crs[-1] if self.crs else []

    def write_csv(self, path: str | Path) -> None:
        n = len(self.crs[0]) if self.crs else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "accuracy", *[f"crs_{i}" for i in range(n)], "realized_edges", "reward"])
            for t, (acc, crs, edges, r) in enumerate(
                zip(self.cumulative_accuracy(), self.crs, self.realized_edges, self.rewards)
            ):
                w.writerow([t, repr(acc), *[repr(x) for x in crs], edges, repr(r)])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metrics: ExperimentMetrics
    records: list[RoundRecord]

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"records": out / "records.jsonl", "metrics": out / "metrics.csv", "summary": out / "summary.json"}
        write_records(self.records, paths["records"])
        self.metrics.write_csv(paths["metrics"])
        paths["summary"].write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return paths

    def summary(self) -> dict:
        m = self.metrics
        return {
            "config": self.config.to_dict(),
            "rounds": m.rounds,
            "accuracy": m.accuracy,
            "cumulative_accuracy": m.cumulative_accuracy()[-1] if m.rounds else None,
            "final_crs": m.final_crs(),
            "flips": m.flip_totals(),
            "mean_realized_edges": sum(m.realized_edges) / m.rounds if m.rounds else None,
        }


def run_experiment(config: ExperimentConfig, dataset: Sequence[DatasetItem], judge=None) -> ExperimentResult:
    if not dataset:
        raise ValueError("dataset is empty")
    state = GameState.fresh(config, judge)
    metrics = ExperimentMetrics(warmup=state.config.warmup_rounds)
    records = []
    for item in dataset:
        rec = run_round(state, item)
        metrics.add(rec)
        records.append(rec)
    return ExperimentResult(state.config, metrics, records)


def write_records(records: Iterable[RoundRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


# --- sweeps ---------------------------------------------------------------------


def _sweep_point(config: ExperimentConfig, dataset: Sequence[DatasetItem]) -> ExperimentResult:
    return run_experiment(config, dataset)


def sweep(
    parameter: str,
    values: Sequence,
    config: ExperimentConfig,
    dataset: Sequence[DatasetItem],
    jobs: int = 1,
) -> tuple[list[dict], list[ExperimentResult]]:
    """Run one experiment per value with a fresh ledger.

    Every point shares the base seed, so points see the same random draws and
    differ only through the swept parameter.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {sorted(SWEEP_PARAMETERS)}")
    field_name = SWEEP_PARAMETERS[parameter]
    configs = [config.replace(**{field_name: v}) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, configs, [dataset] * len(configs)))
    else:
        results = [_sweep_point(c, dataset) for c in configs]
    rows = []
    for v, res in zip(values, results):
        m = res.metrics
        rows.append({
            "parameter": parameter,
            "value": v,
            "seed": res.config.seed,
            "rounds": m.rounds,
            "accuracy": m.accuracy,
            "cumulative_accuracy": m.cumulative_accuracy()[-1],
            "mean_realized_edges": sum(m.realized_edges) / m.rounds,
            "min_realized_edges": min(m.realized_edges),
            "max_realized_edges": max(m.realized_edges),
            "final_crs": json.dumps(m.final_crs()),
            "flips": sum(m.flip_totals()),
        })
    return rows, results


def write_sweep_table(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


# --- replay ----------------------------------------------------------------------


@dataclass
class ReplayReport:
    rounds_checked: int = 0
    transitions_verified: int = 0
    divergence: dict | None = None
    skipped: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.divergence is None

    def describe(self) -> str:
        if self.ok:
            msg = f"OK: {self.rounds_checked} rounds, {self.transitions_verified} credibility transitions verified"
            if self.skipped:
                msg += f" ({len(self.skipped)} checks skipped: remote judge)"
            return msg
        d = self.divergence
        return (f"DIVERGENCE at round {d['round']} (line {d['line']}), field {d['field']}: "
                f"stored {d['stored']!r}, re-derived {d['derived']!r}")


class _ReplayJudge:
    """Stands in for a remote judge during replay; any call is a bug."""

    name = "remote"

    def aggregate(self, request):
        raise RuntimeError("remote judge decisions cannot be re-derived")

    contributions = aggregate


def _as_float_list(xs) -> list[float]:
    return [float(x) for x in xs]


def read_records(path: str | Path) -> list[tuple[int, dict | None, str]]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append((lineno, json.loads(line), ""))
            except json.JSONDecodeError as exc:
                out.append((lineno, None, str(exc)))
    return out


def replay(path: str | Path) -> ReplayReport:
    """Re-derive every stored decision of a record file and compare exactly."""
    report = ReplayReport()
    prev_after: list[float] | None = None
    prev_round: int | None = None

    for lineno, rec, err in read_records(path):
        def diverge(fld, stored, derived):
            report.divergence = {"round": rec.get("round") if rec else None, "line": lineno,
                                 "field": fld, "stored": stored, "derived": derived}
            return report

        if rec is None:
            return diverge("<json>", err, "well-formed JSON")
        if rec.get("schema") != SCHEMA_VERSION:
            return diverge("schema", rec.get("schema"), SCHEMA_VERSION)
        try:
            config = ExperimentConfig.from_dict(rec["config"])
            item = parse_item(rec["item"])
            finals = [AgentOutput.from_dict(o) for o in rec["final_outputs"]]
            messages = [
                NeighborMessage(AgentId(m["sender"]), AgentId(m["receiver"]), m["content"], m["phase"])
                for m in rec["messages"]
            ]
            before = _as_float_list(rec["ledger_before"])
            after = _as_float_list(rec["ledger_after"])
            stored_cv = ContributionVector.from_dict(rec["contributions"])
        except Exception as exc:  # any structural damage is a divergence
            return diverge("<structure>", repr(exc), "well-formed record")

        t = rec["round"]
        expected_round = 0 if prev_round is None else prev_round + 1
        if t != expected_round:
            return diverge("round", t, expected_round)
        expected_before = [config.initial_crs] * config.team_size if prev_after is None else prev_after
        if before != expected_before:
            return diverge("ledger_before", before, expected_before)

        remote = rec.get("judge") == "remote"
        judge = _ReplayJudge() if remote else SyntheticJudge()
        crs = {i: v for i, v in enumerate(before)}
        aggregate = make_aggregator(config, crs, judge, item.query.prompt)

        if remote and config.aggregator == "coordinator":
            report.skipped.append(f"round {t}: aggregation")
            final = rec["aggregation"]["final"]
        else:
            agg = aggregate(finals).to_dict()
            if agg != rec["aggregation"]:
                return diverge("aggregation", rec["aggregation"], agg)
            final = agg["final"]

        reward = grade(final, item.query.gold, item.rubric)
        if reward.value != rec["reward"] or reward.flag != rec["reward_flag"]:
            return diverge("reward", rec["reward"], reward.value)
        if is_correct(reward, item.rubric) != rec["correct"]:
            return diverge("correct", rec["correct"], is_correct(reward, item.rubric))

        mode = stored_cv.mode
        if mode != resolve_mode(config, bool(messages)):
            return diverge("contributions.mode", mode, resolve_mode(config, bool(messages)))
        if remote and mode == "judge":
            report.skipped.append(f"round {t}: contributions")
            cv = stored_cv
        else:
            cv = compute_contributions(config, mode, item, finals, messages, final,
                                       reward.value, aggregate, judge)
            if cv.to_dict() != rec["contributions"]:
                return diverge("contributions", rec["contributions"], cv.to_dict())

        ledger = CredibilityLedger(dict(crs), t, (), config.crs_clamp)
        derived_after = update_credibility(ledger, cv, reward, config.eta,
                                           team=range(config.team_size)).values()
        if derived_after != after:
            return diverge("ledger_after", after, derived_after)

        report.rounds_checked += 1
        report.transitions_verified += config.team_size
        prev_after = after
        prev_round = t
    return report


# --- reporting --------------------------------------------------------------------


def summarize_record_file(path: str | Path) -> dict:
    rows = [rec for _, rec, _ in read_records(path) if rec is not None]
    if not rows:
        return {"path": str(path), "rounds": 0}
    config = rows[0]["config"]
    warm = config.get("warmup_rounds", 0)
    window = rows[warm:] or rows
    return {
        "path": str(path),
        "aggregator": config["aggregator"],
        "adversary_count": config["adversary_count"],
        "topology": config["topology"],
        "seed": config["seed"],
        "rounds": len(rows),
        "accuracy": sum(r["correct"] for r in window) / len(window),
        "final_crs": rows[-1]["ledger_after"],
    }


def compare_accuracy(summaries: list[dict], baseline: str = "majority") -> dict[str, float]:
    """Mean accuracy per aggregator minus the baseline aggregator's mean (or the first seen)."""
    by: dict[str, list[float]] = {}
    for s in summaries:
        if s.get("rounds"):
            by.setdefault(s["aggregator"], []).append(s["accuracy"])
    if not by:
        return {}
    means = {k: math.fsum(v) / len(v) for k, v in by.items()}
    ref = means.get(baseline, next(iter(means.values())))
    return {k: means[k] - ref for k in means}
