"""Domain types shared by every module, and experiment configuration."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import InvalidField

TASK_KINDS = ("multiple-choice", "numeric", "free-text")
TOPOLOGY_KINDS = ("edgeless", "sia-random", "crs-chain", "ring", "complete")
AGGREGATOR_KINDS = (
    "crs-centroid",
    "centroid",
    "weighted-majority",
    "majority",
    "similarity",
    "coordinator",
    "single",
)
CONTRIBUTION_MODES = ("auto", "shapley", "judge")
ADVERSARY_KINDS = ("adversarial-consistent", "adversarial-subtle")
ORIENTATIONS = ("aligned", "literal")

MAX_PHASES = 8

_WS = re.compile(r"\s+")


def normalize_answer(text: str) -> str:
    """Grouping key for answers: trimmed, case-folded, internal whitespace collapsed."""
    return _WS.sub(" ", text.strip()).casefold()


def format_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.10g}"


@dataclass(frozen=True)
class GoldAnswer:
    canonical: str
    accepted_alternates: tuple[str, ...] = ()
    numeric_value: float | None = None
    numeric_tolerance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "accepted_alternates", tuple(self.accepted_alternates))
        if self.numeric_tolerance is not None:
            if self.numeric_value is None:
                raise InvalidField("numeric_tolerance", "requires numeric_value")
            if self.numeric_tolerance < 0:
                raise InvalidField("numeric_tolerance", "must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "canonical": self.canonical,
            "accepted_alternates": list(self.accepted_alternates),
            "numeric_value": self.numeric_value,
            "numeric_tolerance": self.numeric_tolerance,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> GoldAnswer:
        return cls(
            canonical=str(d["canonical"]),
            accepted_alternates=tuple(d.get("accepted_alternates") or ()),
            numeric_value=d.get("numeric_value"),
            numeric_tolerance=d.get("numeric_tolerance"),
        )


@dataclass(frozen=True)
class Query:
    id: str
    prompt: str
    task_kind: str
    gold: GoldAnswer
    options: tuple[str, ...] = ()
    # designated wrong answer for consistent adversaries; derived when absent
    decoy: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if not self.id:
            raise InvalidField("id", "must be nonempty")
        if self.task_kind not in TASK_KINDS:
            raise InvalidField("task_kind", f"unknown kind {self.task_kind!r}")
        if self.task_kind == "multiple-choice":
            keys = [normalize_answer(o) for o in self.options]
            if len(keys) < 2:
                raise InvalidField("options", "multiple-choice needs at least two options")
            if normalize_answer(self.gold.canonical) not in keys:
                raise InvalidField("gold", "must name one of the listed options")
        if self.task_kind == "numeric" and self.gold.numeric_value is None:
            raise InvalidField("gold", "numeric query needs numeric_value")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "prompt": self.prompt,
            "task_kind": self.task_kind,
            "options": list(self.options),
            "decoy": self.decoy,
            "gold": self.gold.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Query:
        return cls(
            id=str(d["id"]),
            prompt=str(d.get("prompt", "")),
            task_kind=d.get("task_kind", "multiple-choice"),
            gold=GoldAnswer.from_dict(d["gold"]),
            options=tuple(d.get("options") or ()),
            decoy=d.get("decoy"),
        )


@dataclass(frozen=True, order=True)
class AgentId:
    index: int
    label: str = ""

    def __post_init__(self):
        if self.index < 0:
            raise InvalidField("index", "must be nonnegative")
        if not self.label:
            object.__setattr__(self, "label", f"agent-{self.index}")


@dataclass(frozen=True)
class AgentOutput:
    agent: AgentId
    answer: str
    revision_history: tuple[tuple[int, str], ...]

    def __post_init__(self):
        hist = tuple((int(p), str(t)) for p, t in self.revision_history)
        object.__setattr__(self, "revision_history", hist)
        if not hist:
            raise ValueError("revision history must be nonempty")
        if hist[-1][1] != self.answer:
            raise ValueError("last revision must equal the answer")

    @classmethod
    def first(cls, agent: AgentId, answer: str) -> AgentOutput:
        return cls(agent, answer, ((0, answer),))

    def revised(self, phase: int, answer: str) -> AgentOutput:
        return AgentOutput(self.agent, answer, self.revision_history + ((phase, answer),))

    @property
    def flips(self) -> int:
        texts = [normalize_answer(t) for _, t in self.revision_history]
        return sum(a != b for a, b in zip(texts, texts[1:]))

    def to_dict(self) -> dict:
        return {
            "agent": self.agent.index,
            "label": self.agent.label,
            "answer": self.answer,
            "revisions": [[p, t] for p, t in self.revision_history],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> AgentOutput:
        return cls(
            AgentId(int(d["agent"]), d.get("label", "")),
            d["answer"],
            tuple((p, t) for p, t in d["revisions"]),
        )


@dataclass(frozen=True)
class RewardValue:
    value: float
    # set when grading had to fall back, e.g. "unparseable-numeric"
    flag: str | None = None

    def __post_init__(self):
        v = float(self.value)
        if not -1.0 <= v <= 1.0:
            raise ValueError(f"reward {v} outside [-1, 1]")
        object.__setattr__(self, "value", v)

    @classmethod
    def clamped(cls, value: float, flag: str | None = None) -> RewardValue:
        return cls(min(1.0, max(-1.0, float(value))), flag)


@dataclass(frozen=True)
class ExperimentConfig:
    team_size: int = 5
    adversary_count: int = 3
    persuadable_count: int = 0
    faithful_accuracy: float = 0.95
    adversary_kind: str = "adversarial-consistent"
    flip_prob: float = 0.3
    subtle_offset: float = 0.1
    persuasion_threshold: int = 2
    topology: str = "edgeless"
    edge_count: int = 6
    edge_cap: int = 20
    interaction_phases: int = 1
    aggregator: str = "crs-centroid"
    contribution_mode: str = "auto"
    credit_orientation: str = "aligned"
    eta: float = 0.02
    initial_crs: float = 0.5
    seed: int = 0
    crs_clamp: bool = True
    embedding_dim: int = 256
    warmup_rounds: int = 0
    judge_endpoint: str | None = None
    judge_timeout: float = 30.0
    judge_retries: int = 2
    judge_signed: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        for key in d:
            if key not in known:
                raise InvalidField(key, "unknown field")
        return validate_config(cls(**dict(d)))

    def replace(self, **changes) -> ExperimentConfig:
        return validate_config(dataclasses.replace(self, **changes))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidField("<document>", f"not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidField("<document>", "config must be a JSON object")
        return cls.from_dict(raw)


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_json(Path(path).read_text())


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate_config(raw: ExperimentConfig) -> ExperimentConfig:
    """Check every invariant in field order; raise InvalidField for the first violation."""
    c = raw

    def need(ok: bool, name: str, reason: str):
        if not ok:
            raise InvalidField(name, reason)

    need(_is_int(c.team_size) and c.team_size >= 1, "team_size", "must be a positive integer")
    need(
        _is_int(c.adversary_count) and 0 <= c.adversary_count <= c.team_size,
        "adversary_count",
        f"must lie in [0, {c.team_size}]",
    )
    need(
        _is_int(c.persuadable_count)
        and 0 <= c.persuadable_count <= c.team_size - c.adversary_count,
        "persuadable_count",
        "must fit in the non-adversarial part of the team",
    )
    need(_is_real(c.faithful_accuracy) and 0 <= c.faithful_accuracy <= 1,
         "faithful_accuracy", "must lie in [0, 1]")
    need(c.adversary_kind in ADVERSARY_KINDS, "adversary_kind", f"must be one of {ADVERSARY_KINDS}")
    need(_is_real(c.flip_prob) and 0 <= c.flip_prob <= 1, "flip_prob", "must lie in [0, 1]")
    need(_is_real(c.subtle_offset) and c.subtle_offset > 0, "subtle_offset", "must be positive")
    need(_is_int(c.persuasion_threshold) and c.persuasion_threshold >= 1,
         "persuasion_threshold", "must be a positive integer")
    need(c.topology in TOPOLOGY_KINDS, "topology", f"must be one of {TOPOLOGY_KINDS}")
    need(_is_int(c.edge_cap) and c.edge_cap >= 1, "edge_cap", "must be a positive integer")
    need(_is_int(c.edge_count) and c.edge_count >= 1, "edge_count", "must be a positive integer")
    if c.topology == "sia-random":
        need(c.edge_count <= c.edge_cap, "edge_count", f"exceeds cap {c.edge_cap}")
        need(c.team_size >= 2, "team_size", "sia-random needs at least two agents")
    need(
        _is_int(c.interaction_phases) and 1 <= c.interaction_phases <= MAX_PHASES,
        "interaction_phases",
        f"must lie in [1, {MAX_PHASES}]",
    )
    need(c.aggregator in AGGREGATOR_KINDS, "aggregator", f"must be one of {AGGREGATOR_KINDS}")
    need(c.contribution_mode in CONTRIBUTION_MODES, "contribution_mode",
         f"must be one of {CONTRIBUTION_MODES}")
    need(c.credit_orientation in ORIENTATIONS, "credit_orientation",
         f"must be one of {ORIENTATIONS}")
    need(_is_real(c.eta) and c.eta > 0, "eta", "must be positive")
    need(_is_real(c.initial_crs) and 0 <= c.initial_crs <= 1, "initial_crs", "must lie in [0, 1]")
    need(_is_int(c.seed) and -(2**63) <= c.seed < 2**64, "seed", "must be a 64-bit integer")
    need(isinstance(c.crs_clamp, bool), "crs_clamp", "must be a boolean")
    need(_is_int(c.embedding_dim) and c.embedding_dim >= 1, "embedding_dim", "must be positive")
    need(_is_int(c.warmup_rounds) and c.warmup_rounds >= 0, "warmup_rounds", "must be nonnegative")
    need(c.judge_endpoint is None or isinstance(c.judge_endpoint, str),
         "judge_endpoint", "must be a URL string or null")
    need(_is_real(c.judge_timeout) and c.judge_timeout > 0, "judge_timeout", "must be positive")
    need(_is_int(c.judge_retries) and c.judge_retries >= 0, "judge_retries", "must be nonnegative")
    need(isinstance(c.judge_signed, bool), "judge_signed", "must be a boolean")
    return c


def apply_overrides(config: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply ``key=value`` strings; values are parsed as JSON when possible."""
    d = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise InvalidField(item, "override must look like key=value")
        key, _, text = item.partition("=")
        key = key.strip().replace("-", "_")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        d[key] = value
    return ExperimentConfig.from_dict(d)


__all__ = [
    "AgentId",
    "AgentOutput",
    "ExperimentConfig",
    "GoldAnswer",
    "Query",
    "RewardValue",
    "apply_overrides",
    "format_number",
    "load_config",
    "normalize_answer",
    "validate_config",
]
