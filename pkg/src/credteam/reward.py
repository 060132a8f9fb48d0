"""Reward oracles: final answer -> r in [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .core import GoldAnswer, RewardValue, normalize_answer
from .errors import InvalidField

RUBRIC_KINDS = ("exact", "numeric", "tiered")
PARTIAL_RANGE = (0.5, 1.0)
ANY_ALTERNATE = "*"


@dataclass(frozen=True)
class GradingRubric:
    """How a final answer is graded.

    For ``tiered`` rubrics each band is ``(name, reward)``. A band whose name
    equals an accepted alternate (after normalization) prices that alternate;
    the band named ``"*"`` prices any other alternate. Band rewards must lie in
    the partial-credit range [0.5, 1).
    """

    kind: str = "exact"
    correct_reward: float = 1.0
    wrong_reward: float = -1.0
    partial_bands: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        bands = tuple((str(n), float(r)) for n, r in self.partial_bands)
        object.__setattr__(self, "partial_bands", bands)
        if self.kind not in RUBRIC_KINDS:
            raise InvalidField("kind", f"must be one of {RUBRIC_KINDS}")
        for name, r in (("correct_reward", self.correct_reward), ("wrong_reward", self.wrong_reward)):
            if not -1.0 <= r <= 1.0:
                raise InvalidField(name, "must lie in [-1, 1]")
        for name, r in bands:
            if not PARTIAL_RANGE[0] <= r < PARTIAL_RANGE[1]:
                raise InvalidField("partial_bands", f"band {name!r} reward {r} outside [0.5, 1)")

    def band_for(self, alternate: str) -> float:
        key = normalize_answer(alternate)
        for name, r in self.partial_bands:
            if normalize_answer(name) == key:
                return r
        for name, r in self.partial_bands:
            if name == ANY_ALTERNATE:
                return r
        return PARTIAL_RANGE[0]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "correct_reward": self.correct_reward,
            "wrong_reward": self.wrong_reward,
            "partial_bands": [list(b) for b in self.partial_bands],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> GradingRubric:
        return cls(
            kind=d.get("kind", "exact"),
            correct_reward=float(d.get("correct_reward", 1.0)),
            wrong_reward=float(d.get("wrong_reward", -1.0)),
            partial_bands=tuple(tuple(b) for b in d.get("partial_bands", ())),
        )


def parse_number(text: str) -> float | None:
    t = text.strip().replace(",", "")
    if t.endswith("."):
        t = t[:-1]
    try:
        x = float(t)
    except ValueError:
        return None
    return x if x == x and abs(x) != float("inf") else None


def grade(final: str, gold: GoldAnswer, rubric: GradingRubric) -> RewardValue:
    if rubric.kind == "numeric":
        target = gold.numeric_value
        if target is None:
            target = parse_number(gold.canonical)
        x = parse_number(final)
        if x is None or target is None:
            return RewardValue(rubric.wrong_reward, "unparseable-numeric")
        tol = gold.numeric_tolerance or 0.0
        ok = abs(x - target) <= tol
        return RewardValue(rubric.correct_reward if ok else rubric.wrong_reward)

    key = normalize_answer(final)
    if key == normalize_answer(gold.canonical):
        return RewardValue(rubric.correct_reward)
    if rubric.kind == "tiered":
        for alt in gold.accepted_alternates:
            if key == normalize_answer(alt):
                return RewardValue(rubric.band_for(alt))
    return RewardValue(rubric.wrong_reward)


def is_correct(reward: RewardValue, rubric: GradingRubric) -> bool:
    return reward.value >= rubric.correct_reward
