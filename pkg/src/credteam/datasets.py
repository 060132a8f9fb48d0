"""Query datasets: JSONL files with one query and its grading rubric per line."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import GoldAnswer, Query, format_number
from .errors import CredTeamError, DatasetError
from .reward import GradingRubric

BUNDLED = {"synthetic-20": "synthetic_20.jsonl", "synthetic-200": "synthetic_200.jsonl"}
LETTERS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class DatasetItem:
    query: Query
    rubric: GradingRubric

    def to_dict(self) -> dict:
        d = self.query.to_dict()
        d["rubric"] = self.rubric.to_dict()
        return d


def default_rubric(query: Query) -> GradingRubric:
    if query.task_kind == "numeric":
        return GradingRubric("numeric")
    if query.task_kind == "free-text":
        return GradingRubric("tiered", partial_bands=(("*", 0.5),))
    return GradingRubric("exact")


def parse_item(d: dict) -> DatasetItem:
    q = Query.from_dict(d)
    rubric = GradingRubric.from_dict(d["rubric"]) if d.get("rubric") else default_rubric(q)
    return DatasetItem(q, rubric)


def load_dataset(source: str | Path) -> list[DatasetItem]:
    """Read a JSONL dataset from a path or a bundled dataset name."""
    name = str(source)
    if name in BUNDLED:
        text = resources.files("credteam.data").joinpath(BUNDLED[name]).read_text()
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise DatasetError(f"cannot read dataset {source}: {exc}") from exc
    items = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            item = parse_item(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, CredTeamError) as exc:
            raise DatasetError(f"{name}:{lineno}: {exc}") from exc
        if item.query.id in seen:
            raise DatasetError(f"{name}:{lineno}: duplicate query id {item.query.id!r}")
        seen.add(item.query.id)
        items.append(item)
    if not items:
        raise DatasetError(f"dataset {name} is empty")
    return items


def write_dataset(items: list[DatasetItem], path: str | Path) -> None:
    with open(path, "w") as fh:
        for item in items:
            fh.write(json.dumps(item.to_dict(), sort_keys=True) + "\n")


def synthetic_dataset(n: int, seed: int = 0, numeric_fraction: float = 0.25) -> list[DatasetItem]:
    """Multiple-choice and integer-arithmetic queries with known answers."""
    rng = np.random.default_rng(seed)
    items = []
    for k in range(n):
        qid = f"q{k:04d}"
        if rng.random() < numeric_fraction:
            a, b = (int(x) for x in rng.integers(2, 99, size=2))
            value = a * b
            q = Query(qid, f"What is {a} times {b}?", "numeric",
                      GoldAnswer(format_number(value), numeric_value=float(value), numeric_tolerance=0.0))
        else:
            gold = LETTERS[int(rng.integers(len(LETTERS)))]
            q = Query(qid, f"Synthetic multiple-choice question {k}.", "multiple-choice",
                      GoldAnswer(gold), options=LETTERS)
        items.append(DatasetItem(q, default_rubric(q)))
    return items
