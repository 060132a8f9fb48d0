"""Fusing a team's outputs into one final answer."""

from __future__ import annotations

import hashlib
import logging
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import AgentId, AgentOutput, normalize_answer
from .errors import MalformedJudgeReply, MissingCrS, TooFewOutputs

log = logging.getLogger(__name__)

DEFAULT_DIM = 256
_TOKEN = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True)
class AggregationResult:
    final: str
    chosen_agent: AgentId | None = None
    scores: Mapping[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "final": self.final,
            "chosen_agent": None if self.chosen_agent is None else self.chosen_agent.index,
            "scores": {str(k): v for k, v in sorted(self.scores.items())},
        }


# --- embeddings --------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.casefold())


@lru_cache(maxsize=65536)
def _embed_cached(text: str, dim: int, seed: int) -> np.ndarray:
    vec = np.zeros(dim)
    salt = seed.to_bytes(8, "little", signed=True)
    for tok in tokenize(text):
        h = int.from_bytes(hashlib.blake2b(tok.encode(), digest_size=8, salt=salt).digest(), "little")
        vec[h % dim] += 1.0 if (h >> 63) & 1 else -1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    vec.setflags(write=False)
    return vec


def embed(answer: str, dim: int = DEFAULT_DIM, seed: int = 0) -> np.ndarray:
    """Signed feature-hash embedding of ``answer``, unit length unless it has no tokens."""
    vec = _embed_cached(answer, dim, seed)
    if not vec.any():
        log.warning("answer %r has no tokens; using the zero embedding", answer)
    return vec


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 1.0 - cosine_similarity(a, b)


Embedder = Callable[[str], np.ndarray]


def _weights(outputs: Sequence[AgentOutput], crs: Mapping[int, float]) -> list[float]:
    out = []
    for o in outputs:
        if o.agent.index not in crs:
            raise MissingCrS(o.agent.index)
        out.append(float(crs[o.agent.index]))
    return out


# --- centroid-based -------------------------------------------------------------


def crs_centroid(
    outputs: Sequence[AgentOutput],
    crs: Mapping[int, float],
    embedder: Embedder = embed,
) -> np.ndarray:
    """(1/N) * sum of CrS-weighted answer embeddings. Weights are not normalized."""
    if not outputs:
        raise ValueError("need at least one output")
    w = _weights(outputs, crs)
    acc = np.zeros_like(embedder(outputs[0].answer), dtype=float)
    for wi, o in zip(w, outputs):
        acc = acc + wi * embedder(o.answer)
    return acc / len(outputs)


TIE_TOL = 1e-12


def select_nearest(
    outputs: Sequence[AgentOutput],
    centroid: np.ndarray,
    embedder: Embedder = embed,
) -> AggregationResult:
    if not outputs:
        raise ValueError("need at least one output")
    dists = {o.agent.index: cosine_distance(embedder(o.answer), centroid) for o in outputs}
    # distances equal up to rounding are ties; the lowest agent index wins them
    floor = min(dists.values())
    best = min((o for o in outputs if dists[o.agent.index] <= floor + TIE_TOL), key=lambda o: o.agent.index)
    return AggregationResult(best.answer, best.agent, dists)


def centroid_aggregate(
    outputs: Sequence[AgentOutput],
    crs: Mapping[int, float],
    embedder: Embedder = embed,
) -> AggregationResult:
    return select_nearest(outputs, crs_centroid(outputs, crs, embedder), embedder)


# --- voting -----------------------------------------------------------------------


def weighted_majority(outputs: Sequence[AgentOutput], crs: Mapping[int, float]) -> AggregationResult:
    """Answer group with the largest total CrS; ties go to the group holding the lowest agent index."""
    if not outputs:
        raise ValueError("need at least one output")
    w = _weights(outputs, crs)
    return _vote(outputs, w)


def majority(outputs: Sequence[AgentOutput]) -> AggregationResult:
    if not outputs:
        raise ValueError("need at least one output")
    return _vote(outputs, [1.0] * len(outputs))


def _vote(outputs: Sequence[AgentOutput], weights: Sequence[float]) -> AggregationResult:
    totals: dict[str, float] = {}
    first: dict[str, AgentOutput] = {}
    for o, w in sorted(zip(outputs, weights), key=lambda p: p[0].agent.index):
        key = normalize_answer(o.answer)
        totals[key] = totals.get(key, 0.0) + w
        first.setdefault(key, o)
    winner = min(totals, key=lambda k: (-totals[k], first[k].agent.index))
    chosen = first[winner]
    scores = {o.agent.index: totals[normalize_answer(o.answer)] for o in outputs}
    return AggregationResult(chosen.answer, chosen.agent, scores)


# --- similarity ensemble ----------------------------------------------------------


def similarity_ensemble(outputs: Sequence[AgentOutput], embedder: Embedder = embed) -> AggregationResult:
    """Output with the largest summed cosine similarity to the others."""
    if len(outputs) < 2:
        raise TooFewOutputs("similarity ensemble needs at least two outputs")
    vecs = np.stack([embedder(o.answer) for o in outputs])
    norms = np.linalg.norm(vecs, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = vecs / safe[:, None]
    sim = unit @ unit.T
    n = len(outputs)
    totals = [math.fsum(sim[i, j] for j in range(n) if j != i) for i in range(n)]
    scores = {o.agent.index: float(t) for o, t in zip(outputs, totals)}
    # totals equal up to rounding (e.g. self-similarity 1 vs 1+ulp) are ties
    top = max(totals)
    best = min((o for o in outputs if scores[o.agent.index] >= top - TIE_TOL), key=lambda o: o.agent.index)
    return AggregationResult(best.answer, best.agent, scores)


def single_agent(outputs: Sequence[AgentOutput]) -> AggregationResult:
    best = min(outputs, key=lambda o: o.agent.index)
    return AggregationResult(best.answer, best.agent, {best.agent.index: 1.0})


# --- coordinator ----------------------------------------------------------------------


def aggregation_request(outputs: Sequence[AgentOutput], crs: Mapping[int, float], query: str) -> dict:
    w = _weights(outputs, crs)
    return {
        "query": query,
        "candidates": [
            {"agent": o.agent.index, "answer": o.answer, "crs": wi} for o, wi in zip(outputs, w)
        ],
    }


def coordinator_aggregate(
    outputs: Sequence[AgentOutput],
    crs: Mapping[int, float],
    judge,
    query: str = "",
) -> AggregationResult:
    """Ask the judge channel to pick or synthesize the final answer."""
    reply = judge.aggregate(aggregation_request(outputs, crs, query))
    if not isinstance(reply, dict) or not isinstance(reply.get("final"), str):
        raise MalformedJudgeReply("bad-shape", "aggregation reply needs a text 'final'")
    final = reply["final"]
    key = normalize_answer(final)
    chosen = next((o for o in sorted(outputs, key=lambda o: o.agent.index)
                   if normalize_answer(o.answer) == key), None)
    if chosen is not None:
        final = chosen.answer
    return AggregationResult(final, None if chosen is None else chosen.agent,
                             {o.agent.index: float(crs[o.agent.index]) for o in outputs})
