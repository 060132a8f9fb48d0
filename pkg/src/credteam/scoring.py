"""Contribution scores and the credibility ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .core import AgentOutput, RewardValue
from .errors import MalformedJudgeReply, MissingContribution, TeamTooLarge

MAX_SHAPLEY_TEAM = 12
RENORMALIZE_BAND = (0.5, 2.0)


@dataclass(frozen=True)
class ContributionVector:
    """Per-agent contribution scores for one round, keyed by agent index.

    ``orientation`` is +1 for a plain Shapley vector. The harness may flip the
    sign of a Shapley vector (orientation -1) so that credit follows the sign
    of the round's reward; ``raw`` then keeps the unflipped values.
    """

    scores: Mapping[int, float]
    mode: str
    orientation: int = 1

    @property
    def raw(self) -> dict[int, float]:
        return {k: v * self.orientation for k, v in self.scores.items()}

    def total(self) -> float:
        return math.fsum(self.scores.values())

    def oriented(self, sign: int) -> ContributionVector:
        if sign == 1:
            return self
        return ContributionVector({k: -v for k, v in self.scores.items()}, self.mode, -self.orientation)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "orientation": self.orientation,
            "scores": [[k, v] for k, v in sorted(self.scores.items())],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> ContributionVector:
        return cls({int(k): float(v) for k, v in d["scores"]}, d["mode"], int(d.get("orientation", 1)))


# --- Shapley ---------------------------------------------------------------------


def shapley_contributions(
    outputs: Sequence[AgentOutput],
    aggregate: Callable[[list[AgentOutput]], str],
    reward: Callable[[str], float],
) -> ContributionVector:
    """Exact Shapley values of the game S -> reward(aggregate(S)), with an empty coalition worth 0.

    Coalitions are visited by ascending bitmask over the output order, and each
    coalition passes its outputs to ``aggregate`` in that order.
    """
    n = len(outputs)
    if n > MAX_SHAPLEY_TEAM:
        raise TeamTooLarge(n, MAX_SHAPLEY_TEAM)
    if n == 0:
        return ContributionVector({}, "shapley")

    value = [0.0] * (1 << n)
    for mask in range(1, 1 << n):
        members = [outputs[i] for i in range(n) if mask >> i & 1]
        value[mask] = float(reward(aggregate(members)))

    fact = [math.factorial(k) for k in range(n + 1)]
    weight = [fact[s] * fact[n - s - 1] / fact[n] for s in range(n)]
    scores: dict[int, float] = {}
    for i in range(n):
        bit = 1 << i
        terms = []
        for mask in range(1 << n):
            if mask & bit:
                continue
            terms.append(weight[bin(mask).count("1")] * (value[mask | bit] - value[mask]))
        scores[outputs[i].agent.index] = math.fsum(terms)
    return ContributionVector(scores, "shapley")


# --- judge ------------------------------------------------------------------------


def contribution_request(query: str, final: str, outputs: Sequence[AgentOutput], messages: Sequence) -> dict:
    return {
        "query": query,
        "final": final,
        "outputs": [
            {"agent": o.agent.index, "answer": o.answer, "revisions": [[p, t] for p, t in o.revision_history]}
            for o in outputs
        ],
        "messages": [m.to_dict() for m in messages],
    }


def parse_judge_scores(reply, n: int, signed: bool = False) -> list[float]:
    """Validate a judge's CSc reply and renormalize it to sum to 1."""
    if not isinstance(reply, dict) or not isinstance(reply.get("csc"), list):
        raise MalformedJudgeReply("bad-shape", "reply needs a 'csc' list")
    vals = reply["csc"]
    if len(vals) != n:
        raise MalformedJudgeReply("length-mismatch", f"expected {n} scores, got {len(vals)}")
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise MalformedJudgeReply("non-numeric", repr(v))
        out.append(float(v))
    lo = -1.0 if signed else 0.0
    if any(v < lo or v > 1.0 for v in out):
        raise MalformedJudgeReply("out-of-range", f"scores must lie in [{lo:g}, 1]")
    total = math.fsum(abs(v) for v in out)
    if not RENORMALIZE_BAND[0] <= total <= RENORMALIZE_BAND[1]:
        raise MalformedJudgeReply("out-of-range", f"scores sum to {total:g}")
    return [v / total for v in out]


def judge_contributions(
    query: str,
    final: str,
    outputs: Sequence[AgentOutput],
    messages: Sequence,
    judge,
    signed: bool = False,
) -> ContributionVector:
    reply = judge.contributions(contribution_request(query, final, outputs, messages))
    vals = parse_judge_scores(reply, len(outputs), signed)
    return ContributionVector({o.agent.index: v for o, v in zip(outputs, vals)}, "judge")


# --- ledger -----------------------------------------------------------------------


@dataclass(frozen=True)
class CredibilityLedger:
    scores: Mapping[int, float]
    round_index: int = 0
    history: tuple[tuple[float, ...], ...] = field(default=())
    clamp: bool = True

    @classmethod
    def uniform(cls, n: int, initial: float = 0.5, clamp: bool = True) -> CredibilityLedger:
        return cls({i: float(initial) for i in range(n)}, 0, (), clamp)

    def __getitem__(self, agent: int) -> float:
        return self.scores[agent]

    def values(self) -> list[float]:
        return [self.scores[k] for k in sorted(self.scores)]


def apply_eq_update(crs: float, csc: float, reward: float, eta: float) -> float:
    return crs * (1.0 + eta * csc * reward)


def update_credibility(
    ledger: CredibilityLedger,
    contributions: ContributionVector,
    reward: RewardValue | float,
    eta: float,
    team: Iterable[int] | None = None,
) -> CredibilityLedger:
    """Multiplicative update CrS <- CrS * (1 + eta * CSc * r) for every team member."""
    r = reward.value if isinstance(reward, RewardValue) else float(reward)
    members = sorted(contributions.scores) if team is None else sorted(team)
    new = dict(ledger.scores)
    for i in members:
        if i not in contributions.scores:
            raise MissingContribution(i)
        if i not in ledger.scores:
            raise KeyError(f"agent {i} has no credibility entry")
        v = apply_eq_update(ledger.scores[i], contributions.scores[i], r, eta)
        if ledger.clamp:
            v = min(1.0, max(0.0, v))
        new[i] = v
    snap = tuple(new[k] for k in sorted(new))
    return CredibilityLedger(new, ledger.round_index + 1, ledger.history + (snap,), ledger.clamp)
