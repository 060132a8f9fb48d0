"""Communication graphs and the synchronous peer-interaction phases."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .agents import AgentState, NeighborMessage, revise
from .core import TOPOLOGY_KINDS, AgentOutput
from .errors import InvalidTopology

Edge = tuple[int, int]


@dataclass(frozen=True)
class TopologyGraph:
    node_count: int
    edges: frozenset[Edge]
    kind: str
    # visiting order, only meaningful for crs-chain
    order: tuple[int, ...] = ()

    def __post_init__(self):
        norm = frozenset((min(i, j), max(i, j)) for i, j in self.edges)
        object.__setattr__(self, "edges", norm)
        for i, j in norm:
            if i == j:
                raise InvalidTopology(f"self-loop at {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise InvalidTopology(f"edge {(i, j)} outside 0..{self.node_count - 1}")

    def neighbors(self, i: int) -> list[int]:
        out = [b if a == i else a for a, b in self.edges if i in (a, b)]
        return sorted(out)

    def degree(self, i: int) -> int:
        return sum(i in e for e in self.edges)

    @property
    def realized_edges(self) -> int:
        return len(self.edges)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "node_count": self.node_count,
            "edges": [list(e) for e in sorted(self.edges)],
            "order": list(self.order),
            "realized_edges": self.realized_edges,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> TopologyGraph:
        return cls(d["node_count"], frozenset(tuple(e) for e in d["edges"]), d["kind"], tuple(d.get("order", ())))


def all_pairs(n: int) -> list[Edge]:
    return list(itertools.combinations(range(n), 2))


def chain_order(crs: Sequence[float]) -> list[int]:
    """Agents by descending credibility, ties by ascending index."""
    return sorted(range(len(crs)), key=lambda i: (-crs[i], i))


def generate_topology(
    kind: str,
    n: int,
    m: int = 0,
    crs: Sequence[float] | None = None,
    rng: np.random.Generator | None = None,
) -> TopologyGraph:
    if kind not in TOPOLOGY_KINDS:
        raise InvalidTopology(f"unknown topology kind {kind!r}")
    if n < 2 and kind != "edgeless":
        raise InvalidTopology(f"{kind} needs at least two agents, got {n}")
    if n < 1:
        raise InvalidTopology("need at least one agent")

    if kind == "edgeless":
        return TopologyGraph(n, frozenset(), kind)
    if kind == "sia-random":
        if m < 1:
            raise InvalidTopology("sia-random needs at least one edge draw")
        if rng is None:
            raise ValueError("sia-random needs a random stream")
        pairs = all_pairs(n)
        draws = rng.integers(len(pairs), size=m)
        return TopologyGraph(n, frozenset(pairs[k] for k in draws), kind)
    if kind == "crs-chain":
        if crs is None or len(crs) != n:
            raise ValueError("crs-chain needs one credibility score per agent")
        order = chain_order(crs)
        return TopologyGraph(n, frozenset(zip(order, order[1:])), kind, tuple(order))
    if kind == "ring":
        if n == 2:
            return TopologyGraph(n, frozenset({(0, 1)}), kind)
        return TopologyGraph(n, frozenset((i, (i + 1) % n) for i in range(n)), kind)
    return TopologyGraph(n, frozenset(all_pairs(n)), kind)


def run_interaction(
    graph: TopologyGraph,
    agents: Sequence[AgentState],
    initial: Sequence[AgentOutput],
    phases: int,
    rngs: Sequence[np.random.Generator],
    order: Sequence[int] | None = None,
) -> tuple[list[AgentOutput], list[NeighborMessage]]:
    """Run ``phases`` synchronous exchange-and-revise steps.

    In each phase every agent with at least one neighbor receives its neighbors'
    answers from the previous phase and revises once. Isolated agents are not
    asked to revise. ``order`` only changes the evaluation order of revise
    calls; results never depend on it.
    """
    n = graph.node_count
    if not (len(agents) == len(initial) == len(rngs) == n):
        raise ValueError("agents, initial outputs and streams must match the node count")
    if phases < 1:
        raise ValueError("phases must be positive")
    neigh = [graph.neighbors(i) for i in range(n)]
    current = list(initial)
    log: list[NeighborMessage] = []
    eval_order = list(order) if order is not None else list(range(n))
    if sorted(eval_order) != list(range(n)):
        raise ValueError("order must be a permutation of the agent indices")

    for phase in range(phases):
        inboxes: list[list[NeighborMessage]] = [[] for _ in range(n)]
        for sender in range(n):
            for receiver in neigh[sender]:
                msg = NeighborMessage(current[sender].agent, current[receiver].agent,
                                      current[sender].answer, phase)
                inboxes[receiver].append(msg)
                log.append(msg)
        nxt = list(current)
        for i in eval_order:
            if inboxes[i]:
                nxt[i] = revise(agents[i], current[i], inboxes[i], rngs[i])
        current = nxt
    return current, log
