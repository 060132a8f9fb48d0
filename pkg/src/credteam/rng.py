"""Seed derivation. Every random draw in a run comes from a stream keyed by
(master seed, round, purpose, index) so that adding agents or reordering work
never perturbs another stream."""

from __future__ import annotations

import numpy as np

AGENT = 0
TOPOLOGY = 1
JUDGE = 2
SWEEP = 3

_MASK64 = (1 << 64) - 1


def substream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def agent_stream(seed: int, round_index: int, agent_index: int) -> np.random.Generator:
    return substream(seed, round_index, AGENT, agent_index)


def topology_stream(seed: int, round_index: int) -> np.random.Generator:
    return substream(seed, round_index, TOPOLOGY)


def derive_seed(seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
