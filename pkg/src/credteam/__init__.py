"""Credibility-scored multi-agent coordination: simulate teams of faithful and
adversarial agents, fuse their answers with credibility-aware aggregation, and
learn per-agent credibility online from contribution scores and rewards."""

from .core import AgentId, AgentOutput, ExperimentConfig, GoldAnswer, Query, RewardValue, validate_config
from .harness import GameState, run_experiment, run_round, replay, sweep
from .scoring import ContributionVector, CredibilityLedger, shapley_contributions, update_credibility

__version__ = "0.1.0"
