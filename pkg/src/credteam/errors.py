"""Exception hierarchy. Each error maps to one failure named in the module contracts."""

from __future__ import annotations


class CredTeamError(Exception):
    pass


class InvalidField(CredTeamError):
    def __init__(self, name: str, reason: str):
        super().__init__(f"invalid field {name!r}: {reason}")
        self.name = name
        self.reason = reason


class DatasetError(CredTeamError):
    pass


class ScriptExhausted(CredTeamError):
    pass


class EndpointUnreachable(CredTeamError):
    pass


class MalformedResponse(CredTeamError):
    pass


class InvalidTopology(CredTeamError):
    pass


class MissingCrS(CredTeamError):
    def __init__(self, agent: int):
        super().__init__(f"no credibility score for agent {agent}")
        self.agent = agent


class TooFewOutputs(CredTeamError):
    pass


class TeamTooLarge(CredTeamError):
    def __init__(self, n: int, limit: int):
        super().__init__(f"exact Shapley enumeration limited to {limit} agents, got {n}")
        self.n = n


class MissingContribution(CredTeamError):
    def __init__(self, agent: int):
        super().__init__(f"no contribution score for team member {agent}")
        self.agent = agent


class JudgeUnavailable(CredTeamError):
    pass


class MalformedJudgeReply(CredTeamError):
    """Raised for judge replies that cannot be used.

    ``kind`` is one of ``length-mismatch``, ``non-numeric``, ``out-of-range``
    or ``bad-shape``.
    """

    def __init__(self, kind: str, detail: str = ""):
        msg = f"malformed judge reply ({kind})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.kind = kind
