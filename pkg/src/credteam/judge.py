"""Judge channels.

A judge receives JSON-shaped requests and returns JSON-shaped replies:

    aggregate:      {query, candidates: [{agent, answer, crs}]} -> {final, rationale}
    contributions:  {query, final, outputs: [{agent, answer, revisions}], messages: [...]}
                    -> {csc: [float, ...]}

SyntheticJudge answers both in-process with fixed rules so that every code path
runs offline. RemoteJudge posts the same documents to an HTTP endpoint.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .agents import post_json
from .core import normalize_answer
from .errors import EndpointUnreachable, JudgeUnavailable, MalformedJudgeReply, MalformedResponse

CREDENTIAL_ENV = "CREDTEAM_JUDGE_KEY"

MATCH_SHARE = 0.8


class SyntheticJudge:
    name = "synthetic"

    def aggregate(self, request: dict) -> dict:
        cands = sorted(request["candidates"], key=lambda c: c["agent"])
        keys = [normalize_answer(c["answer"]) for c in cands]
        if len(set(keys)) == len(keys):
            top = min(cands, key=lambda c: (-c["crs"], c["agent"]))
            return {"final": top["answer"], "rationale": "all answers distinct; most credible agent"}
        totals: dict[str, float] = {}
        for c, k in zip(cands, keys):
            totals[k] = totals.get(k, 0.0) + c["crs"]
        first = {k: c for c, k in reversed(list(zip(cands, keys)))}
        win = min(totals, key=lambda k: (-totals[k], first[k]["agent"]))
        return {"final": first[win]["answer"], "rationale": "largest total credibility"}

    def contributions(self, request: dict) -> dict:
        final = normalize_answer(request["final"])
        outs = sorted(request["outputs"], key=lambda o: o["agent"])
        match = [normalize_answer(o["answer"]) == final for o in outs]
        n_match = sum(match)
        n_rest = len(outs) - n_match
        raw = []
        for m in match:
            if m:
                raw.append(MATCH_SHARE / n_match)
            else:
                raw.append((1 - MATCH_SHARE) / n_rest)
        total = sum(raw)
        return {"csc": [x / total for x in raw]}


@dataclass
class RemoteJudge:
    url: str
    timeout: float = 30.0
    retries: int = 2
    api_key: str | None = None
    name: str = "remote"

    def _call(self, task: str, request: dict) -> dict:
        try:
            reply = post_json(self.url, {"task": task, **request}, self.timeout, self.retries, self.api_key)
        except EndpointUnreachable as exc:
            raise JudgeUnavailable(str(exc)) from exc
        except MalformedResponse as exc:
            raise MalformedJudgeReply("bad-shape", str(exc)) from exc
        if not isinstance(reply, dict):
            raise MalformedJudgeReply("bad-shape", "reply is not a JSON object")
        return reply

    def aggregate(self, request: dict) -> dict:
        return self._call("aggregate", request)

    def contributions(self, request: dict) -> dict:
        return self._call("contributions", request)


def judge_from_config(config) -> SyntheticJudge | RemoteJudge:
    """Remote judge when an endpoint is configured and the credential is set; synthetic otherwise."""
    key = os.environ.get(CREDENTIAL_ENV)
    if config.judge_endpoint and key:
        return RemoteJudge(config.judge_endpoint, config.judge_timeout, config.judge_retries, key)
    return SyntheticJudge()
