"""Agent behaviors.

Synthetic agents stand in for LLM team members. They see the query, their own
answer and their neighbors' answers, and nothing else: credibility and
contribution scores never reach this module.
"""

from __future__ import annotations

import json
import os
import time
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import AgentId, AgentOutput, Query, format_number, normalize_answer
from .errors import EndpointUnreachable, InvalidField, MalformedResponse, ScriptExhausted

BEHAVIOR_KINDS = (
    "faithful",
    "adversarial-consistent",
    "adversarial-subtle",
    "persuadable",
    "scripted",
    "remote",
)


@dataclass(frozen=True)
class RemoteEndpoint:
    """A chat-completion style HTTP endpoint occupying one agent slot."""

    url: str
    model: str = ""
    prompt_template: str = "{prompt}\nOptions: {options}\nAnswer with the final answer only."
    revise_template: str = (
        "{prompt}\nOptions: {options}\nYour previous answer: {own}\n"
        "Your neighbors answered: {neighbors}\nGive your final answer only."
    )
    timeout: float = 30.0
    retries: int = 2
    api_key_env: str | None = None


@dataclass(frozen=True)
class AgentProfile:
    behavior_kind: str
    accuracy: float | None = None
    flip_threshold: int | None = None
    script: tuple[str, ...] = ()
    flip_prob: float | None = None
    near_miss_offset: float = 0.1
    endpoint: RemoteEndpoint | None = None

    def __post_init__(self):
        object.__setattr__(self, "script", tuple(self.script))
        kind = self.behavior_kind
        if kind not in BEHAVIOR_KINDS:
            raise InvalidField("behavior_kind", f"unknown behavior {kind!r}")

        def present(name, value, required: bool):
            if required and value is None:
                raise InvalidField(name, f"required for {kind}")
            if not required and value is not None:
                raise InvalidField(name, f"not used by {kind}")

        # persuadable agents may carry an optional base accuracy
        if kind != "persuadable":
            present("accuracy", self.accuracy, kind == "faithful")
        present("flip_threshold", self.flip_threshold, kind == "persuadable")
        present("flip_prob", self.flip_prob, kind == "adversarial-subtle")
        present("endpoint", self.endpoint, kind == "remote")
        if (kind == "scripted") != bool(self.script):
            raise InvalidField("script", "required for scripted agents only")
        if self.accuracy is not None and not 0 <= self.accuracy <= 1:
            raise InvalidField("accuracy", "must lie in [0, 1]")
        if self.flip_threshold is not None and self.flip_threshold < 1:
            raise InvalidField("flip_threshold", "must be a positive integer")
        if self.flip_prob is not None and not 0 <= self.flip_prob <= 1:
            raise InvalidField("flip_prob", "must lie in [0, 1]")

    @property
    def persistent(self) -> bool:
        # a script is consumed across queries
        return self.behavior_kind == "scripted"

    @property
    def adversarial(self) -> bool:
        return self.behavior_kind.startswith("adversarial")


def faithful(p: float) -> AgentProfile:
    return AgentProfile("faithful", accuracy=p)


def adversarial_consistent() -> AgentProfile:
    return AgentProfile("adversarial-consistent")


def adversarial_subtle(flip_prob: float = 0.3, offset: float = 0.1) -> AgentProfile:
    return AgentProfile("adversarial-subtle", flip_prob=flip_prob, near_miss_offset=offset)


def persuadable(k: int = 2, p: float | None = None) -> AgentProfile:
    return AgentProfile("persuadable", accuracy=p, flip_threshold=k)


def scripted(answers: Sequence[str]) -> AgentProfile:
    return AgentProfile("scripted", script=tuple(answers))


@dataclass
class AgentState:
    id: AgentId
    profile: AgentProfile
    memory: dict[str, Any] = field(default_factory=dict)

    def start_query(self) -> None:
        if not self.profile.persistent:
            self.memory.clear()


@dataclass(frozen=True)
class NeighborMessage:
    sender: AgentId
    receiver: AgentId
    content: str
    phase_index: int

    def __post_init__(self):
        if self.sender.index == self.receiver.index:
            raise ValueError("an agent cannot message itself")
        if self.phase_index < 0:
            raise ValueError("phase index must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "sender": self.sender.index,
            "receiver": self.receiver.index,
            "phase": self.phase_index,
            "content": self.content,
        }


# --- answer construction -------------------------------------------------


def is_gold(query: Query, answer: str) -> bool:
    return normalize_answer(answer) == normalize_answer(query.gold.canonical)


def designated_wrong(query: Query) -> str:
    """The wrong answer consistent adversaries coordinate on."""
    if query.decoy is not None:
        return query.decoy
    if query.task_kind == "multiple-choice":
        keys = [normalize_answer(o) for o in query.options]
        i = keys.index(normalize_answer(query.gold.canonical))
        return query.options[(i + 1) % len(query.options)]
    if query.task_kind == "numeric":
        g = query.gold.numeric_value
        return format_number(g * 1.5 if g else 1.0)
    return f"not {query.gold.canonical}"


def near_miss(query: Query, offset: float, rng: np.random.Generator) -> str:
    if query.task_kind == "numeric":
        g = query.gold.numeric_value
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return format_number(g * (1 + sign * offset) if g else sign * offset)
    return designated_wrong(query)


def random_wrong(query: Query, rng: np.random.Generator) -> str:
    if query.task_kind == "multiple-choice":
        gold = normalize_answer(query.gold.canonical)
        wrong = [o for o in query.options if normalize_answer(o) != gold]
        return wrong[int(rng.integers(len(wrong)))]
    if query.task_kind == "numeric":
        g = query.gold.numeric_value
        if float(g).is_integer():
            delta = int(rng.integers(1, 10)) * (1 if rng.random() < 0.5 else -1)
            return format_number(g + delta)
        u = rng.uniform(0.05, 0.5) * (1 if rng.random() < 0.5 else -1)
        return format_number(g * (1 + u))
    return "unknown"


def _answer_with_accuracy(p: float, query: Query, rng: np.random.Generator) -> str:
    if rng.random() < p:
        return query.gold.canonical
    return random_wrong(query, rng)


# --- the two agent operations ----------------------------------------------


def respond(state: AgentState, query: Query, rng: np.random.Generator) -> AgentOutput:
    prof = state.profile
    kind = prof.behavior_kind
    if kind == "faithful":
        answer = _answer_with_accuracy(prof.accuracy, query, rng)
    elif kind == "adversarial-consistent":
        answer = designated_wrong(query)
    elif kind == "adversarial-subtle":
        answer = near_miss(query, prof.near_miss_offset, rng)
    elif kind == "persuadable":
        p = 1.0 if prof.accuracy is None else prof.accuracy
        answer = _answer_with_accuracy(p, query, rng)
    elif kind == "scripted":
        answer = _next_scripted(state)
    else:
        answer = _remote_respond(state, query)
    state.memory["query"] = query
    return AgentOutput.first(state.id, answer)


def revise(
    state: AgentState,
    own: AgentOutput,
    inbox: Sequence[NeighborMessage],
    rng: np.random.Generator,
) -> AgentOutput:
    if own.agent.index != state.id.index:
        raise ValueError(f"output of agent {own.agent.index} passed to agent {state.id.index}")
    phase = max((m.phase_index for m in inbox), default=own.revision_history[-1][0]) + 1
    prof = state.profile
    kind = prof.behavior_kind
    answer = own.answer
    if kind == "adversarial-subtle":
        query = state.memory.get("query")
        draw = rng.random()
        if query is not None and not is_gold(query, answer) and draw < prof.flip_prob:
            answer = query.gold.canonical
    elif kind == "persuadable":
        answer = persuaded_answer(own.answer, inbox, prof.flip_threshold)
    elif kind == "scripted":
        answer = _next_scripted(state)
    elif kind == "remote":
        answer = _remote_revise(state, own, inbox)
    return own.revised(phase, answer)


def persuaded_answer(own: str, inbox: Sequence[NeighborMessage], k: int) -> str:
    """Adopt the most common disagreeing neighbor answer once at least k neighbors disagree.

    Ties among disagreeing answers go to the one first sent by the lowest sender index.
    """
    mine = normalize_answer(own)
    disagree = sorted(
        (m for m in inbox if normalize_answer(m.content) != mine),
        key=lambda m: m.sender.index,
    )
    if len(disagree) < k:
        return own
    counts = Counter(normalize_answer(m.content) for m in disagree)
    best = max(counts.values())
    for m in disagree:
        if counts[normalize_answer(m.content)] == best:
            return m.content
    return own  # unreachable


def _next_scripted(state: AgentState) -> str:
    pos = state.memory.get("cursor", 0)
    if pos >= len(state.profile.script):
        raise ScriptExhausted(f"agent {state.id.index} has no scripted answers left")
    state.memory["cursor"] = pos + 1
    return state.profile.script[pos]


# --- remote adapter --------------------------------------------------------


def make_remote_agent(endpoint: RemoteEndpoint, index: int, label: str = "") -> AgentState:
    return AgentState(AgentId(index, label), AgentProfile("remote", endpoint=endpoint))


def post_json(url: str, body: dict, timeout: float, retries: int, api_key: str | None = None) -> Any:
    """POST a JSON body and decode the JSON reply, retrying transport failures."""
    data = json.dumps(body).encode()
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    last: Exception | None = None
    for attempt in range(retries + 1):
        req = urllib.request.Request(url, data=data, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                raw = resp.read()
            break
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            last = exc
            if attempt < retries:
                time.sleep(min(0.05 * 2**attempt, 1.0))
    else:
        raise EndpointUnreachable(f"{url}: {last}") from last
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"{url} returned non-JSON body") from exc


def _completion_text(reply: Any) -> str:
    try:
        if "choices" in reply:
            choice = reply["choices"][0]
            text = choice["message"]["content"] if "message" in choice else choice["text"]
        else:
            text = reply.get("completion", reply.get("text"))
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse("no completion text in reply") from exc
    if not isinstance(text, str):
        raise MalformedResponse("completion is not text")
    return text.strip()


def _chat(ep: RemoteEndpoint, content: str) -> str:
    key = os.environ.get(ep.api_key_env) if ep.api_key_env else None
    body = {"messages": [{"role": "user", "content": content}]}
    if ep.model:
        body["model"] = ep.model
    return _completion_text(post_json(ep.url, body, ep.timeout, ep.retries, key))


def _remote_respond(state: AgentState, query: Query) -> str:
    ep = state.profile.endpoint
    return _chat(ep, ep.prompt_template.format(prompt=query.prompt, options=", ".join(query.options)))


def _remote_revise(state: AgentState, own: AgentOutput, inbox: Sequence[NeighborMessage]) -> str:
    ep = state.profile.endpoint
    query = state.memory.get("query")
    neighbors = "; ".join(f"agent {m.sender.index}: {m.content}" for m in inbox) or "none"
    content = ep.revise_template.format(
        prompt=query.prompt if query else "",
        options=", ".join(query.options) if query else "",
        own=own.answer,
        neighbors=neighbors,
    )
    return _chat(ep, content)
