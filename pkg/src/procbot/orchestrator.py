"""Turn orchestration: broadcast the utterance, score previews, select, sequence.

Every turn fans the utterance out to all registered agents in preview mode,
scores each preview from its confidence and stickiness, keeps up to k agents
above the threshold, orders producers before consumers, then executes the
winners in order while feeding each one the context updates of those before
it. No state survives between turns; the caller owns the context.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from fnmatch import fnmatch
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .contract import (
    Agent,
    AgentDescriptor,
    AgentPreview,
    Context,
    ContextUpdate,
    ResponsePayload,
    Utterance,
    agent_execute,
    agent_preview,
    apply_context_updates,
)

logger = logging.getLogger(__name__)

SYSTEM_AGENT_ID = "system"

DEFAULT_THRESHOLD = 0.3
DEFAULT_K = 1
DEFAULT_DEADLINE_MS = 2000.0
DEFAULT_FALLBACK = "Sorry, I can't help with that."


def max_scorer(confidence: float, stickiness: int) -> float:
    return max(confidence, float(stickiness))


def identity_scorer(confidence: float, stickiness: int) -> float:
    return confidence


SCORERS: Dict[str, Callable[[float, int], float]] = {
    "max": max_scorer,
    "identity": identity_scorer,
}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class OrchestratorConfig:
    k: int = DEFAULT_K
    threshold: float = DEFAULT_THRESHOLD
    per_agent_deadline_ms: float = DEFAULT_DEADLINE_MS
    fallback_text: str = DEFAULT_FALLBACK
    scorer: str = "max"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError("threshold must be within [0, 1]")
        if self.per_agent_deadline_ms <= 0:
            raise ConfigError("per-agent deadline must be positive")
        if self.scorer not in SCORERS:
            raise ConfigError(f"unknown scorer {self.scorer!r} (use max or identity)")

    def scorer_fn(self) -> Callable[[float, int], float]:
        return SCORERS[self.scorer]

    @classmethod
    def from_doc(cls, doc: dict) -> "OrchestratorConfig":
        return cls(
            k=int(doc.get("k", DEFAULT_K)),
            threshold=float(doc.get("threshold", DEFAULT_THRESHOLD)),
            per_agent_deadline_ms=float(doc.get("perAgentDeadlineMs", DEFAULT_DEADLINE_MS)),
            fallback_text=str(doc.get("fallbackText", DEFAULT_FALLBACK)),
            scorer=str(doc.get("scorer", "max")),
        )

    @classmethod
    def from_file(cls, path: str) -> "OrchestratorConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_doc(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {path}: {exc}") from exc


@dataclass
class AgentRegistry:
    """Ordered agent roster; registration order is the final tie-break."""

    _agents: List[Agent] = field(default_factory=list)
    _enabled: Dict[str, bool] = field(default_factory=dict)

    def register(self, agent: Agent, enabled: bool = True) -> None:
        if any(a.agent_id == agent.agent_id for a in self._agents):
            raise ConfigError(f"duplicate agent id {agent.agent_id!r}")
        self._agents.append(agent)
        self._enabled[agent.agent_id] = enabled

    def set_enabled(self, agent_id: str, enabled: bool) -> None:
        if agent_id not in self._enabled:
            raise ConfigError(f"unknown agent {agent_id!r}")
        self._enabled[agent_id] = enabled

    def agents(self) -> List[Agent]:
        return [a for a in self._agents if self._enabled[a.agent_id]]

    def all_agents(self) -> List[Agent]:
        return list(self._agents)

    def get(self, agent_id: str) -> Agent:
        for a in self._agents:
            if a.agent_id == agent_id:
                return a
        raise KeyError(agent_id)

    def descriptor(self, agent_id: str) -> AgentDescriptor:
        return self.get(agent_id).descriptor

    def __len__(self) -> int:
        return len(self.agents())


@dataclass(frozen=True)
class ScoredAgent:
    agent_id: str
    preview: AgentPreview
    score: float


@dataclass(frozen=True)
class TurnResult:
    responses: Tuple[Tuple[str, ResponsePayload], ...]
    selected: Tuple[str, ...]
    context_after: Context
    fallback_used: bool
    timings: Dict[str, Dict[str, float]]


@dataclass(frozen=True)
class TurnTrace:
    """One orchestration turn, fully observable (for debugging and scenarios)."""

    utterance: str
    previews: Tuple[Tuple[str, float, int, float, bool], ...]
    # entries: (agent_id, confidence, stickiness, score, timed_out)
    selected: Tuple[str, ...]
    sequence: Tuple[str, ...]
    fallback_used: bool
    timings: Dict[str, Dict[str, float]]

    def to_doc(self) -> dict:
        return {
            "utterance": self.utterance,
            "previews": [
                {"agentId": aid, "confidence": c, "stickiness": s,
                 "score": score, "timedOut": timed_out}
                for aid, c, s, score, timed_out in self.previews
            ],
            "selected": list(self.selected),
            "sequence": list(self.sequence),
            "fallbackUsed": self.fallback_used,
            "timings": self.timings,
        }


def _timed_out_preview(agent_id: str) -> AgentPreview:
    return AgentPreview(
        agent_id=agent_id,
        response=ResponsePayload.of_text(""),
        confidence=0.0,
        stickiness=0,
        context_updates=ContextUpdate.make(agent_id),
        timed_out=True,
    )


def broadcast(u: Utterance, ctx: Context, registry: AgentRegistry,
              deadline_ms: float,
              timings_out: Optional[Dict[str, float]] = None) -> List[AgentPreview]:
    """Preview fan-out: one entry per registered agent, failures absorbed.

    A preview that raises or overruns its deadline becomes a synthetic
    confidence-0 entry flagged as timed out; the turn always proceeds.
    `timings_out`, when given, receives per-agent preview durations in ms.
    """
    agents = registry.agents()
    if not agents:
        return []
    timings: Dict[str, float] = {}

    def call(agent: Agent) -> AgentPreview:
        started = time.perf_counter()
        try:
            return agent_preview(agent, u, ctx)
        finally:
            timings[agent.agent_id] = (time.perf_counter() - started) * 1000.0

    previews: List[AgentPreview] = []
    with ThreadPoolExecutor(max_workers=len(agents)) as pool:
        started = time.perf_counter()
        futures = [(agent, pool.submit(call, agent)) for agent in agents]
        budget = deadline_ms / 1000.0
        for agent, future in futures:
            remaining = max(0.0, budget - (time.perf_counter() - started))
            try:
                preview = future.result(timeout=remaining)
                if preview.agent_id != agent.agent_id:
                    raise ValueError(
                        f"agent {agent.agent_id!r} answered as {preview.agent_id!r}")
                previews.append(preview)
            except FutureTimeout:
                logger.warning("agent %s exceeded its %.0fms deadline",
                               agent.agent_id, deadline_ms)
                future.cancel()
                previews.append(_timed_out_preview(agent.agent_id))
            except Exception:
                logger.exception("agent %s preview failed", agent.agent_id)
                previews.append(_timed_out_preview(agent.agent_id))
    if timings_out is not None:
        for agent in agents:
            timings_out[agent.agent_id] = timings.get(agent.agent_id, deadline_ms)
    return previews


def score(previews: Iterable[AgentPreview],
          scorer: Callable[[float, int], float] = max_scorer) -> List[ScoredAgent]:
    return [
        ScoredAgent(agent_id=p.agent_id, preview=p,
                    score=scorer(p.confidence, p.stickiness))
        for p in previews
    ]


def select(scored: Iterable[ScoredAgent], config: OrchestratorConfig,
           turn_log: Tuple = ()) -> List[ScoredAgent]:
    """Up to k agents strictly above the threshold, best first.

    Ties prefer sticky agents, then earlier registration (list order). The
    turn log parameter keeps the door open for history-aware selectors.
    """
    ranked = sorted(
        enumerate(scored),
        key=lambda item: (-item[1].score, -item[1].preview.stickiness, item[0]),
    )
    winners = [sa for _, sa in ranked if sa.score > config.threshold]
    return winners[:config.k]


def _keys_overlap(produced: Iterable[str], consumed: Iterable[str]) -> bool:
    return any(fnmatch(p, c) or fnmatch(c, p) for p in produced for c in consumed)


def sequence(selected: List[ScoredAgent], registry: AgentRegistry) -> List[ScoredAgent]:
    """Stable producer-before-consumer ordering of the selected agents.

    Edges come from descriptor produces/consumes key patterns; cycles fall
    back to the incoming (descending score) order so a turn never deadlocks.
    """
    if len(selected) <= 1:
        return list(selected)
    descriptors = {sa.agent_id: registry.descriptor(sa.agent_id) for sa in selected}

    def depends_on(consumer_id: str, producer_id: str) -> bool:
        return _keys_overlap(descriptors[producer_id].produces_keys,
                             descriptors[consumer_id].consumes_keys)

    def in_cycle(agent_id: str, pool: List[ScoredAgent]) -> bool:
        """True when following producer links from agent_id leads back to it."""
        ids = [sa.agent_id for sa in pool]
        frontier = [p for p in ids if p != agent_id and depends_on(agent_id, p)]
        seen = set(frontier)
        while frontier:
            node = frontier.pop()
            if node == agent_id:
                return True
            for p in ids:
                if p not in seen and p != node and depends_on(node, p):
                    seen.add(p)
                    frontier.append(p)
        return agent_id in seen

    pending = list(selected)
    ordered: List[ScoredAgent] = []
    while pending:
        chosen = None
        for sa in pending:
            blocked = any(other.agent_id != sa.agent_id
                          and depends_on(sa.agent_id, other.agent_id)
                          for other in pending)
            if not blocked:
                chosen = sa
                break
        if chosen is None:
            # Everyone left is blocked: break the deadlock inside a cycle,
            # best score first, never by pulling a mere downstream consumer up.
            chosen = next((sa for sa in pending if in_cycle(sa.agent_id, pending)),
                          pending[0])
        ordered.append(chosen)
        pending = [sa for sa in pending if sa.agent_id != chosen.agent_id]
    return ordered


def run_turn(u: Utterance, ctx: Context, registry: AgentRegistry,
             config: OrchestratorConfig,
             trace_sink: Optional[Callable[[TurnTrace], None]] = None) -> TurnResult:
    """One full turn: broadcast, score, select, sequence, execute, assemble."""
    ctx.validate()
    preview_ms: Dict[str, float] = {}
    previews = broadcast(u, ctx, registry, config.per_agent_deadline_ms,
                         timings_out=preview_ms)
    scored = score(previews, config.scorer_fn())
    selected = select(scored, config, ctx.turn_log)
    timings: Dict[str, Dict[str, float]] = {
        aid: {"previewMs": ms} for aid, ms in preview_ms.items()}

    if not selected:
        context_after = ctx.with_turn_logged(u.turn_index, ())
        result = TurnResult(
            responses=((SYSTEM_AGENT_ID, ResponsePayload.of_text(config.fallback_text)),),
            selected=(),
            context_after=context_after,
            fallback_used=True,
            timings=timings,
        )
        _emit_trace(trace_sink, u, scored, (), (), True, timings)
        return result

    ordered = sequence(selected, registry)
    responses: List[Tuple[str, ResponsePayload]] = []
    applied: List[ContextUpdate] = []
    for sa in ordered:
        agent = registry.get(sa.agent_id)
        exec_ctx = apply_context_updates(ctx, applied)
        started = time.perf_counter()
        try:
            result = agent_execute(agent, u, exec_ctx)
            responses.append((sa.agent_id, result.response))
            applied.append(result.context_updates)
        except Exception as exc:
            logger.exception("agent %s execute failed", sa.agent_id)
            responses.append((sa.agent_id, ResponsePayload.of_text(
                f"Something went wrong while handling that: {exc}")))
        finally:
            timings.setdefault(sa.agent_id, {})["executeMs"] = (
                (time.perf_counter() - started) * 1000.0)

    selected_ids = tuple(sa.agent_id for sa in selected)
    sequence_ids = tuple(sa.agent_id for sa in ordered)
    context_after = apply_context_updates(ctx, applied).with_turn_logged(
        u.turn_index, selected_ids)
    turn = TurnResult(
        responses=tuple(responses),
        selected=selected_ids,
        context_after=context_after,
        fallback_used=False,
        timings=timings,
    )
    _emit_trace(trace_sink, u, scored, selected_ids, sequence_ids, False, timings)
    return turn


def _emit_trace(trace_sink, u: Utterance, scored: List[ScoredAgent],
                selected: Tuple[str, ...], seq: Tuple[str, ...],
                fallback: bool, timings: Dict) -> None:
    if trace_sink is None:
        return
    trace = TurnTrace(
        utterance=u.text,
        previews=tuple(
            (sa.agent_id, sa.preview.confidence, sa.preview.stickiness,
             sa.score, sa.preview.timed_out)
            for sa in scored
        ),
        selected=selected,
        sequence=seq,
        fallback_used=fallback,
        timings=timings,
    )
    try:
        trace_sink(trace)
    except Exception:
        logger.exception("trace sink failed")
