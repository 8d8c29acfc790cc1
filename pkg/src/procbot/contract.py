"""Agent contract: the context model, preview/execute calling convention, and
response payloads shared by every agent and the orchestrator.

Agents are stateless services. All conversational state travels through the
Context value that the orchestrator passes in and collects updates against on
every turn. Previews must be side-effect free; execution may change the world
only for agents whose descriptor says so.
"""

from __future__ import annotations

import base64
import copy
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional, Union


class ContractViolation(Exception):
    """An agent or caller broke the contract (bad value, foreign namespace, ...)."""


class SpeakerRole(Enum):
    EMPLOYEE = "Employee"
    MANAGER = "Manager"
    DIRECTOR = "Director"
    LOAN_OFFICER = "LoanOfficer"
    UNSPECIFIED = "Unspecified"

    @classmethod
    def parse(cls, raw: str) -> "SpeakerRole":
        for role in cls:
            if role.value.lower() == str(raw).lower():
                return role
        raise ContractViolation(f"unknown speaker role: {raw!r}")


class TaxonomyClass(Enum):
    DIALOG = "Dialog"
    INFORMATION_RETRIEVAL = "InformationRetrieval"
    TASK_EXECUTION = "TaskExecution"
    DATA_ANALYTICS = "DataAnalytics"
    ALERTING = "Alerting"


@dataclass(frozen=True)
class Utterance:
    """One user turn: raw text plus who said it and when in the session."""

    text: str
    speaker_role: SpeakerRole = SpeakerRole.UNSPECIFIED
    turn_index: int = 0

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ContractViolation("utterance text is empty")
        if self.turn_index < 0:
            raise ContractViolation("turn_index must be non-negative")


@dataclass(frozen=True)
class TablePayload:
    """Tabular context/response value: column (name, type) pairs plus rows."""

    columns: tuple
    rows: tuple

    @classmethod
    def build(cls, columns: Iterable, rows: Iterable) -> "TablePayload":
        cols = tuple((str(n), str(t)) for n, t in columns)
        return cls(columns=cols, rows=tuple(tuple(r) for r in rows))

    @property
    def column_names(self) -> list:
        return [name for name, _ in self.columns]


# Context values form a closed set so the wire format stays testable.
Value = Union[str, int, float, bool, list, dict, TablePayload]

_RESERVED_KEY_PREFIX = "@"


def validate_value(value: Any, where: str = "value") -> None:
    """Reject anything outside the closed value set (recursively)."""
    if isinstance(value, bool) or isinstance(value, (int, float, str)):
        return
    if isinstance(value, TablePayload):
        return
    if isinstance(value, list):
        for i, item in enumerate(value):
            validate_value(item, f"{where}[{i}]")
        return
    if isinstance(value, dict):
        for k, v in value.items():
            _validate_key(k, where)
            validate_value(v, f"{where}.{k}")
        return
    raise ContractViolation(f"{where}: unsupported value type {type(value).__name__}")


def _validate_key(key: Any, where: str) -> None:
    if not isinstance(key, str) or not key:
        raise ContractViolation(f"{where}: keys must be non-empty strings")
    if key.startswith(_RESERVED_KEY_PREFIX):
        raise ContractViolation(f"{where}: keys starting with '@' are reserved")


@dataclass(frozen=True)
class Context:
    """Namespaced key-value state passed between the orchestrator and agents.

    `shared` is writable by any selected agent; `agent_scoped` namespaces are
    writable only by their owner. Treated as an immutable value: operations
    that change context return a new one.
    """

    shared: dict = field(default_factory=dict)
    agent_scoped: dict = field(default_factory=dict)
    turn_log: tuple = ()

    @classmethod
    def empty(cls) -> "Context":
        return cls()

    def validate(self) -> None:
        for k, v in self.shared.items():
            _validate_key(k, "shared")
            validate_value(v, f"shared.{k}")
        for agent_id, ns in self.agent_scoped.items():
            _validate_key(agent_id, "agent_scoped")
            if not isinstance(ns, dict):
                raise ContractViolation(f"agent_scoped.{agent_id} is not a map")
            for k, v in ns.items():
                _validate_key(k, f"agent_scoped.{agent_id}")
                validate_value(v, f"agent_scoped.{agent_id}.{k}")

    def scoped(self, agent_id: str) -> dict:
        """The agent's own namespace (read-only view; may be empty)."""
        return dict(self.agent_scoped.get(agent_id, {}))

    def with_turn_logged(self, turn_index: int, selected: Iterable) -> "Context":
        entry = (turn_index, tuple(selected))
        return Context(
            shared=copy.deepcopy(self.shared),
            agent_scoped=copy.deepcopy(self.agent_scoped),
            turn_log=self.turn_log + (entry,),
        )


@dataclass(frozen=True)
class ContextUpdate:
    """Delta proposed by one agent: shared writes plus its own namespace.

    A value of None marks a key for deletion. `agent_scoped` maps namespace
    owner to writes; anything other than the proposing agent's own id is a
    contract violation.
    """

    agent_id: str
    shared: dict = field(default_factory=dict)
    agent_scoped: dict = field(default_factory=dict)

    def validate(self) -> None:
        for k, v in self.shared.items():
            _validate_key(k, f"update[{self.agent_id}].shared")
            if v is not None:
                validate_value(v, f"update[{self.agent_id}].shared.{k}")
        for ns, writes in self.agent_scoped.items():
            if ns != self.agent_id:
                raise ContractViolation(
                    f"agent {self.agent_id!r} attempted to write namespace {ns!r}"
                )
            for k, v in writes.items():
                _validate_key(k, f"update[{self.agent_id}].agent.{k}")
                if v is not None:
                    validate_value(v, f"update[{self.agent_id}].agent.{k}")

    @classmethod
    def make(cls, agent_id: str, shared: Optional[dict] = None,
             own: Optional[dict] = None) -> "ContextUpdate":
        return cls(
            agent_id=agent_id,
            shared=dict(shared or {}),
            agent_scoped={agent_id: dict(own)} if own else {},
        )


def apply_context_updates(ctx: Context, updates: Iterable) -> Context:
    """Apply deltas in order (later writes to the same shared key win).

    All deltas are validated before any write, so a namespace violation
    produces no partial update. Returns a new Context; `ctx` is unchanged.
    """
    updates = list(updates)
    for upd in updates:
        upd.validate()
    shared = copy.deepcopy(ctx.shared)
    scoped = copy.deepcopy(ctx.agent_scoped)
    for upd in updates:
        for k, v in upd.shared.items():
            if v is None:
                shared.pop(k, None)
            else:
                shared[k] = copy.deepcopy(v)
        for ns, writes in upd.agent_scoped.items():
            target = scoped.setdefault(ns, {})
            for k, v in writes.items():
                if v is None:
                    target.pop(k, None)
                else:
                    target[k] = copy.deepcopy(v)
            if not target:
                scoped.pop(ns, None)
    return Context(shared=shared, agent_scoped=scoped, turn_log=ctx.turn_log)


class Modality(Enum):
    TEXT = "text"
    TABLE = "table"
    CHART = "chart"
    FILE = "file"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class ChartSpec:
    """Declarative chart description rendered by a client, never by agents."""

    kind: str  # bar | line | pie
    title: str
    x_label: str
    y_label: str
    categories: tuple
    values: tuple

    def __post_init__(self) -> None:
        if self.kind not in ("bar", "line", "pie"):
            raise ContractViolation(f"unknown chart kind {self.kind!r}")
        if len(self.categories) != len(self.values):
            raise ContractViolation("chart categories and values differ in length")


@dataclass(frozen=True)
class FileAttachment:
    filename: str
    media_type: str
    data: bytes


@dataclass(frozen=True)
class ResponsePayload:
    """One agent response in a single modality (or a composite of parts)."""

    modality: Modality
    text: Optional[str] = None
    table: Optional[TablePayload] = None
    chart: Optional[ChartSpec] = None
    attachment: Optional[FileAttachment] = None
    parts: Optional[tuple] = None

    def __post_init__(self) -> None:
        populated = {
            "text": self.text is not None,
            "table": self.table is not None,
            "chart": self.chart is not None,
            "attachment": self.attachment is not None,
            "parts": self.parts is not None,
        }
        required = {
            Modality.TEXT: {"text"},
            Modality.TABLE: {"table"},
            Modality.CHART: {"chart"},
            Modality.FILE: {"attachment"},
            Modality.COMPOSITE: {"parts"},
        }[self.modality]
        actual = {name for name, present in populated.items() if present}
        if actual != required:
            raise ContractViolation(
                f"{self.modality.value} payload must populate exactly {sorted(required)}, "
                f"got {sorted(actual)}"
            )

    @classmethod
    def of_text(cls, text: str) -> "ResponsePayload":
        return cls(modality=Modality.TEXT, text=text)

    @classmethod
    def of_table(cls, table: TablePayload) -> "ResponsePayload":
        return cls(modality=Modality.TABLE, table=table)

    @classmethod
    def of_chart(cls, chart: ChartSpec) -> "ResponsePayload":
        return cls(modality=Modality.CHART, chart=chart)

    @classmethod
    def of_file(cls, filename: str, media_type: str, data: bytes) -> "ResponsePayload":
        return cls(modality=Modality.FILE,
                   attachment=FileAttachment(filename, media_type, data))

    @classmethod
    def composite(cls, parts: Iterable) -> "ResponsePayload":
        return cls(modality=Modality.COMPOSITE, parts=tuple(parts))

    def flat_text(self) -> str:
        """All text content, parts joined by newlines (for transcripts/tests)."""
        if self.modality is Modality.TEXT:
            return self.text or ""
        if self.modality is Modality.COMPOSITE:
            return "\n".join(p.flat_text() for p in self.parts if p.flat_text())
        return ""

    def modality_kinds(self) -> list:
        if self.modality is Modality.COMPOSITE:
            kinds = []
            for p in self.parts:
                kinds.extend(p.modality_kinds())
            return kinds
        return [self.modality.value]


@dataclass(frozen=True)
class AgentDescriptor:
    """Registry entry describing one agent's identity and data dependencies."""

    agent_id: str
    display_name: str
    taxonomy_class: TaxonomyClass
    world_changing: bool
    consumes_keys: frozenset = frozenset()
    produces_keys: frozenset = frozenset()


@dataclass(frozen=True)
class AgentPreview:
    """One agent's dry-run answer: response, confidence, stickiness, proposed delta."""

    agent_id: str
    response: ResponsePayload
    confidence: float
    stickiness: int
    context_updates: ContextUpdate
    timed_out: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ContractViolation(
                f"{self.agent_id}: confidence {self.confidence} outside [0, 1]"
            )
        if self.stickiness not in (0, 1):
            raise ContractViolation(
                f"{self.agent_id}: stickiness {self.stickiness} not in {{0, 1}}"
            )


# The execute phase returns the same shape; side effects are allowed iff the
# agent's descriptor says world_changing.
AgentResult = AgentPreview


def agent_preview(agent: "Agent", utterance: Utterance, ctx: Context) -> AgentPreview:
    """Invoke an agent's preview mode: no observable world state may change."""
    ctx.validate()
    preview = agent.preview(utterance, ctx)
    preview.context_updates.validate()
    return preview


def agent_execute(agent: "Agent", utterance: Utterance, ctx: Context) -> AgentResult:
    """Invoke an agent's execute mode (the phase where side effects are permitted)."""
    ctx.validate()
    result = agent.execute(utterance, ctx)
    result.context_updates.validate()
    return result


class Agent:
    """Base class for contract-conforming agents.

    Subclasses set `descriptor` and implement `preview`. The default execute
    re-runs preview, which is correct for every non-world-changing agent.
    """

    descriptor: AgentDescriptor

    @property
    def agent_id(self) -> str:
        return self.descriptor.agent_id

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        raise NotImplementedError

    def execute(self, utterance: Utterance, ctx: Context) -> AgentResult:
        return self.preview(utterance, ctx)

    def reply(self, payload: ResponsePayload, confidence: float, stickiness: int = 0,
              shared: Optional[dict] = None, own: Optional[dict] = None) -> AgentPreview:
        return AgentPreview(
            agent_id=self.agent_id,
            response=payload,
            confidence=confidence,
            stickiness=stickiness,
            context_updates=ContextUpdate.make(self.agent_id, shared=shared, own=own),
        )


# ---------------------------------------------------------------------------
# Wire format. JSON-shaped documents with fixed field names; this is what the
# gateway's remote-agent adapter and the HTTP API speak.
# ---------------------------------------------------------------------------

_TABLE_TAG = "@table"
_BYTES_TAG = "@bytes"


def value_to_wire(value: Any) -> Any:
    if isinstance(value, TablePayload):
        return {_TABLE_TAG: {
            "columns": [[n, t] for n, t in value.columns],
            "rows": [list(r) for r in value.rows],
        }}
    if isinstance(value, list):
        return [value_to_wire(v) for v in value]
    if isinstance(value, dict):
        return {k: value_to_wire(v) for k, v in value.items()}
    return value


def value_from_wire(raw: Any) -> Any:
    if isinstance(raw, dict):
        if set(raw.keys()) == {_TABLE_TAG}:
            body = raw[_TABLE_TAG]
            return TablePayload.build(
                [(c[0], c[1]) for c in body["columns"]],
                [tuple(r) for r in body["rows"]],
            )
        return {k: value_from_wire(v) for k, v in raw.items()}
    if isinstance(raw, list):
        return [value_from_wire(v) for v in raw]
    return raw


def _map_to_wire(m: dict) -> dict:
    return {k: value_to_wire(v) for k, v in m.items()}


def _map_from_wire(m: dict) -> dict:
    return {k: value_from_wire(v) for k, v in m.items()}


def context_to_wire(ctx: Context) -> dict:
    return {
        "sharedContext": _map_to_wire(ctx.shared),
        "agentContext": {aid: _map_to_wire(ns) for aid, ns in ctx.agent_scoped.items()},
        "turnLog": [[idx, list(ids)] for idx, ids in ctx.turn_log],
    }


def context_from_wire(raw: dict) -> Context:
    ctx = Context(
        shared=_map_from_wire(raw.get("sharedContext", {})),
        agent_scoped={aid: _map_from_wire(ns)
                      for aid, ns in raw.get("agentContext", {}).items()},
        turn_log=tuple((int(idx), tuple(ids)) for idx, ids in raw.get("turnLog", [])),
    )
    ctx.validate()
    return ctx


def utterance_to_wire(u: Utterance) -> dict:
    return {"text": u.text, "speakerRole": u.speaker_role.value, "turnIndex": u.turn_index}


def utterance_from_wire(raw: dict) -> Utterance:
    return Utterance(
        text=raw["text"],
        speaker_role=SpeakerRole.parse(raw.get("speakerRole", "Unspecified")),
        turn_index=int(raw.get("turnIndex", 0)),
    )


def payload_to_wire(payload: ResponsePayload) -> dict:
    out: dict = {"modality": payload.modality.value}
    if payload.modality is Modality.TEXT:
        out["text"] = payload.text
    elif payload.modality is Modality.TABLE:
        out["table"] = value_to_wire(payload.table)[_TABLE_TAG]
    elif payload.modality is Modality.CHART:
        c = payload.chart
        out["chart"] = {
            "kind": c.kind, "title": c.title, "xLabel": c.x_label, "yLabel": c.y_label,
            "categories": list(c.categories), "values": list(c.values),
        }
    elif payload.modality is Modality.FILE:
        a = payload.attachment
        out["attachment"] = {
            "filename": a.filename, "mediaType": a.media_type,
            _BYTES_TAG: base64.b64encode(a.data).decode("ascii"),
        }
    else:
        out["parts"] = [payload_to_wire(p) for p in payload.parts]
    return out


def payload_from_wire(raw: dict) -> ResponsePayload:
    modality = Modality(raw["modality"])
    if modality is Modality.TEXT:
        return ResponsePayload.of_text(raw["text"])
    if modality is Modality.TABLE:
        t = raw["table"]
        return ResponsePayload.of_table(TablePayload.build(
            [(c[0], c[1]) for c in t["columns"]], [tuple(r) for r in t["rows"]]))
    if modality is Modality.CHART:
        c = raw["chart"]
        return ResponsePayload.of_chart(ChartSpec(
            kind=c["kind"], title=c["title"], x_label=c["xLabel"], y_label=c["yLabel"],
            categories=tuple(c["categories"]), values=tuple(c["values"])))
    if modality is Modality.FILE:
        a = raw["attachment"]
        return ResponsePayload.of_file(
            a["filename"], a["mediaType"], base64.b64decode(a[_BYTES_TAG]))
    return ResponsePayload.composite(payload_from_wire(p) for p in raw["parts"])


def update_to_wire(update: ContextUpdate) -> dict:
    return {
        "shared": {k: (None if v is None else value_to_wire(v))
                   for k, v in update.shared.items()},
        "agentScoped": {ns: {k: (None if v is None else value_to_wire(v))
                             for k, v in writes.items()}
                        for ns, writes in update.agent_scoped.items()},
    }


def update_from_wire(agent_id: str, raw: dict) -> ContextUpdate:
    return ContextUpdate(
        agent_id=agent_id,
        shared={k: (None if v is None else value_from_wire(v))
                for k, v in raw.get("shared", {}).items()},
        agent_scoped={ns: {k: (None if v is None else value_from_wire(v))
                           for k, v in writes.items()}
                      for ns, writes in raw.get("agentScoped", {}).items()},
    )


def preview_to_wire(preview: AgentPreview) -> dict:
    return {
        "agentId": preview.agent_id,
        "response": payload_to_wire(preview.response),
        "confidence": preview.confidence,
        "stickiness": preview.stickiness,
        "contextUpdates": update_to_wire(preview.context_updates),
    }


def preview_from_wire(raw: dict, agent_id: Optional[str] = None) -> AgentPreview:
    aid = agent_id or raw["agentId"]
    return AgentPreview(
        agent_id=aid,
        response=payload_from_wire(raw["response"]),
        confidence=float(raw["confidence"]),
        stickiness=int(raw["stickiness"]),
        context_updates=update_from_wire(aid, raw.get("contextUpdates", {})),
    )


def context_to_json(ctx: Context) -> str:
    return json.dumps(context_to_wire(ctx), sort_keys=True)


def context_from_json(doc: str) -> Context:
    return context_from_wire(json.loads(doc))
