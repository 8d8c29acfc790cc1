"""Minimal business-process engine: role-guarded state machines plus an event log.

The store is single-writer: every mutation serializes through one lock and
commits exactly one event. Reads hand out copies, and subscriptions replay
the event log from any position, so subscribers never block writers.
"""

from __future__ import annotations

import copy
import json
import os
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple


class ProcessError(Exception):
    pass


class SubmissionError(ProcessError):
    def __init__(self, missing_fields: List[str]):
        super().__init__(f"missing required fields: {', '.join(missing_fields)}")
        self.missing_fields = list(missing_fields)


class AuthorizationError(ProcessError):
    pass


class IllegalTransition(ProcessError):
    pass


class UnknownInstance(ProcessError):
    pass


class EventKind(Enum):
    SUBMITTED = "Submitted"
    MANAGER_APPROVED = "ManagerApproved"
    MANAGER_REJECTED = "ManagerRejected"
    DIRECTOR_APPROVED = "DirectorApproved"
    DIRECTOR_REJECTED = "DirectorRejected"
    STATE_CHANGED = "StateChanged"


@dataclass(frozen=True)
class Transition:
    from_state: str
    action: str
    required_role: str
    to_state: str


@dataclass(frozen=True)
class FormField:
    field_id: str
    field_type: str  # "string" | "number"
    required: bool


@dataclass(frozen=True)
class ProcessDefinition:
    process_id: str
    states: Tuple[str, ...]
    initial_state: str
    terminal_states: Tuple[str, ...]
    transitions: Tuple[Transition, ...]
    form_fields: Tuple[FormField, ...]
    event_kinds: Dict[str, str] = field(default_factory=dict)  # "state:action" -> kind

    def __post_init__(self) -> None:
        states = set(self.states)
        if self.initial_state not in states:
            raise ProcessError(f"{self.process_id}: initial state not declared")
        if self.initial_state in self.terminal_states:
            raise ProcessError(f"{self.process_id}: initial state cannot be terminal")
        for t in self.transitions:
            if t.from_state not in states or t.to_state not in states:
                raise ProcessError(f"{self.process_id}: transition references unknown state")
            if t.from_state in self.terminal_states:
                raise ProcessError(f"{self.process_id}: terminal state has outgoing transition")

    def find_transition(self, state: str, action: str, role: str) -> Optional[Transition]:
        for t in self.transitions:
            if t.from_state == state and t.action == action and t.required_role == role:
                return t
        return None

    def event_kind_for(self, state: str, action: str) -> EventKind:
        kind = self.event_kinds.get(f"{state}:{action}")
        return EventKind(kind) if kind else EventKind.STATE_CHANGED

    @classmethod
    def from_doc(cls, doc: dict) -> "ProcessDefinition":
        return cls(
            process_id=doc["id"],
            states=tuple(doc["states"]),
            initial_state=doc["initial"],
            terminal_states=tuple(doc["terminal"]),
            transitions=tuple(Transition(t["from"], t["action"], t["role"], t["to"])
                              for t in doc["transitions"]),
            form_fields=tuple(FormField(f["id"], f["type"], bool(f["required"]))
                              for f in doc["form"]),
            event_kinds=dict(doc.get("events", {})),
        )


@dataclass(frozen=True)
class ProcessInstance:
    instance_id: str
    process_id: str
    subject: str
    state: str
    form: Dict[str, Any]
    history: Tuple[Tuple[Any, str, str, Optional[str], str], ...]
    # history entries: (timestamp, actor_role, action, from_state, to_state)


@dataclass(frozen=True)
class ProcessEvent:
    event_id: int
    instance_id: str
    event_kind: EventKind
    payload: Dict[str, Any]


class LogicalClock:
    """Deterministic timestamp source; real deployments may inject wall time."""

    def __init__(self) -> None:
        self._tick = 0
        self._lock = threading.Lock()

    def __call__(self) -> int:
        with self._lock:
            self._tick += 1
            return self._tick


class Subscription:
    """Pull-based cursor over the event log; each poll yields new events once."""

    def __init__(self, store: "ProcessStore", since_event_id: int):
        self._store = store
        self._cursor = since_event_id

    def poll(self) -> List[ProcessEvent]:
        events = self._store.events_since(self._cursor)
        if events:
            self._cursor = events[-1].event_id
        return events


class ProcessStore:
    def __init__(self, definitions: Iterable[ProcessDefinition], clock=None,
                 journal_path: Optional[str] = None):
        self._definitions = {d.process_id: d for d in definitions}
        self._instances: Dict[str, ProcessInstance] = {}
        self._events: List[ProcessEvent] = []
        self._lock = threading.RLock()
        self._instance_seq = 0
        self._event_seq = 0
        self._clock = clock or LogicalClock()
        self._journal_path = journal_path

    @classmethod
    def with_journal(cls, definitions: Iterable[ProcessDefinition], path: str,
                     clock=None) -> "ProcessStore":
        """Open a journal-backed store, restoring state if the file exists."""
        definitions = list(definitions)
        if os.path.exists(path) and os.path.getsize(path) > 0:
            store = replay_journal(path, definitions, clock=clock)
        else:
            store = cls(definitions, clock=clock)
        store._journal_path = path
        return store

    def definition(self, process_id: str) -> ProcessDefinition:
        try:
            return self._definitions[process_id]
        except KeyError:
            raise ProcessError(f"unknown process {process_id!r}") from None

    @property
    def process_ids(self) -> List[str]:
        return sorted(self._definitions)

    # -- mutations ---------------------------------------------------------------

    def submit(self, process_id: str, subject: str, form: Dict[str, Any],
               actor_role: str = "Employee") -> ProcessInstance:
        defn = self.definition(process_id)
        with self._lock:
            missing = [f.field_id for f in defn.form_fields
                       if f.required and not form.get(f.field_id)]
            if missing:
                raise SubmissionError(missing)
            self._instance_seq += 1
            instance_id = f"{process_id}-{self._instance_seq}"
            ts = self._clock()
            instance = ProcessInstance(
                instance_id=instance_id,
                process_id=process_id,
                subject=subject,
                state=defn.initial_state,
                form=dict(form),
                history=((ts, actor_role, "submit", None, defn.initial_state),),
            )
            self._instances[instance_id] = instance
            self._commit_event(instance_id, EventKind.SUBMITTED, {
                "processId": process_id,
                "subject": subject,
                "form": dict(form),
                "actorRole": actor_role,
            })
            return instance

    def transition(self, instance_id: str, action: str, actor_role: str) -> ProcessInstance:
        with self._lock:
            instance = self._instances.get(instance_id)
            if instance is None:
                raise UnknownInstance(f"no instance {instance_id!r}")
            defn = self.definition(instance.process_id)
            if instance.state in defn.terminal_states:
                raise IllegalTransition(
                    f"{instance_id} is already {instance.state}; no further actions")
            legal_actions = {t.action for t in defn.transitions
                             if t.from_state == instance.state}
            if action not in legal_actions:
                raise IllegalTransition(
                    f"action {action!r} is not available in state {instance.state}")
            t = defn.find_transition(instance.state, action, actor_role)
            if t is None:
                raise AuthorizationError(
                    f"role {actor_role} may not {action} an instance in {instance.state}")
            ts = self._clock()
            updated = replace(
                instance,
                state=t.to_state,
                history=instance.history + ((ts, actor_role, action,
                                             t.from_state, t.to_state),),
            )
            self._instances[instance_id] = updated
            self._commit_event(instance_id, defn.event_kind_for(t.from_state, action), {
                "processId": instance.process_id,
                "subject": instance.subject,
                "action": action,
                "actorRole": actor_role,
                "from": t.from_state,
                "to": t.to_state,
            })
            return updated

    def _commit_event(self, instance_id: str, kind: EventKind,
                      payload: Dict[str, Any]) -> ProcessEvent:
        self._event_seq += 1
        event = ProcessEvent(event_id=self._event_seq, instance_id=instance_id,
                             event_kind=kind, payload=payload)
        self._events.append(event)
        if self._journal_path:
            _journal_append(self._journal_path, event)
        return event

    # -- reads -------------------------------------------------------------------

    def get(self, instance_id: str) -> ProcessInstance:
        with self._lock:
            instance = self._instances.get(instance_id)
            if instance is None:
                raise UnknownInstance(f"no instance {instance_id!r}")
            return instance

    def query_instances(self, subject: Optional[str] = None, state: Optional[str] = None,
                        process_id: Optional[str] = None,
                        states: Optional[Iterable[str]] = None) -> List[ProcessInstance]:
        wanted_states = set(states) if states else None
        with self._lock:
            out = []
            for instance in self._instances.values():
                if subject is not None and instance.subject.lower() != subject.lower():
                    continue
                if state is not None and instance.state != state:
                    continue
                if wanted_states is not None and instance.state not in wanted_states:
                    continue
                if process_id is not None and instance.process_id != process_id:
                    continue
                out.append(instance)
            out.sort(key=lambda i: i.instance_id)
            return out

    def events_since(self, since_event_id: int) -> List[ProcessEvent]:
        with self._lock:
            return [e for e in self._events if e.event_id > since_event_id]

    def subscribe(self, since_event_id: int = 0) -> Subscription:
        if since_event_id < 0:
            raise ProcessError("since_event_id must be >= 0")
        return Subscription(self, since_event_id)

    @property
    def last_event_id(self) -> int:
        with self._lock:
            return self._event_seq

    def snapshot(self) -> dict:
        """Deep copy of all observable state, for purity checks."""
        with self._lock:
            return {
                "instances": copy.deepcopy(self._instances),
                "events": list(self._events),
                "instance_seq": self._instance_seq,
                "event_seq": self._event_seq,
            }


def verify_history(store: ProcessStore, instance: ProcessInstance) -> bool:
    """Replay the instance's history through its definition; True when legal."""
    defn = store.definition(instance.process_id)
    state: Optional[str] = None
    for ts, role, action, from_state, to_state in instance.history:
        if action == "submit":
            if state is not None or to_state != defn.initial_state:
                return False
            state = to_state
            continue
        if state != from_state:
            return False
        t = defn.find_transition(state, action, role)
        if t is None or t.to_state != to_state:
            return False
        state = to_state
    return state == instance.state


# -- journal ----------------------------------------------------------------------

def _event_to_doc(event: ProcessEvent) -> dict:
    return {
        "eventId": event.event_id,
        "instanceId": event.instance_id,
        "kind": event.event_kind.value,
        "payload": event.payload,
    }


def _journal_append(path: str, event: ProcessEvent) -> None:
    body = json.dumps(_event_to_doc(event), sort_keys=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(f"{len(body.encode('utf-8'))} {body}\n")


def read_journal(path: str) -> List[dict]:
    """Parse length-prefixed journal records, skipping a torn final line."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                prefix, body = line.split(" ", 1)
                if int(prefix) != len(body.encode("utf-8")):
                    break
                records.append(json.loads(body))
            except (ValueError, json.JSONDecodeError):
                break
    return records


def replay_journal(path: str, definitions: Iterable[ProcessDefinition],
                   clock=None) -> ProcessStore:
    """Rebuild a store by re-running every journaled command (no journal attached)."""
    store = ProcessStore(definitions, clock=clock)
    id_map: Dict[str, str] = {}
    for record in read_journal(path):
        payload = record["payload"]
        if record["kind"] == EventKind.SUBMITTED.value:
            instance = store.submit(payload["processId"], payload["subject"],
                                    payload["form"], payload.get("actorRole", "Employee"))
            id_map[record["instanceId"]] = instance.instance_id
        else:
            store.transition(id_map.get(record["instanceId"], record["instanceId"]),
                             payload["action"], payload["actorRole"])
    return store
