"""Alert rules, the event matcher, and per-session notification queues.

Delivery is exactly once per (alert, event): an alert covers precisely the
events committed while it was active, tracked with event-log watermarks, and
the matcher consumes each event from its subscription a single time.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    AgentResult,
    Context,
    TaxonomyClass,
    Utterance,
)
from ..nlu import CompiledModel, NluResult, extract_entities
from ..process import EventKind, ProcessEvent, ProcessStore
from .base import SESSION_KEY, SuiteAgent

DEFAULT_OWNER = "local"

_KIND_TEXT = {
    EventKind.SUBMITTED: "{subject} submitted a travel request to {destination}",
    EventKind.MANAGER_APPROVED: "{subject}'s request was approved by the manager",
    EventKind.MANAGER_REJECTED: "{subject}'s request was rejected by the manager",
    EventKind.DIRECTOR_APPROVED: "{subject}'s request received final approval",
    EventKind.DIRECTOR_REJECTED: "{subject}'s request was rejected by the director",
    EventKind.STATE_CHANGED: "{subject}'s case moved from {from_state} to {to_state}",
}


@dataclass(frozen=True)
class AlertRule:
    alert_id: int
    owner_session: str
    event_kind: EventKind
    subject_filter: Optional[str]
    delivery_text: str
    active: bool
    created_watermark: int  # event-log position when created
    deactivated_watermark: Optional[int] = None

    def covers(self, event: ProcessEvent) -> bool:
        """Active at the event's commit, independent of when matching runs."""
        if event.event_id <= self.created_watermark:
            return False
        if self.deactivated_watermark is not None \
                and event.event_id > self.deactivated_watermark:
            return False
        return True

    def matches(self, event: ProcessEvent) -> bool:
        if event.event_kind is not self.event_kind:
            return False
        if self.subject_filter is not None:
            subject = str(event.payload.get("subject", ""))
            if subject.lower() != self.subject_filter.lower():
                return False
        return True


@dataclass(frozen=True)
class Notification:
    alert_id: int
    event: ProcessEvent
    rendered_text: str
    delivered: bool = False


def render_event(event: ProcessEvent) -> str:
    payload = event.payload
    template = _KIND_TEXT[event.event_kind]
    return template.format(
        subject=payload.get("subject", "someone"),
        destination=payload.get("form", {}).get("destination", "somewhere"),
        from_state=payload.get("from", "?"),
        to_state=payload.get("to", "?"),
    )


def match_events(rules: List[AlertRule], events: List[ProcessEvent]) -> List[Notification]:
    """All (rule, event) notifications, exactly one per matching pair."""
    out: List[Notification] = []
    for event in events:
        for rule in rules:
            if rule.covers(event) and rule.matches(event):
                text = rule.delivery_text.format(event_text=render_event(event))
                out.append(Notification(alert_id=rule.alert_id, event=event,
                                        rendered_text=text))
    return out


class AlertRegistry:
    """Per-session alert rules; mutation happens only in execute phases."""

    def __init__(self) -> None:
        self._rules: List[AlertRule] = []
        self._lock = threading.Lock()

    def next_id(self, owner_session: str) -> int:
        with self._lock:
            return sum(1 for r in self._rules if r.owner_session == owner_session) + 1

    def create(self, owner_session: str, event_kind: EventKind,
               subject_filter: Optional[str], watermark: int,
               delivery_text: str = "Heads up: {event_text}.") -> AlertRule:
        with self._lock:
            alert_id = sum(1 for r in self._rules
                           if r.owner_session == owner_session) + 1
            rule = AlertRule(
                alert_id=alert_id,
                owner_session=owner_session,
                event_kind=event_kind,
                subject_filter=subject_filter,
                delivery_text=delivery_text,
                active=True,
                created_watermark=watermark,
            )
            self._rules.append(rule)
            return rule

    def deactivate(self, owner_session: str, alert_id: int, watermark: int) -> bool:
        with self._lock:
            for i, rule in enumerate(self._rules):
                if rule.owner_session == owner_session \
                        and rule.alert_id == alert_id and rule.active:
                    self._rules[i] = replace(rule, active=False,
                                             deactivated_watermark=watermark)
                    return True
            return False

    def rules(self, owner_session: Optional[str] = None) -> List[AlertRule]:
        with self._lock:
            if owner_session is None:
                return list(self._rules)
            return [r for r in self._rules if r.owner_session == owner_session]

    def active_rules(self, owner_session: str) -> List[AlertRule]:
        return [r for r in self.rules(owner_session) if r.active]

    def snapshot(self) -> Tuple[AlertRule, ...]:
        with self._lock:
            return tuple(self._rules)


@dataclass
class _QueueEntry:
    seq: int
    notification: Notification
    delivered: bool = False


class NotificationHub:
    """Ordered per-session notification queues, drained by polling."""

    def __init__(self) -> None:
        self._queues: Dict[str, List[_QueueEntry]] = {}
        self._lock = threading.Lock()

    def deliver(self, session_id: str, notification: Notification) -> int:
        with self._lock:
            queue = self._queues.setdefault(session_id, [])
            seq = len(queue) + 1
            queue.append(_QueueEntry(seq=seq, notification=notification))
            return seq

    def poll(self, session_id: str, since: int = 0) -> List[Tuple[int, Notification]]:
        """Undelivered notifications after `since`, marked delivered."""
        with self._lock:
            queue = self._queues.get(session_id, [])
            out = []
            for entry in queue:
                if entry.seq > since and not entry.delivered:
                    entry.delivered = True
                    entry.notification = replace(entry.notification, delivered=True)
                    out.append((entry.seq, entry.notification))
            return out

    def pending_count(self, session_id: str) -> int:
        with self._lock:
            return sum(1 for e in self._queues.get(session_id, []) if not e.delivered)

    def snapshot(self) -> Dict[str, Tuple]:
        with self._lock:
            return {sid: tuple((e.seq, e.notification, e.delivered) for e in q)
                    for sid, q in self._queues.items()}


class AlertMatcher:
    """Consumes the process event stream and fans notifications out to owners.

    Runs synchronously via poll() after turns (deterministic) and optionally
    as a background thread for the long-running service.
    """

    def __init__(self, store: ProcessStore, registry: AlertRegistry,
                 hub: NotificationHub):
        self._subscription = store.subscribe(0)
        self._registry = registry
        self._hub = hub
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()
        self._poll_lock = threading.Lock()

    def poll(self) -> List[Notification]:
        with self._poll_lock:
            events = self._subscription.poll()
            if not events:
                return []
            rules = self._registry.rules()
            delivered = []
            for event in events:
                for rule in rules:
                    if rule.covers(event) and rule.matches(event):
                        text = rule.delivery_text.format(event_text=render_event(event))
                        notification = Notification(alert_id=rule.alert_id,
                                                    event=event, rendered_text=text)
                        self._hub.deliver(rule.owner_session, notification)
                        delivered.append(notification)
            return delivered

    def start_background(self, interval_s: float = 1.0) -> None:
        if self._thread is not None:
            return
        self._stop.clear()

        def loop() -> None:
            while not self._stop.wait(interval_s):
                self.poll()

        self._thread = threading.Thread(target=loop, daemon=True,
                                        name="alert-matcher")
        self._thread.start()

    def stop_background(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2)
            self._thread = None


class AlertsAgent(SuiteAgent):
    """Conversational alert management; registry mutations only on execute."""

    def __init__(self, model: CompiledModel, registry: AlertRegistry,
                 store: ProcessStore):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="alerts",
            display_name="Alerts",
            taxonomy_class=TaxonomyClass.ALERTING,
            world_changing=True,
        )
        self.registry = registry
        self.store = store

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        return self._handle(utterance, ctx, commit=False)

    def execute(self, utterance: Utterance, ctx: Context) -> AgentResult:
        return self._handle(utterance, ctx, commit=True)

    def _handle(self, utterance: Utterance, ctx: Context, commit: bool) -> AgentPreview:
        nlu = self.classify(utterance.text)
        owner = str(ctx.shared.get(SESSION_KEY, DEFAULT_OWNER))
        if nlu.intent_id == "create_alert":
            return self._create(nlu, utterance, owner, commit)
        if nlu.intent_id == "list_alerts":
            return self._list(nlu, owner)
        if nlu.intent_id == "delete_alert":
            return self._delete(nlu, owner, commit)
        return self.pass_reply(nlu)

    def _create(self, nlu: NluResult, utterance: Utterance, owner: str,
                commit: bool) -> AgentPreview:
        kind = _infer_kind(utterance.text)
        # Wildcard patterns match without binding entities; scan for a subject.
        subject = nlu.entities.get("person") \
            or extract_entities(self.model, utterance.text).get("person")
        alert_id = self.registry.next_id(owner)
        description = _describe(kind, subject)
        if commit:
            rule = self.registry.create(owner, kind, subject,
                                        watermark=self.store.last_event_id)
            alert_id = rule.alert_id
        return self.text_reply(
            f"Alert {alert_id} is set: I'll notify you when {description}.",
            nlu.confidence)

    def _list(self, nlu: NluResult, owner: str) -> AgentPreview:
        rules = self.registry.active_rules(owner)
        if not rules:
            return self.text_reply("You have no active alerts.", nlu.confidence)
        lines = [f"You have {len(rules)} active alert(s):"]
        for rule in rules:
            lines.append(f"{rule.alert_id}) when "
                         + _describe(rule.event_kind, rule.subject_filter))
        return self.text_reply("\n".join(lines), nlu.confidence)

    def _delete(self, nlu: NluResult, owner: str, commit: bool) -> AgentPreview:
        number = nlu.entities.get("alert_num")
        if number is None:
            return self.text_reply("Which alert number should I delete?",
                                   nlu.confidence)
        alert_id = int(number)
        exists = any(r.alert_id == alert_id for r in self.registry.active_rules(owner))
        if not exists:
            return self.text_reply(f"There is no active alert {alert_id}.",
                                   nlu.confidence)
        if commit:
            self.registry.deactivate(owner, alert_id,
                                     watermark=self.store.last_event_id)
        return self.text_reply(f"Alert {alert_id} deleted.", nlu.confidence)


def _infer_kind(text: str) -> EventKind:
    lowered = text.lower()
    if "submit" in lowered:
        return EventKind.SUBMITTED
    if "manager" in lowered and "approve" in lowered:
        return EventKind.MANAGER_APPROVED
    if "manager" in lowered and "reject" in lowered:
        return EventKind.MANAGER_REJECTED
    if "reject" in lowered:
        return EventKind.DIRECTOR_REJECTED
    if "approve" in lowered:
        return EventKind.DIRECTOR_APPROVED
    return EventKind.SUBMITTED


def _describe(kind: EventKind, subject: Optional[str]) -> str:
    who = subject or "an employee"
    return {
        EventKind.SUBMITTED: f"{who} submits a travel request",
        EventKind.MANAGER_APPROVED: f"a manager approves {who}'s request",
        EventKind.MANAGER_REJECTED: f"a manager rejects {who}'s request",
        EventKind.DIRECTOR_APPROVED: f"{who}'s request gets final approval",
        EventKind.DIRECTOR_REJECTED: f"a director rejects {who}'s request",
        EventKind.STATE_CHANGED: f"{who}'s case changes state",
    }[kind]
