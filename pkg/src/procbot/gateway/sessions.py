"""Per-session conversation state: the one place context lives between turns.

The orchestrator is stateless, so the session store owns each conversation's
context, serializes turns within a session, and holds the notification queue
the UI polls. Everything the REPL, scenario runner, and HTTP API do goes
through this class; they cannot diverge.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..agents.base import ATTACHMENTS_KEY, SESSION_KEY
from ..agents.alerts import Notification
from ..contract import (
    Context,
    ContractViolation,
    ResponsePayload,
    SpeakerRole,
    Utterance,
    payload_to_wire,
)
from ..orchestrator import TurnResult, TurnTrace, run_turn
from ..runtime import Stack


logger = logging.getLogger(__name__)


class UnknownSession(Exception):
    pass


@dataclass
class _Session:
    session_id: str
    role: SpeakerRole
    context: Context
    created_at: int
    next_turn_index: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    traces: List[TurnTrace] = field(default_factory=list)


@dataclass(frozen=True)
class TurnView:
    """What a client sees of one turn."""

    session_id: str
    turn_index: int
    responses: Tuple[Tuple[str, ResponsePayload], ...]
    selected: Tuple[str, ...]
    fallback_used: bool
    timings: Dict[str, Dict[str, float]]

    def to_wire(self) -> dict:
        return {
            "sessionId": self.session_id,
            "turnIndex": self.turn_index,
            "responses": [
                {"agentId": agent_id, "payload": payload_to_wire(payload)}
                for agent_id, payload in self.responses
            ],
            "selected": list(self.selected),
            "fallbackUsed": self.fallback_used,
            "timings": self.timings,
        }


class SessionManager:
    def __init__(self, stack: Stack):
        self.stack = stack
        self._sessions: Dict[str, _Session] = {}
        self._lock = threading.Lock()
        self._creation_seq = 0

    def create_session(self, role: str | SpeakerRole) -> str:
        parsed = role if isinstance(role, SpeakerRole) else SpeakerRole.parse(role)
        with self._lock:
            self._creation_seq += 1
            session_id = f"s-{secrets.token_urlsafe(12)}"
            context = Context(shared={SESSION_KEY: session_id})
            self._sessions[session_id] = _Session(
                session_id=session_id,
                role=parsed,
                context=context,
                created_at=self._creation_seq,
            )
            return session_id

    def _get(self, session_id: str) -> _Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def role_of(self, session_id: str) -> SpeakerRole:
        return self._get(session_id).role

    def context_of(self, session_id: str) -> Context:
        return self._get(session_id).context

    def traces_of(self, session_id: str) -> List[TurnTrace]:
        return list(self._get(session_id).traces)

    def post_message(self, session_id: str, text: str,
                     attachments: Optional[List[Tuple[str, str]]] = None,
                     role_override: Optional[SpeakerRole] = None) -> TurnView:
        """Run one turn for the session; turns within a session serialize."""
        if not text or not text.strip():
            raise ContractViolation("message text is empty")
        session = self._get(session_id)
        with session.lock:
            context = session.context
            if attachments:
                names = []
                for name, body in attachments:
                    self.stack.docstore.add(name, body)
                    names.append(name)
                shared = dict(context.shared)
                shared[ATTACHMENTS_KEY] = names
                context = Context(shared=shared, agent_scoped=context.agent_scoped,
                                  turn_log=context.turn_log)
            utterance = Utterance(
                text=text,
                speaker_role=role_override or session.role,
                turn_index=session.next_turn_index,
            )

            def record_trace(trace: TurnTrace) -> None:
                session.traces.append(trace)
                if logger.isEnabledFor(logging.DEBUG):
                    logger.debug("turn %s %s", session_id,
                                 json.dumps(trace.to_doc(), sort_keys=True))

            result: TurnResult = run_turn(
                utterance, context, self.stack.registry, self.stack.config,
                trace_sink=record_trace)
            session.context = result.context_after
            session.next_turn_index += 1
        # New process events may satisfy alert rules; deliver before returning.
        self.stack.matcher.poll()
        return TurnView(
            session_id=session_id,
            turn_index=utterance.turn_index,
            responses=result.responses,
            selected=result.selected,
            fallback_used=result.fallback_used,
            timings=result.timings,
        )

    def poll_notifications(self, session_id: str,
                           since: int = 0) -> List[Tuple[int, Notification]]:
        self._get(session_id)  # 404 on unknown sessions even with empty queues
        self.stack.matcher.poll()
        return self.stack.hub.poll(session_id, since)

    def session_ids(self) -> List[str]:
        with self._lock:
            return sorted(self._sessions)
