"""Shared plumbing for the agent suite."""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional

from ..contract import Agent, ResponsePayload, SpeakerRole
from ..nlu import CompiledModel, NluResult, classify

SESSION_KEY = "session_id"
ATTACHMENTS_KEY = "attachments"
LAST_RESULT_KEY = "last_result"

NOT_UNDERSTOOD = "I don't think I can help with that."


class DocumentStore:
    """Named UTF-8 text documents (the stand-in for an uploaded-file store)."""

    def __init__(self, documents: Optional[Dict[str, str]] = None):
        self._docs = dict(documents or {})
        self._lock = threading.Lock()

    @classmethod
    def from_dir(cls, path: str) -> "DocumentStore":
        """Load every file in a directory, addressed by file name."""
        docs = {}
        for name in sorted(os.listdir(path)):
            full = os.path.join(path, name)
            if os.path.isfile(full):
                with open(full, "r", encoding="utf-8") as fh:
                    docs[name] = fh.read()
        return cls(docs)

    def add(self, name: str, text: str) -> None:
        with self._lock:
            self._docs[name] = text

    def get(self, name: str) -> Optional[str]:
        with self._lock:
            return self._docs.get(name)

    def names(self) -> List[str]:
        with self._lock:
            return sorted(self._docs)

    def snapshot(self) -> Dict[str, str]:
        with self._lock:
            return dict(self._docs)


@dataclass(frozen=True)
class Profile:
    name: str
    role: str
    department: str
    default_event: str
    default_budget: float

    @classmethod
    def from_doc(cls, doc: dict) -> "Profile":
        return cls(name=doc["name"], role=doc["role"], department=doc["department"],
                   default_event=doc["defaultEvent"],
                   default_budget=float(doc["defaultBudget"]))


def profile_for_role(profiles: List[Profile], role: SpeakerRole) -> Optional[Profile]:
    for p in profiles:
        if p.role == role.value:
            return p
    return None


def profile_for_name(profiles: List[Profile], name: str) -> Optional[Profile]:
    for p in profiles:
        if p.name.lower() == name.lower():
            return p
    return None


class SuiteAgent(Agent):
    """Base for shipped agents: a compiled NLU model plus reply helpers."""

    def __init__(self, model: CompiledModel):
        self.model = model

    def classify(self, text: str) -> NluResult:
        return classify(self.model, text)

    def text_reply(self, text: str, confidence: float, stickiness: int = 0,
                   shared: Optional[dict] = None, own: Optional[dict] = None):
        return self.reply(ResponsePayload.of_text(text), confidence,
                          stickiness=stickiness, shared=shared, own=own)

    def pass_reply(self, nlu: NluResult):
        """Low-confidence answer for out-of-domain utterances."""
        return self.text_reply(NOT_UNDERSTOOD, min(nlu.confidence, 0.25))


def fmt_number(value) -> str:
    if isinstance(value, float) and not value.is_integer():
        return f"{value:,.2f}"
    return f"{value:,.0f}"
