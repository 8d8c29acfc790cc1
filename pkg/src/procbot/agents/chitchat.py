"""Small-talk and help agent."""

from __future__ import annotations

from typing import Callable, List, Optional

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    Context,
    TaxonomyClass,
    Utterance,
)
from ..nlu import CompiledModel
from .base import SuiteAgent

_CANNED = {
    "greeting": "Hi there",
    "thanks": "You're welcome!",
    "goodbye": "Goodbye! Come back any time.",
}


class ChitChatAgent(SuiteAgent):
    """Dialog agent: canned replies for greetings plus a capability listing."""

    def __init__(self, model: CompiledModel,
                 roster_provider: Optional[Callable[[], List[AgentDescriptor]]] = None):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="chit-chat",
            display_name="Chit-Chat",
            taxonomy_class=TaxonomyClass.DIALOG,
            world_changing=False,
        )
        self._roster_provider = roster_provider

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        nlu = self.classify(utterance.text)
        if nlu.intent_id in _CANNED:
            return self.text_reply(_CANNED[nlu.intent_id], nlu.confidence)
        if nlu.intent_id == "help":
            return self.text_reply(self._capabilities(), nlu.confidence)
        return self.pass_reply(nlu)

    def _capabilities(self) -> str:
        if not self._roster_provider:
            return "I can chat, and the rest of the team handles the real work."
        lines = ["Here is what the team can do:"]
        for d in self._roster_provider():
            lines.append(f"- {d.display_name} ({d.taxonomy_class.value})")
        return "\n".join(lines)
