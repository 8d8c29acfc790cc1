"""Task execution agent: submits travel requests and commits approve/reject
decisions on live process instances, honoring the speaker's role."""

from __future__ import annotations

from typing import List, Optional

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    AgentResult,
    Context,
    SpeakerRole,
    TaxonomyClass,
    Utterance,
)
from ..nlu import CompiledModel, NluResult
from ..process import (
    AuthorizationError,
    ProcessError,
    ProcessInstance,
    ProcessStore,
    SubmissionError,
)
from .base import Profile, SuiteAgent, profile_for_role

TRAVEL_PROCESS = "travel"


class BpExecuteAgent(SuiteAgent):
    """World-changing agent; previews describe what execution will do."""

    def __init__(self, model: CompiledModel, store: ProcessStore,
                 profiles: List[Profile]):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="bp-execute",
            display_name="BP Execute",
            taxonomy_class=TaxonomyClass.TASK_EXECUTION,
            world_changing=True,
        )
        self.store = store
        self.profiles = profiles

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        return self._handle(utterance, ctx, commit=False)

    def execute(self, utterance: Utterance, ctx: Context) -> AgentResult:
        return self._handle(utterance, ctx, commit=True)

    def _handle(self, utterance: Utterance, ctx: Context, commit: bool) -> AgentPreview:
        nlu = self.classify(utterance.text)
        if nlu.intent_id == "submit_travel":
            return self._submit(nlu, utterance, commit)
        if nlu.intent_id in ("approve_request", "reject_request"):
            action = "approve" if nlu.intent_id == "approve_request" else "reject"
            return self._decide(nlu, utterance, action, commit)
        return self.pass_reply(nlu)

    # -- submit -----------------------------------------------------------------

    def _submit(self, nlu: NluResult, utterance: Utterance, commit: bool) -> AgentPreview:
        destination = nlu.entities.get("destination")
        if destination is None:
            return self.text_reply(
                "Where should the travel request go? I know destinations like "
                "headquarters, New York, or Boston.", nlu.confidence)
        profile = profile_for_role(self.profiles, utterance.speaker_role) \
            or profile_for_role(self.profiles, SpeakerRole.EMPLOYEE)
        if profile is None:
            return self.text_reply("I have no traveler profile to submit for.",
                                   nlu.confidence)
        text = (f"{profile.name}'s travel request to {destination} has been "
                f"submitted and is awaiting manager approval.")
        if commit:
            try:
                self.store.submit(
                    TRAVEL_PROCESS, profile.name,
                    {
                        "destination": destination,
                        "event": profile.default_event,
                        "estimated_cost": profile.default_budget,
                    },
                    actor_role=utterance.speaker_role.value,
                )
            except SubmissionError as exc:
                return self.text_reply(
                    f"I couldn't submit the request: {exc}.", nlu.confidence)
        return self.text_reply(text, nlu.confidence)

    # -- approve / reject ---------------------------------------------------------

    def _decide(self, nlu: NluResult, utterance: Utterance, action: str,
                commit: bool) -> AgentPreview:
        person = nlu.entities.get("person")
        if person is None:
            return self.text_reply(
                "Whose request do you mean? Give me a full name.", nlu.confidence)
        role = utterance.speaker_role
        target = self._actionable_instance(person, action, role.value)
        if target is None:
            pending = self._pending_instances(person)
            if not pending:
                return self.text_reply(
                    f"There is no pending application found for {person}.",
                    nlu.confidence)
            states = ", ".join(sorted({i.state for i in pending}))
            return self.text_reply(
                f"As {role.value} you can't {action} {person}'s request right now "
                f"(state: {states}).", nlu.confidence)
        verb = "approved" if action == "approve" else "rejected"
        text = f"{person}'s application has been {verb}"
        defn = self.store.definition(target.process_id)
        t = defn.find_transition(target.state, action, role.value)
        if action == "approve" and t is not None and t.to_state not in defn.terminal_states:
            text += " and forwarded to the director for the final decision"
        text += "."
        if commit:
            try:
                self.store.transition(target.instance_id, action, role.value)
            except (AuthorizationError, ProcessError) as exc:
                return self.text_reply(f"That didn't work: {exc}.", nlu.confidence)
        return self.text_reply(text, nlu.confidence)

    def _pending_instances(self, subject: str) -> List[ProcessInstance]:
        out = []
        for instance in self.store.query_instances(subject=subject):
            defn = self.store.definition(instance.process_id)
            if instance.state not in defn.terminal_states:
                out.append(instance)
        return out

    def _actionable_instance(self, subject: str, action: str,
                             role: str) -> Optional[ProcessInstance]:
        for instance in self._pending_instances(subject):
            defn = self.store.definition(instance.process_id)
            if defn.find_transition(instance.state, action, role) is not None:
                return instance
        return None
