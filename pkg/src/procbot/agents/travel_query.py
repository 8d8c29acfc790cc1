"""Information retrieval over live travel process instances."""

from __future__ import annotations

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    Context,
    ResponsePayload,
    TablePayload,
    TaxonomyClass,
    Utterance,
)
from ..nlu import CompiledModel
from ..process import ProcessStore
from .base import LAST_RESULT_KEY, SuiteAgent

TRAVEL_PROCESS = "travel"
PENDING_STATES = ("PendingManager", "PendingDirector")


def _instances_payload(instances) -> TablePayload:
    return TablePayload.build(
        [("subject", "string"), ("destination", "string"), ("event", "string"),
         ("state", "string")],
        [
            (i.subject, str(i.form.get("destination", "")),
             str(i.form.get("event", "")), i.state)
            for i in instances
        ],
    )


class TravelQueryAgent(SuiteAgent):
    def __init__(self, model: CompiledModel, store: ProcessStore):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="travel-query",
            display_name="Travel Query",
            taxonomy_class=TaxonomyClass.INFORMATION_RETRIEVAL,
            world_changing=False,
            produces_keys=frozenset({LAST_RESULT_KEY}),
        )
        self.store = store

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        nlu = self.classify(utterance.text)
        if nlu.intent_id == "count_requests":
            person = nlu.entities.get("person")
            if person is None:
                return self.text_reply("Whose requests should I count?",
                                       nlu.confidence)
            instances = self.store.query_instances(subject=person,
                                                   process_id=TRAVEL_PROCESS)
            n = len(instances)
            noun = "application" if n == 1 else "applications"
            return self.reply(
                ResponsePayload.of_text(f"{person} has {n} {noun}"),
                nlu.confidence,
                shared={LAST_RESULT_KEY: _instances_payload(instances)},
            )
        if nlu.intent_id == "list_requests":
            states = PENDING_STATES if "pending" in utterance.text.lower() else None
            instances = self.store.query_instances(process_id=TRAVEL_PROCESS,
                                                   states=states)
            payload = _instances_payload(instances)
            label = "pending travel requests" if states else "travel requests"
            return self.reply(
                ResponsePayload.composite([
                    ResponsePayload.of_text(f"There are {len(instances)} {label}."),
                    ResponsePayload.of_table(payload),
                ]),
                nlu.confidence,
                shared={LAST_RESULT_KEY: payload},
            )
        return self.pass_reply(nlu)
