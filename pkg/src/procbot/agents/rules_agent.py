"""Loan decision recommender driving the rule engine through conversation.

Facts can arrive two ways: asked for one per turn through a slot frame, or
already sitting in shared context under loan.* because the content analyzer
ran earlier in the same turn. Pre-filled facts are never asked again, which
is what makes the single-turn document-to-decision flow work.
"""

from __future__ import annotations

from typing import Any, Dict

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    Context,
    TaxonomyClass,
    Utterance,
)
from ..nlu import (
    Ask,
    Cancelled,
    CompiledModel,
    Complete,
    EntityKind,
    Reask,
    SlotDef,
    SlotFrame,
    open_frame,
    slot_step,
)
from ..rules import Decision, MissingFacts, RuleSet, evaluate_rules, required_facts
from .base import SuiteAgent, fmt_number

FRAME_KEY = "frame"
LOAN_PREFIX = "loan."

ANSWER_CONFIDENCE = 1.0
MISMATCH_CONFIDENCE = 0.4


class RulesAgent(SuiteAgent):
    def __init__(self, model: CompiledModel, ruleset: RuleSet):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="rules",
            display_name="Business Rules",
            taxonomy_class=TaxonomyClass.TASK_EXECUTION,
            world_changing=False,  # recommends; committing is bp-execute's job
            consumes_keys=frozenset({"loan.*"}),
            produces_keys=frozenset({"loan.decision"}),
        )
        self.ruleset = ruleset

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        stored = ctx.scoped(self.agent_id).get(FRAME_KEY)
        if stored:
            return self._continue_frame(SlotFrame.from_value(stored), utterance, ctx)
        nlu = self.classify(utterance.text)
        if nlu.intent_id != "decide_loan" or nlu.confidence == 0:
            return self.pass_reply(nlu)
        return self._start(nlu.confidence, utterance, ctx)

    def _known_facts(self, ctx: Context) -> Dict[str, Any]:
        known = {}
        for key in required_facts(self.ruleset):
            value = ctx.shared.get(LOAN_PREFIX + key)
            if value is not None:
                known[key] = value
        return known

    def _start(self, confidence: float, utterance: Utterance, ctx: Context) -> AgentPreview:
        known = self._known_facts(ctx)
        missing = [k for k in required_facts(self.ruleset) if k not in known]
        if not missing:
            return self._decide(known, confidence, stickiness=0)
        slots = [
            SlotDef(slot_id=key, kind=EntityKind.NUMBER,
                    prompt=self.ruleset.fact_def(key).prompt)
            for key in missing
        ]
        frame = open_frame("loan-decision", slots)
        nlu = self.classify(utterance.text)
        frame, action = slot_step(self.model, frame, nlu, utterance.text)
        if isinstance(action, Complete):
            return self._decide({**known, **action.filled}, confidence, stickiness=0)
        if isinstance(action, Cancelled):
            return self.text_reply("Okay, no decision then.", confidence)
        return self.text_reply(action.prompt, confidence,
                               own={FRAME_KEY: frame.to_value()})

    def _continue_frame(self, frame: SlotFrame, utterance: Utterance,
                        ctx: Context) -> AgentPreview:
        nlu = self.classify(utterance.text)
        frame, action = slot_step(self.model, frame, nlu, utterance.text)
        if isinstance(action, Cancelled):
            return self.text_reply("Okay, I've dropped the loan decision.", 1.0,
                                   stickiness=1, own={FRAME_KEY: None})
        if isinstance(action, Complete):
            facts = {**self._known_facts(ctx), **action.filled}
            return self._decide(facts, ANSWER_CONFIDENCE, stickiness=1,
                                clear_frame=True)
        if isinstance(action, Reask):
            return self.text_reply(action.prompt, MISMATCH_CONFIDENCE, stickiness=1,
                                   own={FRAME_KEY: frame.to_value()})
        assert isinstance(action, Ask)
        return self.text_reply(action.prompt, ANSWER_CONFIDENCE, stickiness=1,
                               own={FRAME_KEY: frame.to_value()})

    def _decide(self, facts: Dict[str, Any], confidence: float, stickiness: int,
                clear_frame: bool = False) -> AgentPreview:
        outcome = evaluate_rules(self.ruleset, facts)
        own = {FRAME_KEY: None} if clear_frame else None
        if isinstance(outcome, MissingFacts):
            keys = ", ".join(outcome.keys)
            return self.text_reply(
                f"I still need: {keys}.", confidence, stickiness=stickiness, own=own)
        assert isinstance(outcome, Decision)
        summary = "; ".join(f"{k.replace('_', ' ')} {fmt_number(v)}"
                            for k, v in facts.items())
        text = (f"Recommendation: {outcome.outcome.value}. "
                f"Based on {summary}. Reason: {outcome.rationale}.")
        shared = {LOAN_PREFIX + k: v for k, v in facts.items()}
        shared["loan.decision"] = outcome.outcome.value
        return self.text_reply(text, confidence, stickiness=stickiness,
                               shared=shared, own=own)
