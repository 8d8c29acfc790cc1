"""Key-value extraction from plain-text documents into shared loan context."""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    Context,
    TaxonomyClass,
    Utterance,
)
from ..nlu import CompiledModel, as_number, normalize, parse_number
from .base import ATTACHMENTS_KEY, DocumentStore, SuiteAgent

# Document field names folded onto canonical loan fact keys.
FIELD_SYNONYMS = {
    "amount": "amount",
    "loan amount": "amount",
    "credit score": "credit_score",
    "score": "credit_score",
    "fico": "credit_score",
    "yearly income": "yearly_income",
    "annual income": "yearly_income",
    "annual salary": "yearly_income",
    "income": "yearly_income",
    "salary": "yearly_income",
    "applicant": "applicant",
    "borrower": "applicant",
    "name": "applicant",
}

UNKNOWN_DOC_CONFIDENCE = 0.5


def parse_key_values(text: str) -> List[Tuple[str, object]]:
    """`Key: value` lines canonicalized through the loan field synonyms."""
    fields: List[Tuple[str, object]] = []
    for line in text.splitlines():
        if ":" not in line:
            continue
        raw_key, raw_value = line.split(":", 1)
        key = FIELD_SYNONYMS.get(normalize(raw_key))
        if key is None:
            continue
        value = raw_value.strip()
        number = parse_number(value.replace(" ", ""))
        fields.append((key, as_number(number) if number is not None else value))
    return fields


class ContentAnalyzerAgent(SuiteAgent):
    def __init__(self, model: CompiledModel, docstore: DocumentStore):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="content-analyzer",
            display_name="Content Analyzer",
            taxonomy_class=TaxonomyClass.INFORMATION_RETRIEVAL,
            world_changing=False,
            produces_keys=frozenset({"loan.*"}),
        )
        self.docstore = docstore

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        nlu = self.classify(utterance.text)
        if nlu.intent_id != "analyze_document" or nlu.confidence == 0:
            return self.pass_reply(nlu)
        doc_name = self._resolve_document(utterance.text, ctx)
        if doc_name is None:
            return self.text_reply(
                "I couldn't find that document. Attach it or name one of: "
                + (", ".join(self.docstore.names()) or "(none stored)"),
                min(nlu.confidence, UNKNOWN_DOC_CONFIDENCE))
        text = self.docstore.get(doc_name) or ""
        fields = parse_key_values(text)
        if not fields:
            return self.text_reply(f"No fields found in {doc_name}.", nlu.confidence)
        shared: Dict[str, object] = {f"loan.{key}": value for key, value in fields}
        listing = "; ".join(f"{key.replace('_', ' ')} = {value}" for key, value in fields)
        return self.text_reply(
            f"Extracted {len(fields)} fields from {doc_name}: {listing}.",
            nlu.confidence, shared=shared)

    def _resolve_document(self, text: str, ctx: Context) -> Optional[str]:
        lowered = text.lower()
        for name in self.docstore.names():
            if name.lower() in lowered:
                return name
        attachments = ctx.shared.get(ATTACHMENTS_KEY)
        if isinstance(attachments, list):
            for name in reversed(attachments):
                if isinstance(name, str) and self.docstore.get(name) is not None:
                    return name
        return None
