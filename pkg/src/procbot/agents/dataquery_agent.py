"""Conversational front end for the tabular query engine."""

from __future__ import annotations

from typing import Dict, Tuple

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    Context,
    ResponsePayload,
    TaxonomyClass,
    Utterance,
)
from ..dataquery import (
    AggFn,
    ParseError,
    QueryAst,
    QueryResult,
    Table,
    TableSchema,
    evaluate,
    parse_query,
    truncate_result,
)
from ..nlu import CompiledModel
from .base import LAST_RESULT_KEY, SuiteAgent, fmt_number

DISPLAY_ROWS = 20
CLARIFY_CONFIDENCE = 0.55

_AGG_WORDS = {
    AggFn.AVG: "average",
    AggFn.SUM: "total",
    AggFn.MIN: "minimum",
    AggFn.MAX: "maximum",
    AggFn.COUNT: "count",
}


class DataQueryAgent(SuiteAgent):
    """Parses English data questions, runs them, and shares the result table.

    A successful parse means the utterance is fully inside the query grammar,
    which is this agent's whole understanding, so confidence is 1.0. A failed
    parse that still started like a query turns into a clarification question
    and the agent stays sticky for the follow-up answer.
    """

    def __init__(self, model: CompiledModel,
                 tables: Dict[str, Tuple[Table, TableSchema]]):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="data-query",
            display_name="Data Query",
            taxonomy_class=TaxonomyClass.INFORMATION_RETRIEVAL,
            world_changing=False,
            produces_keys=frozenset({LAST_RESULT_KEY}),
        )
        self._tables = dict(tables)

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        sticky = 1 if ctx.scoped(self.agent_id).get("pendingClarification") else 0
        parsed = self._try_parse(utterance.text)
        if isinstance(parsed, tuple):
            ast, table, schema = parsed
            result = evaluate(ast, table)
            shown = truncate_result(result, DISPLAY_ROWS)
            summary = self._summarize(ast, schema, result, shown)
            payload = ResponsePayload.composite([
                ResponsePayload.of_text(summary),
                ResponsePayload.of_table(shown.to_payload()),
            ])
            # Downstream agents (plot, export) get the full result, not the
            # 20-row display slice.
            return self.reply(
                payload, 1.0, stickiness=sticky,
                shared={LAST_RESULT_KEY: result.to_payload()},
                own={"pendingClarification": None},
            )
        error = parsed
        if error.valid_prefix:
            text = (f"I got as far as \"{error.valid_prefix}\" but could not make "
                    f"sense of \"{error.offending}\". Could you rephrase the rest?")
            return self.text_reply(text, CLARIFY_CONFIDENCE, stickiness=sticky,
                                   own={"pendingClarification": True})
        if sticky:
            # Mid-clarification and the retry still is not a query: let go.
            nlu = self.classify(utterance.text)
            return self.text_reply(
                "Never mind then; ask me about the data any time.",
                max(nlu.confidence, 0.3), stickiness=1,
                own={"pendingClarification": None})
        nlu = self.classify(utterance.text)
        return self.pass_reply(nlu)

    def _try_parse(self, text: str):
        best_error: ParseError = ParseError("no tables bound")
        best_prefix = -1
        for table, schema in self._tables.values():
            try:
                return parse_query(text, schema), table, schema
            except ParseError as exc:
                if len(exc.valid_prefix) > best_prefix:
                    best_error = exc
                    best_prefix = len(exc.valid_prefix)
        return best_error

    def _summarize(self, ast: QueryAst, schema: TableSchema,
                   full: QueryResult, shown: QueryResult) -> str:
        if ast.aggregate is not None and ast.group_by is not None and ast.top_k:
            fn, col = ast.aggregate
            word = _AGG_WORDS[fn]
            phrase = schema.canonical_column_phrase(col) if col else "records"
            ranked = ", ".join(
                f"{i + 1}) {fmt_number(value)} for {key}"
                for i, (key, value) in enumerate(full.rows)
            )
            return f"These are the {word} {phrase} values: {ranked}"
        if ast.aggregate is not None and ast.group_by is None:
            fn, col = ast.aggregate
            if not full.rows:
                return "No records matched."
            value = full.rows[0][0]
            if fn is AggFn.COUNT:
                return f"Total records found are {fmt_number(value)}."
            word = _AGG_WORDS[fn]
            phrase = schema.canonical_column_phrase(col)
            return f"The {word} {phrase} is {fmt_number(value)}."
        if ast.aggregate is not None:
            return f"Here is the breakdown ({full.total_count} groups)."
        text = f"Total records found are {full.total_count}."
        if shown.truncated:
            text += f" Showing the first {len(shown.rows)}."
        return text
