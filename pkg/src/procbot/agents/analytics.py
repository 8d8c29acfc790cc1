"""Data analytics agents: charting and CSV export of the last query result.

Both consume the shared last_result table that information-retrieval agents
write, so the sequencer orders them after any producer selected in the same
turn. When there is nothing to work with they still answer, at half their
understanding confidence, so a better-suited agent can win the turn.
"""

from __future__ import annotations

from collections import Counter
from typing import Optional

from ..contract import (
    AgentDescriptor,
    AgentPreview,
    ChartSpec,
    Context,
    ResponsePayload,
    TablePayload,
    TaxonomyClass,
    Utterance,
)
from ..dataquery.tables import payload_to_csv_bytes
from ..nlu import CompiledModel
from .base import LAST_RESULT_KEY, SuiteAgent

NOTHING_YET = ("There is no query result to work with yet. "
               "Ask a data question first.")
BIN_COUNT = 8


def _numeric_bins(values, bins: int = BIN_COUNT):
    lo, hi = min(values), max(values)
    if lo == hi:
        return [f"{lo:g}"], [len(values)]
    width = (hi - lo) / bins
    counts = [0] * bins
    for v in values:
        idx = min(int((v - lo) / width), bins - 1)
        counts[idx] += 1
    labels = [f"{lo + i * width:,.0f}-{lo + (i + 1) * width:,.0f}" for i in range(bins)]
    return labels, counts


def build_chart(kind: str, table: TablePayload, column: str) -> Optional[ChartSpec]:
    """Histogram for numeric columns, value counts for everything else."""
    names = table.column_names
    if column not in names:
        return None
    idx = names.index(column)
    col_type = table.columns[idx][1]
    values = [row[idx] for row in table.rows]
    if not values:
        return ChartSpec(kind=kind, title=f"{column} (no data)", x_label=column,
                         y_label="count", categories=(), values=())
    if col_type == "number":
        labels, counts = _numeric_bins(values)
        return ChartSpec(kind=kind, title=f"Records per {column}", x_label=column,
                         y_label="count", categories=tuple(labels), values=tuple(counts))
    counted = Counter(values)
    cats = sorted(counted)
    return ChartSpec(kind=kind, title=f"Records per {column}", x_label=column,
                     y_label="count", categories=tuple(cats),
                     values=tuple(counted[c] for c in cats))


class VisualizationAgent(SuiteAgent):
    def __init__(self, model: CompiledModel):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="visualization",
            display_name="Visualization",
            taxonomy_class=TaxonomyClass.DATA_ANALYTICS,
            world_changing=False,
            consumes_keys=frozenset({LAST_RESULT_KEY}),
        )

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        nlu = self.classify(utterance.text)
        if nlu.intent_id != "plot" or nlu.confidence == 0:
            return self.pass_reply(nlu)
        table = ctx.shared.get(LAST_RESULT_KEY)
        if not isinstance(table, TablePayload):
            return self.text_reply(NOTHING_YET, nlu.confidence * 0.5)
        kind = nlu.entities.get("chart_type", "bar")
        column = nlu.entities.get("column")
        if column is None:
            numeric = [c for c, t in table.columns if t == "number"]
            column = numeric[0] if numeric else table.column_names[0]
        chart = build_chart(kind, table, column)
        if chart is None:
            return self.text_reply(
                f"The current result has no column like {column!r}; it has "
                f"{', '.join(table.column_names)}.", nlu.confidence * 0.5)
        return self.reply(ResponsePayload.composite([
            ResponsePayload.of_text(f"Here is the {kind} chart per {column}."),
            ResponsePayload.of_chart(chart),
        ]), nlu.confidence)


class DataExportAgent(SuiteAgent):
    def __init__(self, model: CompiledModel):
        super().__init__(model)
        self.descriptor = AgentDescriptor(
            agent_id="data-export",
            display_name="Data Export",
            taxonomy_class=TaxonomyClass.DATA_ANALYTICS,
            world_changing=False,
            consumes_keys=frozenset({LAST_RESULT_KEY}),
        )

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        nlu = self.classify(utterance.text)
        if nlu.intent_id != "export" or nlu.confidence == 0:
            return self.pass_reply(nlu)
        table = ctx.shared.get(LAST_RESULT_KEY)
        if not isinstance(table, TablePayload):
            return self.text_reply(NOTHING_YET, nlu.confidence * 0.5)
        data = payload_to_csv_bytes(table)
        return self.reply(ResponsePayload.composite([
            ResponsePayload.of_text("The result for your query is attached."),
            ResponsePayload.of_file("result.csv", "text/csv", data),
        ]), nlu.confidence)
