"""Query evaluation: filter, group, aggregate, having, order, top-k, project."""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from ..contract import TablePayload
from .queries import AggFn, QueryAst, validate_ast
from .tables import ColumnType, Table

_OPS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "=": operator.eq,
    "!=": operator.ne,
}


@dataclass(frozen=True)
class QueryResult:
    columns: Tuple[Tuple[str, ColumnType], ...]
    rows: Tuple[tuple, ...]
    total_count: int
    truncated: bool

    def to_payload(self) -> TablePayload:
        return TablePayload.build(
            [(c, t.value) for c, t in self.columns],
            [list(r) for r in self.rows],
        )


def _sort_key(value: Any):
    return (0, value) if isinstance(value, (int, float)) else (1, str(value))


def _aggregate(fn: AggFn, values: List[Any], member_count: int) -> Optional[Any]:
    if fn is AggFn.COUNT:
        return member_count
    if not values:
        return None
    if fn is AggFn.SUM:
        return sum(values)
    if fn is AggFn.AVG:
        return sum(values) / len(values)
    if fn is AggFn.MIN:
        return min(values)
    return max(values)


def evaluate(ast: QueryAst, table: Table) -> QueryResult:
    """Evaluate a validated AST; deterministic, ties broken by group key."""
    validate_ast(ast, table)

    filter_idx = [(table.column_index(col), _OPS[cmp], literal)
                  for col, cmp, literal in ast.filters]
    kept = [row for row in table.rows
            if all(op(row[i], literal) for i, op, literal in filter_idx)]

    if ast.aggregate is None:
        return _plain_result(ast, table, kept)

    fn, agg_col = ast.aggregate
    agg_idx = table.column_index(agg_col) if agg_col is not None else None

    if ast.group_by is None:
        values = [row[agg_idx] for row in kept] if agg_idx is not None else []
        agg = _aggregate(fn, values, len(kept))
        passes = agg is not None and all(_OPS[cmp](agg, lit) for cmp, lit in ast.having)
        rows: Tuple[tuple, ...] = ((agg,),) if passes else ()
        name = "count" if fn is AggFn.COUNT else f"{fn.value}_{agg_col}"
        return QueryResult(columns=((name, ColumnType.NUMBER),), rows=rows,
                           total_count=len(rows), truncated=False)

    group_idx = table.column_index(ast.group_by)
    groups: Dict[Any, List[tuple]] = {}
    for row in kept:
        groups.setdefault(row[group_idx], []).append(row)

    out: List[Tuple[Any, Any]] = []
    for key, members in groups.items():
        values = [row[agg_idx] for row in members] if agg_idx is not None else []
        agg = _aggregate(fn, values, len(members))
        if agg is None:
            continue
        if all(_OPS[cmp](agg, lit) for cmp, lit in ast.having):
            out.append((key, agg))

    if ast.top_k is not None:
        # Aggregate values are always numeric, so sign flipping is safe.
        k, order = ast.top_k
        sign = -1 if order == "desc" else 1
        out.sort(key=lambda r: (sign * r[1], _sort_key(r[0])))
        out = out[:k]
    else:
        out.sort(key=lambda r: _sort_key(r[0]))

    agg_name = "count" if fn is AggFn.COUNT else f"{fn.value}_{agg_col}"
    group_type = table.column_type(ast.group_by)
    return QueryResult(
        columns=((ast.group_by, group_type), (agg_name, ColumnType.NUMBER)),
        rows=tuple(tuple(r) for r in out),
        total_count=len(out),
        truncated=False,
    )


def _plain_result(ast: QueryAst, table: Table, kept: List[tuple]) -> QueryResult:
    if ast.top_k is not None:
        k, order = ast.top_k
        oidx = table.column_index(ast.order_column)
        decorated = list(enumerate(kept))
        decorated.sort(key=lambda d: (-d[1][oidx], d[0]) if order == "desc"
                       else (d[1][oidx], d[0]))
        kept = [row for _, row in decorated[:k]]
    if ast.projection:
        idxs = [table.column_index(col) for col in ast.projection]
        columns = tuple(table.columns[i] for i in idxs)
        rows = tuple(tuple(row[i] for i in idxs) for row in kept)
    else:
        columns = table.columns
        rows = tuple(kept)
    return QueryResult(columns=columns, rows=rows, total_count=len(rows), truncated=False)


def truncate_result(result: QueryResult, max_rows: int) -> QueryResult:
    """Display truncation: rows capped, total_count preserved."""
    if len(result.rows) <= max_rows:
        return result
    return QueryResult(columns=result.columns, rows=result.rows[:max_rows],
                       total_count=result.total_count, truncated=True)
