"""Reference query evaluator: deliberately naive, zero shared logic.

Nested loops and linear scans only. This exists so the real engine has an
independent implementation to be checked against; never use it outside tests.
"""

from __future__ import annotations

from typing import Any, List

from .engine import QueryResult
from .queries import AggFn, QueryAst
from .tables import ColumnType, Table


def _cmp(cell: Any, op: str, literal: Any) -> bool:
    if op == "<":
        return cell < literal
    if op == "<=":
        return cell <= literal
    if op == ">":
        return cell > literal
    if op == ">=":
        return cell >= literal
    if op == "=":
        return cell == literal
    if op == "!=":
        return cell != literal
    raise ValueError(op)


def oracle_evaluate(ast: QueryAst, table: Table) -> QueryResult:
    # Row filtering, one predicate at a time.
    kept: List[tuple] = []
    for row in table.rows:
        ok = True
        for col, op, literal in ast.filters:
            idx = None
            for i, (name, _) in enumerate(table.columns):
                if name == col:
                    idx = i
            if not _cmp(row[idx], op, literal):
                ok = False
        if ok:
            kept.append(row)

    if ast.aggregate is None:
        if ast.projection:
            idxs = []
            for want in ast.projection:
                for i, (name, _) in enumerate(table.columns):
                    if name == want:
                        idxs.append(i)
            cols = tuple(table.columns[i] for i in idxs)
            rows = tuple(tuple(row[i] for i in idxs) for row in kept)
        else:
            cols = table.columns
            rows = tuple(kept)
        if ast.top_k is not None:
            k, order = ast.top_k
            oidx = None
            for i, (name, _) in enumerate(table.columns):
                if name == ast.order_column:
                    oidx = i
            decorated = [(row[oidx], n, row) for n, row in enumerate(kept)]
            decorated.sort(key=lambda d: (-d[0], d[1]) if order == "desc" else (d[0], d[1]))
            picked = [d[2] for d in decorated[:k]]
            if ast.projection:
                rows = tuple(tuple(row[i] for i in idxs) for row in picked)
            else:
                rows = tuple(picked)
        return QueryResult(columns=cols, rows=rows, total_count=len(rows), truncated=False)

    fn, agg_col = ast.aggregate
    agg_idx = None
    for i, (name, _) in enumerate(table.columns):
        if name == agg_col:
            agg_idx = i

    if ast.group_by is None:
        values = []
        for row in kept:
            if agg_idx is not None:
                values.append(row[agg_idx])
        agg = _aggregate_naive(fn, values, len(kept))
        ok = True
        for op, literal in ast.having:
            if agg is None or not _cmp(agg, op, literal):
                ok = False
        rows = ((agg,),) if (ok and agg is not None) else ()
        name = "count" if fn is AggFn.COUNT else f"{fn.value}_{agg_col}"
        return QueryResult(columns=((name, ColumnType.NUMBER),), rows=rows,
                           total_count=len(rows), truncated=False)

    group_idx = None
    for i, (name, _) in enumerate(table.columns):
        if name == ast.group_by:
            group_idx = i

    # Group keys in first-appearance order, found by scanning.
    keys: List[Any] = []
    for row in kept:
        key = row[group_idx]
        seen = False
        for existing in keys:
            if existing == key:
                seen = True
        if not seen:
            keys.append(key)

    out_rows: List[tuple] = []
    for key in keys:
        members = []
        for row in kept:
            if row[group_idx] == key:
                members.append(row)
        values = []
        for row in members:
            if agg_idx is not None:
                values.append(row[agg_idx])
        agg = _aggregate_naive(fn, values, len(members))
        ok = True
        for op, literal in ast.having:
            if not _cmp(agg, op, literal):
                ok = False
        if ok:
            out_rows.append((key, agg))

    if ast.top_k is not None:
        k, order = ast.top_k
        if order == "desc":
            out_rows.sort(key=lambda r: (-r[1], _orderable(r[0])))
        else:
            out_rows.sort(key=lambda r: (r[1], _orderable(r[0])))
        out_rows = out_rows[:k]
    else:
        out_rows.sort(key=lambda r: _orderable(r[0]))

    agg_name = "count" if fn is AggFn.COUNT else f"{fn.value}_{agg_col}"
    group_type = table.columns[group_idx][1]
    return QueryResult(
        columns=((ast.group_by, group_type), (agg_name, ColumnType.NUMBER)),
        rows=tuple(tuple(r) for r in out_rows),
        total_count=len(out_rows),
        truncated=False,
    )


def _aggregate_naive(fn: AggFn, values: List[Any], member_count: int):
    if fn is AggFn.COUNT:
        return member_count
    if not values:
        return None
    if fn is AggFn.SUM:
        total = 0
        for v in values:
            total = total + v
        return total
    if fn is AggFn.AVG:
        total = 0
        for v in values:
            total = total + v
        return total / len(values)
    if fn is AggFn.MIN:
        best = values[0]
        for v in values:
            if v < best:
                best = v
        return best
    if fn is AggFn.MAX:
        best = values[0]
        for v in values:
            if v > best:
                best = v
        return best
    raise ValueError(fn)


def _orderable(key: Any):
    return (0, key) if isinstance(key, (int, float)) else (1, str(key))
