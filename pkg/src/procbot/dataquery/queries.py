"""Query AST, the English query grammar, and its parser/renderer.

Grammar (over normalized tokens):

    query  := head [all] [top N] subject [with clause {(and|but) clause}] [(per|by) column]
    head   := "who are" | "show" | "list" | "how many"
    clause := [aggnoun] column cmp value
    aggnoun:= "average" | "total" | "number of" | "minimum" | "maximum"
    cmp    := "more than" | "less than" | "at least" | "at most" | "exactly" | ...

A clause with an aggregation noun defines the query's aggregate and filters on
the aggregated value; plain clauses filter rows. "top N subject" groups by the
subject's column. Parsing is longest-match with column synonyms taking
priority over subject nouns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from ..nlu import COMPARATOR_PHRASES, as_number, normalize, parse_number
from .tables import ColumnType, Table


class AggFn(Enum):
    COUNT = "count"
    SUM = "sum"
    AVG = "avg"
    MIN = "min"
    MAX = "max"


_AGG_NOUNS = {
    "average": AggFn.AVG,
    "mean": AggFn.AVG,
    "total": AggFn.SUM,
    "number of": AggFn.COUNT,
    "minimum": AggFn.MIN,
    "lowest": AggFn.MIN,
    "maximum": AggFn.MAX,
    "highest": AggFn.MAX,
}

_CANONICAL_AGG_NOUN = {
    AggFn.AVG: "average",
    AggFn.SUM: "total",
    AggFn.COUNT: "number of",
    AggFn.MIN: "minimum",
    AggFn.MAX: "maximum",
}

COMPARATORS = ("<", "<=", ">", ">=", "=", "!=")

_CANONICAL_CMP_WORD = {
    ">": "more than",
    "<": "less than",
    ">=": "at least",
    "<=": "at most",
    "=": "exactly",
    "!=": "not equal to",
}


class ParseError(Exception):
    """Input not in the query grammar; carries how far parsing got."""

    def __init__(self, message: str, valid_prefix: str = "", offending: str = ""):
        super().__init__(message)
        self.valid_prefix = valid_prefix
        self.offending = offending


@dataclass(frozen=True)
class TableSchema:
    """Vocabulary binding for one queryable table."""

    table_name: str
    subjects: Dict[str, Optional[str]]  # noun -> grouping column (None = plain rows)
    default_subject: str
    columns: Dict[str, Tuple[ColumnType, Tuple[str, ...]]]  # col -> (type, synonyms)

    def synonym_table(self) -> Dict[str, str]:
        out = {}
        for col, (_, synonyms) in self.columns.items():
            out[normalize(col.replace("_", " "))] = col
            for syn in synonyms:
                out[normalize(syn)] = col
        return out

    def column_type(self, column_id: str) -> ColumnType:
        return self.columns[column_id][0]

    def canonical_column_phrase(self, column_id: str) -> str:
        ctype, synonyms = self.columns[column_id]
        return synonyms[0] if synonyms else column_id.replace("_", " ")

    def subject_for_column(self, column_id: str) -> Optional[str]:
        for noun, col in self.subjects.items():
            if col == column_id:
                return noun
        return None

    @classmethod
    def from_doc(cls, doc: dict) -> "TableSchema":
        return cls(
            table_name=doc["table"],
            subjects={k: v for k, v in doc["subjects"].items()},
            default_subject=doc["defaultSubject"],
            columns={col: (ColumnType(spec["type"]), tuple(spec.get("synonyms", [])))
                     for col, spec in doc["columns"].items()},
        )

    @classmethod
    def load(cls, path: str) -> "TableSchema":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_doc(json.load(fh))


@dataclass(frozen=True)
class QueryAst:
    source: str
    filters: Tuple[Tuple[str, str, Any], ...] = ()
    group_by: Optional[str] = None
    aggregate: Optional[Tuple[AggFn, Optional[str]]] = None
    having: Tuple[Tuple[str, Any], ...] = ()
    top_k: Optional[Tuple[int, str]] = None  # (k, "desc" | "asc")
    order_column: Optional[str] = None
    projection: Tuple[str, ...] = ()  # empty = all columns


def validate_ast(ast: QueryAst, table: Table) -> None:
    """Check an AST against a concrete table before evaluation."""
    for col, cmp, _ in ast.filters:
        if col not in table.column_ids:
            raise ParseError(f"unknown column {col!r} in filter")
        if cmp not in COMPARATORS:
            raise ParseError(f"unknown comparator {cmp!r}")
    if ast.group_by is not None and ast.group_by not in table.column_ids:
        raise ParseError(f"unknown grouping column {ast.group_by!r}")
    if ast.aggregate is not None:
        fn, col = ast.aggregate
        if fn is not AggFn.COUNT:
            if col is None:
                raise ParseError(f"{fn.value} needs a column")
            if table.column_type(col) is not ColumnType.NUMBER:
                raise ParseError(f"{fn.value} over non-numeric column {col!r}")
    if ast.having and ast.aggregate is None:
        raise ParseError("aggregate filter without an aggregate")
    if ast.group_by is not None and ast.aggregate is None:
        raise ParseError("grouping requires an aggregate")
    if ast.top_k is not None:
        k, order = ast.top_k
        if k < 1:
            raise ParseError("top k must be at least 1")
        if order not in ("desc", "asc"):
            raise ParseError(f"unknown order {order!r}")
        if ast.aggregate is None:
            if ast.order_column is None:
                raise ParseError("top k needs an aggregate or a numeric order column")
            if table.column_type(ast.order_column) is not ColumnType.NUMBER:
                raise ParseError(f"order column {ast.order_column!r} is not numeric")
    for col in ast.projection:
        if col not in table.column_ids:
            raise ParseError(f"unknown column {col!r} in projection")


# -- parsing ---------------------------------------------------------------------

_HEADS = (("who", "are"), ("how", "many"), ("list",), ("show",))
_FILLERS = {"me", "all", "of"}


class _Cursor:
    def __init__(self, tokens: List[str]):
        self.tokens = tokens
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if not self.done() else None

    def take(self) -> str:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def match_seq(self, seq: Tuple[str, ...]) -> bool:
        if tuple(self.tokens[self.pos:self.pos + len(seq)]) == tuple(seq):
            self.pos += len(seq)
            return True
        return False

    def prefix(self) -> str:
        return " ".join(self.tokens[:self.pos])


def _match_from_table(cur: _Cursor, table: Dict[str, str]) -> Optional[str]:
    entries = sorted(((syn.split(), canon) for syn, canon in table.items()),
                     key=lambda e: -len(e[0]))
    for syn_tokens, canon in entries:
        if syn_tokens and cur.match_seq(tuple(syn_tokens)):
            return canon
    return None


def _match_comparator(cur: _Cursor) -> Optional[str]:
    for phrase, symbol in COMPARATOR_PHRASES:
        if cur.match_seq(tuple(phrase.split())):
            return symbol
    return None


def _match_agg_noun(cur: _Cursor) -> Optional[AggFn]:
    entries = sorted(_AGG_NOUNS.items(), key=lambda e: -len(e[0].split()))
    for phrase, fn in entries:
        if cur.match_seq(tuple(phrase.split())):
            return fn
    return None


def _skip_fillers(cur: _Cursor) -> None:
    while not cur.done() and cur.peek() in _FILLERS:
        cur.take()


def parse_query(text: str, schema: TableSchema) -> QueryAst:
    """Compile an English query into a QueryAst, or raise ParseError."""
    tokens = normalize(text).split()
    cur = _Cursor(tokens)
    columns = schema.synonym_table()
    subjects = {normalize(noun): noun for noun in schema.subjects}

    head = None
    for seq in _HEADS:
        if cur.match_seq(seq):
            head = " ".join(seq)
            break
    if head is None:
        raise ParseError("expected a query verb (who are / show / list / how many)",
                         valid_prefix="", offending=cur.peek() or "")
    _skip_fillers(cur)

    top_k: Optional[Tuple[int, str]] = None
    if cur.peek() == "top":
        cur.take()
        if cur.done():
            raise ParseError("expected a count after 'top'", cur.prefix(), "")
        raw = cur.take()
        k = parse_number(raw)
        if k is None or int(k) != k:
            raise ParseError(f"expected an integer after 'top', got {raw!r}",
                             cur.prefix(), raw)
        if k < 1:
            raise ParseError("top k must be at least 1", cur.prefix(), raw)
        top_k = (int(k), "desc")
    _skip_fillers(cur)

    subject_noun = _match_from_table(cur, subjects)
    if subject_noun is None:
        raise ParseError(f"expected a subject noun, got {cur.peek()!r}",
                         cur.prefix(), cur.peek() or "")

    aggregate: Optional[Tuple[AggFn, Optional[str]]] = None
    having: List[Tuple[str, Any]] = []
    filters: List[Tuple[str, str, Any]] = []
    group_by: Optional[str] = None

    if head == "how many":
        aggregate = (AggFn.COUNT, None)

    if cur.peek() == "with":
        cur.take()
        while True:
            fn = _match_agg_noun(cur)
            col = _match_from_table(cur, columns)
            if col is None:
                raise ParseError(f"expected a column name, got {cur.peek()!r}",
                                 cur.prefix(), cur.peek() or "")
            cmp = _match_comparator(cur)
            if cmp is None:
                raise ParseError(f"expected a comparison, got {cur.peek()!r}",
                                 cur.prefix(), cur.peek() or "")
            if cur.done():
                raise ParseError("expected a value to compare against", cur.prefix(), "")
            raw = cur.take()
            value = parse_number(raw)
            value = raw if value is None else as_number(value)
            if fn is not None:
                if aggregate is not None and aggregate != (fn, col):
                    raise ParseError("conflicting aggregations in one query",
                                     cur.prefix(), raw)
                aggregate = (fn, col)
                having.append((cmp, value))
            else:
                filters.append((col, cmp, value))
            if cur.peek() in ("and", "but"):
                cur.take()
                continue
            break

    if cur.peek() in ("per", "by"):
        cur.take()
        col = _match_from_table(cur, columns)
        if col is None:
            raise ParseError(f"expected a column after 'per', got {cur.peek()!r}",
                             cur.prefix(), cur.peek() or "")
        group_by = col

    if not cur.done():
        raise ParseError(f"unexpected trailing input {cur.peek()!r}",
                         cur.prefix(), cur.peek() or "")

    # "top 3 borrowers ..." groups on the subject's column.
    subject_col = schema.subjects.get(subject_noun)
    if group_by is None and subject_col is not None and (top_k or aggregate):
        group_by = subject_col

    if top_k is not None and aggregate is None:
        raise ParseError("top k needs an aggregated value to rank by",
                         cur.prefix(), "")

    return QueryAst(
        source=schema.table_name,
        filters=tuple(filters),
        group_by=group_by,
        aggregate=aggregate,
        having=tuple(having),
        top_k=top_k,
        projection=(),
    )


def render_query(ast: QueryAst, schema: TableSchema) -> str:
    """Canonical English for an AST; parse(render(ast)) == ast for parser output."""
    parts: List[str] = []
    if ast.aggregate is not None and ast.aggregate[0] is AggFn.COUNT and not ast.having:
        parts.append("how many")
    elif ast.top_k is not None:
        parts.append("who are")
    else:
        parts.append("list all")
    if ast.top_k is not None:
        parts.append(f"top {ast.top_k[0]}")

    subject = None
    if ast.group_by is not None:
        subject = schema.subject_for_column(ast.group_by)
    parts.append(subject or schema.default_subject)

    clauses: List[str] = []
    for col, cmp, value in ast.filters:
        clauses.append(f"{schema.canonical_column_phrase(col)} "
                       f"{_CANONICAL_CMP_WORD[cmp]} {value}")
    if ast.aggregate is not None and ast.having:
        fn, col = ast.aggregate
        for cmp, value in ast.having:
            clauses.append(f"{_CANONICAL_AGG_NOUN[fn]} "
                           f"{schema.canonical_column_phrase(col)} "
                           f"{_CANONICAL_CMP_WORD[cmp]} {value}")
    if clauses:
        parts.append("with " + " and ".join(clauses))

    if ast.group_by is not None and subject is None:
        parts.append(f"per {schema.canonical_column_phrase(ast.group_by)}")
    return " ".join(parts)


# -- document form (corpus files, traces) -----------------------------------------

def ast_to_doc(ast: QueryAst) -> dict:
    doc: dict = {"source": ast.source}
    if ast.filters:
        doc["filters"] = [[c, op, v] for c, op, v in ast.filters]
    if ast.group_by is not None:
        doc["groupBy"] = ast.group_by
    if ast.aggregate is not None:
        doc["aggregate"] = [ast.aggregate[0].value, ast.aggregate[1]]
    if ast.having:
        doc["having"] = [[op, v] for op, v in ast.having]
    if ast.top_k is not None:
        doc["topK"] = [ast.top_k[0], ast.top_k[1]]
    if ast.order_column is not None:
        doc["orderColumn"] = ast.order_column
    if ast.projection:
        doc["projection"] = list(ast.projection)
    return doc


def ast_from_doc(doc: dict) -> QueryAst:
    agg = doc.get("aggregate")
    top = doc.get("topK")
    return QueryAst(
        source=doc["source"],
        filters=tuple((c, op, v) for c, op, v in doc.get("filters", [])),
        group_by=doc.get("groupBy"),
        aggregate=(AggFn(agg[0]), agg[1]) if agg else None,
        having=tuple((op, v) for op, v in doc.get("having", [])),
        top_k=(int(top[0]), top[1]) if top else None,
        order_column=doc.get("orderColumn"),
        projection=tuple(doc.get("projection", [])),
    )
