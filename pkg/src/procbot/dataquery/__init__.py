"""Natural-language query compiler and evaluator over tabular process data."""

from .tables import ColumnType, Table, load_csv, save_csv
from .queries import (
    AggFn,
    ParseError,
    QueryAst,
    TableSchema,
    parse_query,
    render_query,
    validate_ast,
)
from .engine import QueryResult, evaluate, truncate_result
from .oracle import oracle_evaluate
from .datagen import DataBundle, generate_dataset, write_dataset

__all__ = [
    "AggFn",
    "ColumnType",
    "DataBundle",
    "ParseError",
    "QueryAst",
    "QueryResult",
    "Table",
    "TableSchema",
    "evaluate",
    "generate_dataset",
    "load_csv",
    "oracle_evaluate",
    "parse_query",
    "render_query",
    "save_csv",
    "truncate_result",
    "validate_ast",
    "write_dataset",
]
