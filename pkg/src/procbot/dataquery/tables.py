"""In-memory tables with typed columns and CSV round-tripping."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Tuple

from ..contract import TablePayload


class ColumnType(Enum):
    STRING = "string"
    NUMBER = "number"
    DATE = "date"


class TableError(Exception):
    pass


@dataclass(frozen=True)
class Table:
    name: str
    columns: Tuple[Tuple[str, ColumnType], ...]
    rows: Tuple[tuple, ...]

    def __post_init__(self) -> None:
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise TableError(f"{self.name}: row {i} has {len(row)} cells, expected {width}")
            for (col, ctype), cell in zip(self.columns, row):
                if ctype is ColumnType.NUMBER:
                    if isinstance(cell, bool) or not isinstance(cell, (int, float)):
                        raise TableError(f"{self.name}: {col} expects a number, got {cell!r}")
                else:
                    if not isinstance(cell, str):
                        raise TableError(f"{self.name}: {col} expects a string, got {cell!r}")

    @classmethod
    def build(cls, name: str, columns: Iterable, rows: Iterable) -> "Table":
        cols = tuple((c, t if isinstance(t, ColumnType) else ColumnType(t))
                     for c, t in columns)
        return cls(name=name, columns=cols, rows=tuple(tuple(r) for r in rows))

    def column_index(self, column_id: str) -> int:
        for i, (col, _) in enumerate(self.columns):
            if col == column_id:
                return i
        raise KeyError(column_id)

    def column_type(self, column_id: str) -> ColumnType:
        return self.columns[self.column_index(column_id)][1]

    @property
    def column_ids(self) -> List[str]:
        return [c for c, _ in self.columns]

    def to_payload(self) -> TablePayload:
        return TablePayload.build(
            [(c, t.value) for c, t in self.columns],
            [list(r) for r in self.rows],
        )

    @classmethod
    def from_payload(cls, name: str, payload: TablePayload) -> "Table":
        return cls.build(name, [(c, ColumnType(t)) for c, t in payload.columns],
                         payload.rows)


def _parse_cell(raw: str, ctype: ColumnType):
    if ctype is ColumnType.NUMBER:
        value = float(raw)
        return int(value) if value.is_integer() else value
    return raw


def load_csv(path: str, name: str, columns: Iterable) -> Table:
    """Read a UTF-8 CSV with a header row; header must match the schema order."""
    cols = tuple((c, t if isinstance(t, ColumnType) else ColumnType(t)) for c, t in columns)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = [c for c, _ in cols]
        if header != expected:
            raise TableError(f"{path}: header {header} does not match schema {expected}")
        rows = [tuple(_parse_cell(cell, t) for cell, (_, t) in zip(row, cols))
                for row in reader]
    return Table(name=name, columns=cols, rows=tuple(rows))


def save_csv(table: Table, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(table.column_ids)
        writer.writerows(table.rows)


def table_to_csv_bytes(table: Table) -> bytes:
    """RFC-4180-style CSV bytes (header row plus all rows), for file exports."""
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(table.column_ids)
    writer.writerows(table.rows)
    return buf.getvalue().encode("utf-8")


def payload_to_csv_bytes(payload: TablePayload) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(payload.column_names)
    writer.writerows(payload.rows)
    return buf.getvalue().encode("utf-8")
