"""Immutable typed columnar table loaded from CSV.

Type inference is a full-column scan in a fixed order (Integer, Float,
Boolean, Date, Text fallback), so the same bytes always produce the same
schema.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Any, Iterable, Union

from .errors import EmptyTable, MalformedCsv

Cell = Union[str, int, float, bool, dt.date, None]

_NULL_MARKERS = {"", "na", "n/a"}
_TRUE_WORDS = {"true", "yes"}
_FALSE_WORDS = {"false", "no"}
_INT_RE = re.compile(r"[+-]?\d+$")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}$")
_NAME_JUNK = re.compile(r"[\W_]+", re.UNICODE)


class DataType(str, Enum):
    TEXT = "Text"
    INTEGER = "Integer"
    FLOAT = "Float"
    BOOLEAN = "Boolean"
    DATE = "Date"


@dataclass(frozen=True)
class Column:
    name: str
    normalized_name: str
    dtype: DataType
    values: tuple[Cell, ...]


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    row_count: int

    def column(self, normalized_name: str) -> Column:
        for col in self.columns:
            if col.normalized_name == normalized_name:
                return col
        raise KeyError(normalized_name)

    def column_names(self) -> list[str]:
        return [c.normalized_name for c in self.columns]

    def rows(self) -> Iterable[tuple[Cell, ...]]:
        return zip(*(c.values for c in self.columns)) if self.columns else iter(())


@dataclass(frozen=True)
class AttributeProfile:
    attribute_id: int
    name: str
    normalized_name: str
    dtype: DataType
    row_count: int
    distinct_count: int
    null_count: int
    is_categorical: bool


def normalize_column_name(raw: str, position: int) -> str:
    """Lowercase, trim, collapse whitespace/punctuation runs to single underscores."""
    cleaned = _NAME_JUNK.sub("_", raw.strip().lower()).strip("_")
    return cleaned or f"column_{position + 1}"


def _dedupe_names(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out: list[str] = []
    for name in names:
        if name not in seen:
            seen[name] = 1
            out.append(name)
            continue
        n = seen[name] + 1
        candidate = f"{name}_{n}"
        while candidate in seen:
            n += 1
            candidate = f"{name}_{n}"
        seen[name] = n
        seen[candidate] = 1
        out.append(candidate)
    return out


def _is_null(raw: str) -> bool:
    return raw.strip().lower() in _NULL_MARKERS


def _parse_as(raw: str, dtype: DataType) -> Cell:
    text = raw.strip()
    if dtype is DataType.INTEGER:
        return int(text)
    if dtype is DataType.FLOAT:
        return float(text)
    if dtype is DataType.BOOLEAN:
        return text.lower() in _TRUE_WORDS
    if dtype is DataType.DATE:
        return dt.date.fromisoformat(text)
    return text


def _fits(raw: str, dtype: DataType) -> bool:
    text = raw.strip()
    if dtype is DataType.INTEGER:
        return bool(_INT_RE.match(text))
    if dtype is DataType.FLOAT:
        try:
            float(text)
        except ValueError:
            return False
        # reject nan/inf spellings: they are words, not tabular numbers
        return bool(re.match(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$", text))
    if dtype is DataType.BOOLEAN:
        low = text.lower()
        return low in _TRUE_WORDS or low in _FALSE_WORDS
    if dtype is DataType.DATE:
        if not _DATE_RE.match(text):
            return False
        try:
            dt.date.fromisoformat(text)
        except ValueError:
            return False
        return True
    return True


_INFERENCE_ORDER = (
    DataType.INTEGER,
    DataType.FLOAT,
    DataType.BOOLEAN,
    DataType.DATE,
)


def _infer_dtype(raw_values: list[str]) -> DataType:
    non_null = [v for v in raw_values if not _is_null(v)]
    if not non_null:
        return DataType.TEXT
    for dtype in _INFERENCE_ORDER:
        if all(_fits(v, dtype) for v in non_null):
            return dtype
    return DataType.TEXT


def _coerce_source(source: Union[bytes, str, Path, IO[bytes], IO[str]]) -> str:
    if isinstance(source, Path):
        source = source.read_bytes()
    elif hasattr(source, "read"):
        source = source.read()  # type: ignore[union-attr]
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedCsv(f"input is not valid UTF-8: {exc}") from exc
    return source


def load_table(
    source: Union[bytes, str, Path, IO[bytes], IO[str]],
    *,
    name: str = "table",
    delimiter: str = ",",
    header: bool = True,
) -> Table:
    """Parse CSV text into a typed Table.

    RFC-4180 quoting, UTF-8 only. Raises MalformedCsv on ragged rows or bad
    quoting (with the 1-based data row number) and EmptyTable when no data
    rows remain.
    """
    text = _coerce_source(source)
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter)
    try:
        raw_rows = list(reader)
    except csv.Error as exc:
        raise MalformedCsv(f"bad CSV quoting: {exc}", row=reader.line_num) from exc

    raw_rows = [r for r in raw_rows if r]  # fully blank lines are ignored
    if not raw_rows:
        raise EmptyTable("no rows in input")

    if header:
        header_row, data_rows = raw_rows[0], raw_rows[1:]
    else:
        header_row = [f"column_{i + 1}" for i in range(len(raw_rows[0]))]
        data_rows = raw_rows

    if not data_rows:
        raise EmptyTable("header present but no data rows")

    width = len(header_row)
    for i, row in enumerate(data_rows, start=1):
        if len(row) != width:
            raise MalformedCsv(
                f"row has {len(row)} fields, expected {width}", row=i
            )

    normalized = _dedupe_names(
        [normalize_column_name(h, i) for i, h in enumerate(header_row)]
    )

    columns: list[Column] = []
    for idx in range(width):
        raw_col = [row[idx] for row in data_rows]
        dtype = _infer_dtype(raw_col)
        cells = tuple(
            None if _is_null(v) else _parse_as(v, dtype) for v in raw_col
        )
        columns.append(
            Column(
                name=header_row[idx].strip(),
                normalized_name=normalized[idx],
                dtype=dtype,
                values=cells,
            )
        )

    return Table(name=name, columns=tuple(columns), row_count=len(data_rows))


# --- profiling ---------------------------------------------------------------

# Default categorical policy: Text/Boolean only. Boolean is always categorical.
# Text needs a bounded class set: distinct count under an absolute cap (with a
# small-table floor) and a distinct ratio at most MAX_DISTINCT_RATIO, which
# rules out free-text and ID-like columns.
MAX_DISTINCT_ABSOLUTE = 10_000
SMALL_TABLE_FLOOR = 50
MAX_DISTINCT_RATIO = 0.5


@dataclass(frozen=True)
class CategoricalPolicy:
    max_distinct: int = MAX_DISTINCT_ABSOLUTE
    small_table_floor: int = SMALL_TABLE_FLOOR
    max_ratio: float = MAX_DISTINCT_RATIO

    def is_categorical(self, dtype: DataType, distinct_count: int, row_count: int) -> bool:
        if dtype is DataType.BOOLEAN:
            return True
        if dtype is not DataType.TEXT or row_count == 0:
            return False
        cap = min(self.max_distinct, max(self.small_table_floor, 0.5 * row_count))
        return distinct_count <= cap and distinct_count / row_count <= self.max_ratio


DEFAULT_POLICY = CategoricalPolicy()


def profile_column(
    table: Table, attribute_id: int, policy: CategoricalPolicy = DEFAULT_POLICY
) -> AttributeProfile:
    col = table.columns[attribute_id]
    non_null = [v for v in col.values if v is not None]
    distinct = len(set(non_null))
    return AttributeProfile(
        attribute_id=attribute_id,
        name=col.name,
        normalized_name=col.normalized_name,
        dtype=col.dtype,
        row_count=table.row_count,
        distinct_count=distinct,
        null_count=table.row_count - len(non_null),
        is_categorical=policy.is_categorical(col.dtype, distinct, table.row_count),
    )


def get_attribute_names_and_types(
    table: Table, policy: CategoricalPolicy = DEFAULT_POLICY
) -> list[tuple[str, DataType, AttributeProfile]]:
    """One (name, dtype, profile) entry per column, in column order."""
    if table.row_count == 0:
        raise EmptyTable("cannot profile an empty table")
    out = []
    for i, col in enumerate(table.columns):
        out.append((col.normalized_name, col.dtype, profile_column(table, i, policy)))
    return out


# --- serialization -----------------------------------------------------------

def _cell_to_json(cell: Cell) -> Any:
    if isinstance(cell, dt.date):
        return cell.isoformat()
    return cell


def _cell_from_json(value: Any, dtype: DataType) -> Cell:
    if value is None:
        return None
    if dtype is DataType.DATE:
        return dt.date.fromisoformat(value)
    return value


def serialize_table(table: Table) -> str:
    """Schema-carrying JSON form; reload with deserialize_table for an identical table."""
    doc = {
        "name": table.name,
        "row_count": table.row_count,
        "columns": [
            {
                "name": c.name,
                "normalized_name": c.normalized_name,
                "dtype": c.dtype.value,
                "values": [_cell_to_json(v) for v in c.values],
            }
            for c in table.columns
        ],
    }
    return json.dumps(doc, sort_keys=True)


def deserialize_table(text: str) -> Table:
    doc = json.loads(text)
    columns = tuple(
        Column(
            name=c["name"],
            normalized_name=c["normalized_name"],
            dtype=DataType(c["dtype"]),
            values=tuple(_cell_from_json(v, DataType(c["dtype"])) for v in c["values"]),
        )
        for c in doc["columns"]
    )
    return Table(name=doc["name"], columns=columns, row_count=doc["row_count"])


def table_to_csv(table: Table) -> str:
    """Data-only CSV export (original headers, ISO dates, lowercase booleans)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([c.name for c in table.columns])
    for row in table.rows():
        writer.writerow(
            [
                ""
                if v is None
                else (str(v).lower() if isinstance(v, bool) else v)
                for v in row
            ]
        )
    return buf.getvalue()
