"""In-memory evaluation of a parsed query against one Table.

Semantics pinned down here (and mirrored by the test oracle):
three-valued WHERE logic, aggregates skip nulls, COUNT(*) counts rows,
AVG/SUM over nothing is null, STDDEV is sample (n-1) and null for n < 2,
LIKE and text equality are case-sensitive, `/` always yields a float and
division by zero becomes a null cell with a warning.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import re
from dataclasses import dataclass
from functools import cmp_to_key

from ..errors import TypeMismatch, UnknownColumn
from ..table import Cell, Table
from .nodes import (
    Aggregate,
    Between,
    Binary,
    BOOL_OPS,
    COMPARISON_OPS,
    ColumnRef,
    Expr,
    InList,
    Like,
    Literal,
    OrderItem,
    QueryAST,
    SelectItem,
    Unary,
    contains_aggregate,
    print_expr,
)

_ISO_DATE = re.compile(r"\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]
    warnings: tuple[str, ...] = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow(
                ["" if v is None else (str(v).lower() if isinstance(v, bool) else v) for v in row]
            )
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        def cell(v: Cell):
            if isinstance(v, dt.date):
                return v.isoformat()
            return v

        return {
            "columns": list(self.columns),
            "rows": [[cell(v) for v in row] for row in self.rows],
            "warnings": list(self.warnings),
        }


class _Warnings:
    def __init__(self) -> None:
        self.messages: list[str] = []

    def add(self, message: str) -> None:
        if message not in self.messages:
            self.messages.append(message)


def _family(value: Cell) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "numeric"
    if isinstance(value, str):
        return "text"
    if isinstance(value, dt.date):
        return "date"
    raise TypeMismatch(f"unsupported runtime value: {value!r}")


def _coerce_pair(a: Cell, b: Cell) -> tuple[Cell, Cell]:
    """Align comparable operands; ISO date strings coerce to dates."""
    fa, fb = _family(a), _family(b)
    if fa == fb:
        return a, b
    if fa == "date" and fb == "text" and _ISO_DATE.match(b):  # type: ignore[arg-type]
        return a, dt.date.fromisoformat(b)  # type: ignore[arg-type]
    if fb == "date" and fa == "text" and _ISO_DATE.match(a):  # type: ignore[arg-type]
        return dt.date.fromisoformat(a), b  # type: ignore[arg-type]
    raise TypeMismatch(f"cannot compare {fa} with {fb}")


def _compare(op: str, a: Cell, b: Cell) -> bool | None:
    if a is None or b is None:
        return None
    a, b = _coerce_pair(a, b)
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b  # type: ignore[operator]
    if op == "<=":
        return a <= b  # type: ignore[operator]
    if op == ">":
        return a > b  # type: ignore[operator]
    return a >= b  # type: ignore[operator]


def _require_numeric(value: Cell, op: str) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeMismatch(f"operator {op!r} needs numeric operands, got {_family(value)}")


def _arith(op: str, a: Cell, b: Cell, warnings: _Warnings) -> Cell:
    if a is None or b is None:
        return None
    _require_numeric(a, op)
    _require_numeric(b, op)
    if op == "+":
        return a + b  # type: ignore[operator]
    if op == "-":
        return a - b  # type: ignore[operator]
    if op == "*":
        return a * b  # type: ignore[operator]
    if b == 0:
        warnings.add("division by zero produced null")
        return None
    return a / b  # type: ignore[operator]


def _like_regex(pattern: str) -> re.Pattern:
    out = []
    for ch in pattern:
        if ch == "%":
            out.append(".*")
        elif ch == "_":
            out.append(".")
        else:
            out.append(re.escape(ch))
    return re.compile("".join(out), re.DOTALL)


def _kleene_and(a: bool | None, b: bool | None) -> bool | None:
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _kleene_or(a: bool | None, b: bool | None) -> bool | None:
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _truthy(value: Cell, where: str) -> bool | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    raise TypeMismatch(f"{where} needs a boolean, got {_family(value)}")


class _Evaluator:
    """Evaluates expressions for one row, optionally inside a group."""

    def __init__(self, table: Table, warnings: _Warnings):
        self.table = table
        self.warnings = warnings
        self.col_index = {c.normalized_name: i for i, c in enumerate(table.columns)}

    def cell(self, name: str, row: tuple[Cell, ...]) -> Cell:
        idx = self.col_index.get(name)
        if idx is None:
            raise UnknownColumn(name)
        return row[idx]

    def scalar(self, expr: Expr, row: tuple[Cell, ...]) -> Cell:
        """Row-level evaluation; aggregates are not allowed here."""
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, ColumnRef):
            return self.cell(expr.name, row)
        if isinstance(expr, Unary):
            if expr.op == "NOT":
                truth = _truthy(self.scalar(expr.operand, row), "NOT")
                return None if truth is None else not truth
            inner = self.scalar(expr.operand, row)
            if inner is None:
                return None
            _require_numeric(inner, "-")
            return -inner  # type: ignore[operator]
        if isinstance(expr, Binary):
            if expr.op in BOOL_OPS:
                left = _truthy(self.scalar(expr.left, row), expr.op)
                right = _truthy(self.scalar(expr.right, row), expr.op)
                return _kleene_and(left, right) if expr.op == "AND" else _kleene_or(left, right)
            if expr.op in COMPARISON_OPS:
                return _compare(expr.op, self.scalar(expr.left, row), self.scalar(expr.right, row))
            return _arith(expr.op, self.scalar(expr.left, row), self.scalar(expr.right, row), self.warnings)
        if isinstance(expr, Like):
            value = self.scalar(expr.expr, row)
            if value is None:
                return None
            if not isinstance(value, str):
                raise TypeMismatch(f"LIKE needs text, got {_family(value)}")
            matched = bool(_like_regex(expr.pattern).fullmatch(value))
            return (not matched) if expr.negated else matched
        if isinstance(expr, InList):
            value = self.scalar(expr.expr, row)
            if value is None:
                return None
            saw_null = False
            hit = False
            for item in expr.items:
                if item.value is None:
                    saw_null = True
                    continue
                if _compare("=", value, item.value):
                    hit = True
                    break
            result: bool | None
            if hit:
                result = True
            elif saw_null:
                result = None
            else:
                result = False
            if result is None:
                return None
            return (not result) if expr.negated else result
        if isinstance(expr, Between):
            value = self.scalar(expr.expr, row)
            low = self.scalar(expr.low, row)
            high = self.scalar(expr.high, row)
            result = _kleene_and(_compare(">=", value, low), _compare("<=", value, high))
            if result is None:
                return None
            return (not result) if expr.negated else result
        if isinstance(expr, Aggregate):
            raise TypeMismatch("aggregate used in a row-level context")
        raise TypeMismatch(f"unsupported expression node: {expr!r}")

    def aggregate(self, agg: Aggregate, rows: list[tuple[Cell, ...]]) -> Cell:
        if agg.func == "COUNT" and agg.arg is None:
            return len(rows)
        values = [self.scalar(agg.arg, r) for r in rows]  # type: ignore[arg-type]
        values = [v for v in values if v is not None]
        if agg.func == "COUNT":
            return len(values)
        if not values:
            return None
        if agg.func in ("SUM", "AVG", "STDDEV"):
            for v in values:
                _require_numeric(v, agg.func)
        if agg.func == "SUM":
            return sum(values)  # type: ignore[arg-type]
        if agg.func == "AVG":
            return sum(values) / len(values)  # type: ignore[arg-type]
        if agg.func == "STDDEV":
            if len(values) < 2:
                return None
            mean = sum(values) / len(values)  # type: ignore[arg-type]
            var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)  # type: ignore[operator]
            return math.sqrt(var)
        # MIN / MAX: any one comparable family
        first_family = _family(values[0])
        for v in values[1:]:
            if _family(v) != first_family:
                raise TypeMismatch(f"{agg.func} over mixed types")
        return min(values) if agg.func == "MIN" else max(values)  # type: ignore[type-var]

    def grouped(self, expr: Expr, group_rows: list[tuple[Cell, ...]]) -> Cell:
        """Group-level evaluation: aggregates computed over the group, other
        nodes evaluated against the group's first row."""
        if isinstance(expr, Aggregate):
            return self.aggregate(expr, group_rows)
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, ColumnRef):
            return self.cell(expr.name, group_rows[0]) if group_rows else None
        if isinstance(expr, Unary):
            inner = self.grouped(expr.operand, group_rows)
            if expr.op == "NOT":
                truth = _truthy(inner, "NOT")
                return None if truth is None else not truth
            if inner is None:
                return None
            _require_numeric(inner, "-")
            return -inner  # type: ignore[operator]
        if isinstance(expr, Binary):
            if expr.op in BOOL_OPS:
                left = _truthy(self.grouped(expr.left, group_rows), expr.op)
                right = _truthy(self.grouped(expr.right, group_rows), expr.op)
                return _kleene_and(left, right) if expr.op == "AND" else _kleene_or(left, right)
            if expr.op in COMPARISON_OPS:
                return _compare(
                    expr.op,
                    self.grouped(expr.left, group_rows),
                    self.grouped(expr.right, group_rows),
                )
            return _arith(
                expr.op,
                self.grouped(expr.left, group_rows),
                self.grouped(expr.right, group_rows),
                self.warnings,
            )
        raise TypeMismatch(f"unsupported expression in aggregate context: {print_expr(expr)}")


def _group_key_cell(value: Cell) -> Cell:
    # 1 and 1.0 group together, matching equality semantics
    if isinstance(value, bool):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def _null_aware_cmp(a: Cell, b: Cell) -> int:
    # nulls sort after values; callers flip sign for DESC so nulls lead there
    if a is None and b is None:
        return 0
    if a is None:
        return 1
    if b is None:
        return -1
    a, b = _coerce_pair(a, b)
    if a == b:
        return 0
    return -1 if a < b else 1  # type: ignore[operator]


def execute(ast: QueryAST, table: Table) -> ResultTable:
    """Run the query. Reads only the given table: no filesystem, no network."""
    warnings = _Warnings()
    ev = _Evaluator(table, warnings)
    known = set(ev.col_index)

    for name in _referenced_columns(ast):
        if name not in known:
            raise UnknownColumn(name)

    rows = list(table.rows())
    if ast.where is not None:
        rows = [r for r in rows if _truthy(ev.scalar(ast.where, r), "WHERE") is True]

    has_aggregates = any(contains_aggregate(i.expr) for i in ast.select)

    if ast.star:
        columns = tuple(c.normalized_name for c in table.columns)
        out_rows = [tuple(r) for r in rows]
        order_env = rows
    elif ast.group_by or has_aggregates:
        columns = tuple(_item_name(i) for i in ast.select)
        groups: dict[tuple, list[tuple[Cell, ...]]] = {}
        if ast.group_by:
            for r in rows:
                key = tuple(_group_key_cell(ev.cell(g, r)) for g in ast.group_by)
                groups.setdefault(key, []).append(r)
            buckets = list(groups.values())
        else:
            buckets = [rows]  # aggregate over everything, even zero rows
        out_rows = [
            tuple(ev.grouped(i.expr, bucket) for i in ast.select) for bucket in buckets
        ]
        order_env = buckets
    else:
        columns = tuple(_item_name(i) for i in ast.select)
        out_rows = [tuple(ev.scalar(i.expr, r) for i in ast.select) for r in rows]
        order_env = rows

    if ast.order_by:
        grouped_mode = bool(ast.group_by or has_aggregates) and not ast.star
        keyed = list(zip(out_rows, order_env))
        for item in reversed(ast.order_by):
            keyed = _stable_sort(keyed, item, ev, grouped_mode)
        out_rows = [row for row, _ in keyed]

    if ast.limit is not None:
        out_rows = out_rows[: ast.limit]

    return ResultTable(columns=columns, rows=tuple(out_rows), warnings=tuple(warnings.messages))


def _stable_sort(
    keyed: list[tuple[tuple[Cell, ...], object]],
    item: OrderItem,
    ev: _Evaluator,
    grouped_mode: bool,
) -> list[tuple[tuple[Cell, ...], object]]:
    def sort_value(entry: tuple[tuple[Cell, ...], object]) -> Cell:
        _, env = entry
        if grouped_mode:
            return ev.grouped(item.expr, env)  # type: ignore[arg-type]
        return ev.scalar(item.expr, env)  # type: ignore[arg-type]

    values = [sort_value(e) for e in keyed]

    def compare(ia: int, ib: int) -> int:
        c = _null_aware_cmp(values[ia], values[ib])
        return -c if item.descending else c

    order = sorted(range(len(keyed)), key=cmp_to_key(compare))
    return [keyed[i] for i in order]


def _item_name(item: SelectItem) -> str:
    return item.alias if item.alias else print_expr(item.expr)


def _referenced_columns(ast: QueryAST) -> list[str]:
    from .nodes import column_refs

    names: list[str] = []
    for item in ast.select:
        names.extend(column_refs(item.expr))
    if ast.where is not None:
        names.extend(column_refs(ast.where))
    names.extend(ast.group_by)
    for o in ast.order_by:
        names.extend(column_refs(o.expr))
    return names
