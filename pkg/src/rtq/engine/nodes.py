"""AST for the supported SQL subset, plus the canonical printer.

parse_sql(print_query(ast)) == ast: the printer emits parentheses only where
the tree shape requires them, and folds nothing.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Union

Scalar = Union[int, float, str, bool, None]

AGGREGATE_FUNCS = ("COUNT", "SUM", "AVG", "MIN", "MAX", "STDDEV")
COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("AND", "OR")
ARITH_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Literal:
    value: Scalar


@dataclass(frozen=True)
class Unary:
    op: str  # '-' or 'NOT'
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # arithmetic, comparison, AND, OR
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Aggregate:
    func: str
    arg: "Expr | None"  # None encodes COUNT(*)


@dataclass(frozen=True)
class Like:
    expr: "Expr"
    pattern: str
    negated: bool = False


@dataclass(frozen=True)
class InList:
    expr: "Expr"
    items: tuple[Literal, ...]
    negated: bool = False


@dataclass(frozen=True)
class Between:
    expr: "Expr"
    low: "Expr"
    high: "Expr"
    negated: bool = False


Expr = Union[ColumnRef, Literal, Unary, Binary, Aggregate, Like, InList, Between]


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    alias: str | None = None


@dataclass(frozen=True)
class OrderItem:
    expr: Expr
    descending: bool = False


@dataclass(frozen=True)
class QueryAST:
    select: tuple[SelectItem, ...]
    from_table: str
    star: bool = False
    where: Expr | None = None
    group_by: tuple[str, ...] = ()
    order_by: tuple[OrderItem, ...] = ()
    limit: int | None = None


def contains_aggregate(expr: Expr) -> bool:
    if isinstance(expr, Aggregate):
        return True
    if isinstance(expr, Unary):
        return contains_aggregate(expr.operand)
    if isinstance(expr, Binary):
        return contains_aggregate(expr.left) or contains_aggregate(expr.right)
    if isinstance(expr, (Like, Between)):
        inner = contains_aggregate(expr.expr)
        if isinstance(expr, Between):
            inner = inner or contains_aggregate(expr.low) or contains_aggregate(expr.high)
        return inner
    if isinstance(expr, InList):
        return contains_aggregate(expr.expr)
    return False


def column_refs(expr: Expr, *, outside_aggregates: bool = False) -> list[str]:
    """All column names referenced; optionally only those not inside an aggregate."""
    out: list[str] = []

    def walk(node: Expr, in_agg: bool) -> None:
        if isinstance(node, ColumnRef):
            if not (outside_aggregates and in_agg):
                out.append(node.name)
        elif isinstance(node, Unary):
            walk(node.operand, in_agg)
        elif isinstance(node, Binary):
            walk(node.left, in_agg)
            walk(node.right, in_agg)
        elif isinstance(node, Aggregate):
            if node.arg is not None:
                walk(node.arg, True)
        elif isinstance(node, Like):
            walk(node.expr, in_agg)
        elif isinstance(node, InList):
            walk(node.expr, in_agg)
        elif isinstance(node, Between):
            walk(node.expr, in_agg)
            walk(node.low, in_agg)
            walk(node.high, in_agg)

    walk(expr, False)
    return out


# --- canonical printer ----------------------------------------------------------

# precedence levels; higher binds tighter
_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_ADD = 5
_PREC_MUL = 6
_PREC_UNARY = 7
_PREC_ATOM = 8


def _prec(expr: Expr) -> int:
    if isinstance(expr, Binary):
        if expr.op == "OR":
            return _PREC_OR
        if expr.op == "AND":
            return _PREC_AND
        if expr.op in COMPARISON_OPS:
            return _PREC_CMP
        if expr.op in ("+", "-"):
            return _PREC_ADD
        return _PREC_MUL
    if isinstance(expr, Unary):
        return _PREC_NOT if expr.op == "NOT" else _PREC_UNARY
    if isinstance(expr, (Like, InList, Between)):
        return _PREC_CMP
    return _PREC_ATOM


def _literal_text(value: Scalar) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, dt.date):
        return "'" + value.isoformat() + "'"
    return repr(value)


def _wrap(child: Expr, parent_prec: int, *, right_assoc_guard: bool = False) -> str:
    text = print_expr(child)
    child_prec = _prec(child)
    if child_prec < parent_prec or (right_assoc_guard and child_prec == parent_prec):
        return f"({text})"
    return text


def print_expr(expr: Expr) -> str:
    if isinstance(expr, ColumnRef):
        return expr.name
    if isinstance(expr, Literal):
        return _literal_text(expr.value)
    if isinstance(expr, Unary):
        if expr.op == "NOT":
            return "NOT " + _wrap(expr.operand, _PREC_NOT, right_assoc_guard=False)
        return "-" + _wrap(expr.operand, _PREC_UNARY)
    if isinstance(expr, Binary):
        # the parser builds left-leaning trees, so an equal-precedence right
        # child always needs parens; comparisons are non-associative entirely
        prec = _prec(expr)
        non_assoc = expr.op in COMPARISON_OPS
        left = _wrap(expr.left, prec, right_assoc_guard=non_assoc)
        right = _wrap(expr.right, prec, right_assoc_guard=True)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, Aggregate):
        inner = "*" if expr.arg is None else print_expr(expr.arg)
        return f"{expr.func}({inner})"
    if isinstance(expr, Like):
        op = "NOT LIKE" if expr.negated else "LIKE"
        return f"{_wrap(expr.expr, _PREC_CMP, right_assoc_guard=True)} {op} {_literal_text(expr.pattern)}"
    if isinstance(expr, InList):
        op = "NOT IN" if expr.negated else "IN"
        items = ", ".join(_literal_text(i.value) for i in expr.items)
        return f"{_wrap(expr.expr, _PREC_CMP, right_assoc_guard=True)} {op} ({items})"
    if isinstance(expr, Between):
        op = "NOT BETWEEN" if expr.negated else "BETWEEN"
        return (
            f"{_wrap(expr.expr, _PREC_CMP, right_assoc_guard=True)} {op} "
            f"{_wrap(expr.low, _PREC_ADD)} AND {_wrap(expr.high, _PREC_ADD)}"
        )
    raise TypeError(f"unprintable node: {expr!r}")


def print_query(ast: QueryAST) -> str:
    if ast.star:
        select = "*"
    else:
        parts = []
        for item in ast.select:
            text = print_expr(item.expr)
            if item.alias:
                text += f" AS {item.alias}"
            parts.append(text)
        select = ", ".join(parts)
    out = [f"SELECT {select} FROM {ast.from_table}"]
    if ast.where is not None:
        out.append(f"WHERE {print_expr(ast.where)}")
    if ast.group_by:
        out.append("GROUP BY " + ", ".join(ast.group_by))
    if ast.order_by:
        rendered = [
            f"{print_expr(o.expr)} {'DESC' if o.descending else 'ASC'}"
            for o in ast.order_by
        ]
        out.append("ORDER BY " + ", ".join(rendered))
    if ast.limit is not None:
        out.append(f"LIMIT {ast.limit}")
    return " ".join(out)
