"""Single-table SQL subset: parser, canonical printer, validator, executor."""

from .nodes import (
    Aggregate,
    Between,
    Binary,
    ColumnRef,
    InList,
    Like,
    Literal,
    OrderItem,
    QueryAST,
    SelectItem,
    Unary,
    print_expr,
    print_query,
)
from .parser import parse_sql
from .executor import ResultTable, execute
from .validate import ValidationReport, UnseenValue, validate

__all__ = [
    "Aggregate",
    "Between",
    "Binary",
    "ColumnRef",
    "InList",
    "Like",
    "Literal",
    "OrderItem",
    "QueryAST",
    "SelectItem",
    "Unary",
    "ResultTable",
    "UnseenValue",
    "ValidationReport",
    "execute",
    "parse_sql",
    "print_expr",
    "print_query",
    "validate",
]
