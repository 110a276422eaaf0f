"""Pre-execution checks: unknown columns, text literals that are absent from
the vocabulary index (the misspelled-value failure class), and subset-shape
violations around GROUP BY and aggregates."""

from __future__ import annotations

from dataclasses import dataclass

from ..index import PostingKind, VocabIndex, lookup
from ..table import Table
from ..text import normalize_phrase
from .nodes import (
    Between,
    Binary,
    ColumnRef,
    Expr,
    InList,
    Like,
    Literal,
    QueryAST,
    Unary,
    column_refs,
    contains_aggregate,
    print_expr,
)


@dataclass(frozen=True)
class UnseenValue:
    attribute: str
    literal: str
    suggestion: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    unknown_columns: tuple[str, ...] = ()
    unseen_values: tuple[UnseenValue, ...] = ()
    subset_violations: tuple[str, ...] = ()

    def is_clean(self) -> bool:
        return not (self.unknown_columns or self.unseen_values or self.subset_violations)

    def executable(self) -> bool:
        """Unseen values are warnings; unknown columns and shape problems block."""
        return not (self.unknown_columns or self.subset_violations)

    def to_json_dict(self) -> dict:
        return {
            "unknown_columns": list(self.unknown_columns),
            "unseen_values": [
                {"attribute": u.attribute, "literal": u.literal, "suggestion": u.suggestion}
                for u in self.unseen_values
            ],
            "subset_violations": list(self.subset_violations),
        }


def _equality_literals(expr: Expr) -> list[tuple[str, str]]:
    """(column, text literal) pairs from `col = 'x'` and `col IN (...)` forms."""
    found: list[tuple[str, str]] = []

    def walk(node: Expr) -> None:
        if isinstance(node, Binary):
            if node.op == "=":
                sides = (node.left, node.right)
                for col, lit in (sides, sides[::-1]):
                    if (
                        isinstance(col, ColumnRef)
                        and isinstance(lit, Literal)
                        and isinstance(lit.value, str)
                    ):
                        found.append((col.name, lit.value))
                        break
            else:
                walk(node.left)
                walk(node.right)
        elif isinstance(node, Unary):
            walk(node.operand)
        elif isinstance(node, InList):
            if isinstance(node.expr, ColumnRef):
                for item in node.items:
                    if isinstance(item.value, str):
                        found.append((node.expr.name, item.value))
        elif isinstance(node, Between):
            walk(node.expr)
        elif isinstance(node, Like):
            walk(node.expr)

    walk(expr)
    return found


def _suggest_canonical(index: VocabIndex, attribute_id: int, literal: str) -> str | None:
    hits = lookup(index, literal, "fuzzy")
    for hit in hits:  # already sorted best-first
        posting = hit.posting
        if posting.kind is PostingKind.VALUE and posting.attribute_id == attribute_id:
            return index.value_entries[posting.value_id].canonical_text
    return None


def validate(ast: QueryAST, table: Table, index: VocabIndex) -> ValidationReport:
    known = set(table.column_names())

    unknown: list[str] = []
    for name in _all_column_refs(ast):
        if name not in known and name not in unknown:
            unknown.append(name)

    profiles = {p.normalized_name: p for p in index.attribute_profiles}
    values_by_attr: dict[int, set[str]] = {}
    for entry in index.value_entries:
        values_by_attr.setdefault(entry.attribute_id, set()).add(entry.normalized_text)

    unseen: list[UnseenValue] = []
    if ast.where is not None:
        seen_pairs: set[tuple[str, str]] = set()
        for col, literal in _equality_literals(ast.where):
            profile = profiles.get(col)
            if profile is None or not profile.is_categorical:
                continue
            norm = normalize_phrase(literal)
            if norm in values_by_attr.get(profile.attribute_id, set()):
                continue
            if (col, literal) in seen_pairs:
                continue
            seen_pairs.add((col, literal))
            unseen.append(
                UnseenValue(col, literal, _suggest_canonical(index, profile.attribute_id, literal))
            )

    violations = _shape_violations(ast)

    return ValidationReport(
        unknown_columns=tuple(unknown),
        unseen_values=tuple(unseen),
        subset_violations=tuple(violations),
    )


def _shape_violations(ast: QueryAST) -> list[str]:
    violations: list[str] = []
    has_aggregates = any(contains_aggregate(i.expr) for i in ast.select)

    if ast.star and ast.group_by:
        violations.append("SELECT * cannot be combined with GROUP BY")
        return violations

    if ast.group_by:
        grouped = set(ast.group_by)
        for item in ast.select:
            if contains_aggregate(item.expr):
                stray = [
                    c for c in column_refs(item.expr, outside_aggregates=True) if c not in grouped
                ]
                if stray:
                    violations.append(
                        f"select item {print_expr(item.expr)!r} references ungrouped column {stray[0]!r}"
                    )
            elif isinstance(item.expr, ColumnRef):
                if item.expr.name not in grouped:
                    violations.append(
                        f"select item {item.expr.name!r} is not in GROUP BY"
                    )
            elif column_refs(item.expr):
                violations.append(
                    f"select item {print_expr(item.expr)!r} must be a grouped column or an aggregate"
                )
    elif has_aggregates:
        for item in ast.select:
            stray = column_refs(item.expr, outside_aggregates=True)
            if stray:
                violations.append(
                    f"select item {print_expr(item.expr)!r} mixes aggregates with bare column {stray[0]!r}"
                )
    return violations


def _all_column_refs(ast: QueryAST) -> list[str]:
    names: list[str] = []
    for item in ast.select:
        names.extend(column_refs(item.expr))
    if ast.where is not None:
        names.extend(column_refs(ast.where))
    names.extend(ast.group_by)
    for o in ast.order_by:
        names.extend(column_refs(o.expr))
    return names
