"""Recursive-descent parser for the single-table SELECT subset.

Anything outside the subset (joins, subqueries, DDL/DML, DISTINCT, HAVING,
IS NULL, unknown functions) is rejected with UnsupportedFeature naming the
feature; malformed input raises SqlSyntaxError with a position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SqlSyntaxError, UnsupportedFeature
from .nodes import (
    AGGREGATE_FUNCS,
    Aggregate,
    Between,
    Binary,
    ColumnRef,
    Expr,
    InList,
    Like,
    Literal,
    OrderItem,
    QueryAST,
    SelectItem,
    Unary,
)

_KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "ORDER", "BY", "LIMIT",
    "AND", "OR", "NOT", "LIKE", "IN", "BETWEEN", "AS", "ASC", "DESC",
    "TRUE", "FALSE", "NULL", "IS",
    # recognized only to reject clearly
    "JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "CROSS", "ON", "UNION",
    "HAVING", "DISTINCT", "OFFSET", "INSERT", "UPDATE", "DELETE",
    "CREATE", "DROP", "ALTER",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:[^']|'')*')
  | (?P<op><=|>=|<>|!=|=|<|>|\(|\)|,|\*|\+|-|/|;)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | string | op | eof
    text: str
    pos: int

    @property
    def keyword(self) -> str | None:
        if self.kind == "ident" and self.text.upper() in _KEYWORDS:
            return self.text.upper()
        return None


def _tokenize_sql(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos] == "'":
                raise SqlSyntaxError("unterminated string literal", pos)
            raise SqlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append(_Token(m.lastgroup, m.group(), m.start()))
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0
        self._in_aggregate = False

    # -- plumbing -----------------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept_kw(self, *keywords: str) -> _Token | None:
        if self.peek().keyword in keywords:
            return self.advance()
        return None

    def accept_op(self, *ops: str) -> _Token | None:
        tok = self.peek()
        if tok.kind == "op" and tok.text in ops:
            return self.advance()
        return None

    def expect_kw(self, keyword: str) -> _Token:
        tok = self.accept_kw(keyword)
        if tok is None:
            raise SqlSyntaxError(
                f"unexpected token {self.peek().text or 'end of input'!r}",
                self.peek().pos,
                expected=keyword,
            )
        return tok

    def expect_op(self, op: str) -> _Token:
        tok = self.accept_op(op)
        if tok is None:
            raise SqlSyntaxError(
                f"unexpected token {self.peek().text or 'end of input'!r}",
                self.peek().pos,
                expected=f"'{op}'",
            )
        return tok

    def ident(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "ident" or tok.keyword is not None:
            raise SqlSyntaxError(
                f"unexpected token {tok.text or 'end of input'!r}", tok.pos, expected=what
            )
        return self.advance().text

    # -- statement ----------------------------------------------------------

    def parse_query(self) -> QueryAST:
        first = self.peek()
        if first.keyword in ("INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER"):
            raise UnsupportedFeature(first.keyword.lower())
        self.expect_kw("SELECT")
        if self.peek().keyword == "DISTINCT":
            raise UnsupportedFeature("distinct")

        star = False
        items: tuple[SelectItem, ...] = ()
        if self.accept_op("*"):
            star = True
        else:
            items = tuple(self._select_list())

        self.expect_kw("FROM")
        table = self.ident("table name")
        nxt = self.peek()
        if nxt.keyword in ("JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "CROSS"):
            raise UnsupportedFeature("join")
        if nxt.kind == "op" and nxt.text == ",":
            raise UnsupportedFeature("join")

        where = None
        if self.accept_kw("WHERE"):
            where = self._expression()

        group_by: tuple[str, ...] = ()
        if self.accept_kw("GROUP"):
            self.expect_kw("BY")
            cols = [self.ident("column name")]
            while self.accept_op(","):
                cols.append(self.ident("column name"))
            group_by = tuple(cols)

        if self.peek().keyword == "HAVING":
            raise UnsupportedFeature("having")

        order_by: tuple[OrderItem, ...] = ()
        if self.accept_kw("ORDER"):
            self.expect_kw("BY")
            entries = [self._order_item()]
            while self.accept_op(","):
                entries.append(self._order_item())
            order_by = tuple(entries)

        limit = None
        if self.accept_kw("LIMIT"):
            tok = self.peek()
            if tok.kind != "number" or "." in tok.text or "e" in tok.text.lower():
                raise SqlSyntaxError(
                    f"unexpected token {tok.text!r}", tok.pos, expected="non-negative integer"
                )
            limit = int(self.advance().text)

        if self.peek().keyword in ("UNION",):
            raise UnsupportedFeature("union")
        self.accept_op(";")
        tail = self.peek()
        if tail.kind != "eof":
            raise SqlSyntaxError(
                f"unexpected token {tail.text!r} after statement", tail.pos
            )

        return QueryAST(
            select=items,
            from_table=table,
            star=star,
            where=where,
            group_by=group_by,
            order_by=order_by,
            limit=limit,
        )

    def _select_list(self) -> list[SelectItem]:
        items = [self._select_item()]
        while self.accept_op(","):
            items.append(self._select_item())
        return items

    def _select_item(self) -> SelectItem:
        expr = self._expression()
        alias = None
        if self.accept_kw("AS"):
            alias = self.ident("alias")
        elif self.peek().kind == "ident" and self.peek().keyword is None:
            alias = self.advance().text
        return SelectItem(expr, alias)

    def _order_item(self) -> OrderItem:
        expr = self._expression()
        descending = False
        if self.accept_kw("DESC"):
            descending = True
        else:
            self.accept_kw("ASC")
        return OrderItem(expr, descending)

    # -- expressions ----------------------------------------------------------
    # precedence: OR < AND < NOT < comparison < additive < multiplicative < unary

    def _expression(self) -> Expr:
        return self._or()

    def _or(self) -> Expr:
        expr = self._and()
        while self.accept_kw("OR"):
            expr = Binary("OR", expr, self._and())
        return expr

    def _and(self) -> Expr:
        expr = self._not()
        while self.accept_kw("AND"):
            expr = Binary("AND", expr, self._not())
        return expr

    def _not(self) -> Expr:
        if self.accept_kw("NOT"):
            return Unary("NOT", self._not())
        return self._comparison()

    def _comparison(self) -> Expr:
        left = self._additive()

        if self.peek().keyword == "IS":
            raise UnsupportedFeature("is-null")

        negated = False
        if self.peek().keyword == "NOT" and self.tokens[self.i + 1].keyword in (
            "LIKE",
            "IN",
            "BETWEEN",
        ):
            self.advance()
            negated = True

        if self.accept_kw("LIKE"):
            tok = self.peek()
            if tok.kind != "string":
                raise SqlSyntaxError(
                    f"unexpected token {tok.text!r}", tok.pos, expected="string pattern"
                )
            self.advance()
            return Like(left, _unquote(tok.text), negated)

        if self.accept_kw("IN"):
            self.expect_op("(")
            if self.peek().keyword == "SELECT":
                raise UnsupportedFeature("subquery")
            values = [self._literal()]
            while self.accept_op(","):
                values.append(self._literal())
            self.expect_op(")")
            return InList(left, tuple(values), negated)

        if self.accept_kw("BETWEEN"):
            low = self._additive()
            self.expect_kw("AND")
            high = self._additive()
            return Between(left, low, high, negated)

        if negated:
            raise SqlSyntaxError(
                "NOT must be followed by LIKE, IN, or BETWEEN here", self.peek().pos
            )

        op_tok = self.accept_op("=", "!=", "<>", "<=", ">=", "<", ">")
        if op_tok:
            op = "!=" if op_tok.text == "<>" else op_tok.text
            return Binary(op, left, self._additive())
        return left

    def _additive(self) -> Expr:
        expr = self._multiplicative()
        while True:
            tok = self.accept_op("+", "-")
            if not tok:
                return expr
            expr = Binary(tok.text, expr, self._multiplicative())

    def _multiplicative(self) -> Expr:
        expr = self._unary()
        while True:
            tok = self.accept_op("*", "/")
            if not tok:
                return expr
            expr = Binary(tok.text, expr, self._unary())

    def _unary(self) -> Expr:
        if self.accept_op("-"):
            operand = self._unary()
            # fold a negated numeric literal so printing round-trips
            if isinstance(operand, Literal) and isinstance(operand.value, (int, float)):
                return Literal(-operand.value)
            return Unary("-", operand)
        return self._primary()

    def _literal(self) -> Literal:
        negative = bool(self.accept_op("-"))
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            value = _number(tok.text)
            return Literal(-value if negative else value)
        if negative:
            raise SqlSyntaxError(
                f"unexpected token {tok.text!r}", tok.pos, expected="number"
            )
        if tok.kind == "string":
            self.advance()
            return Literal(_unquote(tok.text))
        if tok.keyword == "TRUE":
            self.advance()
            return Literal(True)
        if tok.keyword == "FALSE":
            self.advance()
            return Literal(False)
        if tok.keyword == "NULL":
            self.advance()
            return Literal(None)
        raise SqlSyntaxError(
            f"unexpected token {tok.text or 'end of input'!r}", tok.pos, expected="literal"
        )

    def _primary(self) -> Expr:
        tok = self.peek()

        if tok.kind == "op" and tok.text == "(":
            self.advance()
            if self.peek().keyword == "SELECT":
                raise UnsupportedFeature("subquery")
            inner = self._expression()
            self.expect_op(")")
            return inner

        if tok.kind in ("number", "string") or tok.keyword in ("TRUE", "FALSE", "NULL"):
            return self._literal()

        if tok.kind == "ident":
            upper = tok.text.upper()
            is_call = (
                self.tokens[self.i + 1].kind == "op"
                and self.tokens[self.i + 1].text == "("
            )
            if is_call:
                if upper not in AGGREGATE_FUNCS:
                    raise UnsupportedFeature(f"function {tok.text}")
                if self._in_aggregate:
                    raise UnsupportedFeature("nested aggregate")
                self.advance()  # name
                self.advance()  # (
                if upper == "COUNT" and self.accept_op("*"):
                    self.expect_op(")")
                    return Aggregate("COUNT", None)
                self._in_aggregate = True
                try:
                    arg = self._additive()
                finally:
                    self._in_aggregate = False
                self.expect_op(")")
                return Aggregate(upper, arg)
            if tok.keyword is None:
                self.advance()
                return ColumnRef(tok.text)

        raise SqlSyntaxError(
            f"unexpected token {tok.text or 'end of input'!r}", tok.pos, expected="expression"
        )


def _number(text: str) -> int | float:
    if "." in text or "e" in text.lower():
        return float(text)
    return int(text)


def _unquote(text: str) -> str:
    return text[1:-1].replace("''", "'")


def parse_sql(text: str) -> QueryAST:
    """Parse one SELECT statement of the supported subset."""
    if not text or not text.strip():
        raise SqlSyntaxError("empty statement", 0, expected="SELECT")
    return _Parser(_tokenize_sql(text)).parse_query()
