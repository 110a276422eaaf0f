import random

import pytest

from rtq.engine import parse_sql, print_query
from rtq.engine.nodes import (
    Aggregate,
    Between,
    Binary,
    ColumnRef,
    InList,
    Like,
    Literal,
    QueryAST,
    SelectItem,
)
from rtq.errors import SqlSyntaxError, UnsupportedFeature

from .genrandom import random_query, random_table


class TestParseBasics:
    def test_aggregate_with_equality(self):
        ast = parse_sql("SELECT AVG(profit) FROM sales WHERE subregion = 'ANZ'")
        assert ast.from_table == "sales"
        assert ast.select == (SelectItem(Aggregate("AVG", ColumnRef("profit"))),)
        assert ast.where == Binary("=", ColumnRef("subregion"), Literal("ANZ"))

    def test_keywords_case_insensitive(self):
        ast = parse_sql("select Sales from T where Sales >= 10 order by Sales desc limit 3")
        assert ast.limit == 3
        assert ast.order_by[0].descending

    def test_string_escapes(self):
        ast = parse_sql("SELECT a FROM t WHERE a = 'O''Hare'")
        assert ast.where.right == Literal("O'Hare")

    def test_star(self):
        ast = parse_sql("SELECT * FROM t")
        assert ast.star and ast.select == ()

    def test_group_order_limit(self):
        ast = parse_sql(
            "SELECT region, SUM(sales) AS total FROM t "
            "GROUP BY region ORDER BY SUM(sales) DESC, region ASC LIMIT 10"
        )
        assert ast.group_by == ("region",)
        assert ast.select[1].alias == "total"
        assert len(ast.order_by) == 2

    def test_not_like_in_between(self):
        ast = parse_sql(
            "SELECT a FROM t WHERE a NOT LIKE 'x%' AND b NOT IN (1, 2) AND c NOT BETWEEN 1 AND 5"
        )
        left = ast.where.left.left
        assert isinstance(left, Like) and left.negated
        assert isinstance(ast.where.left.right, InList) and ast.where.left.right.negated
        assert isinstance(ast.where.right, Between) and ast.where.right.negated

    def test_arithmetic_precedence(self):
        ast = parse_sql("SELECT a + b * 2 FROM t")
        expr = ast.select[0].expr
        assert expr.op == "+"
        assert expr.right.op == "*"

    def test_negative_literal_folded(self):
        ast = parse_sql("SELECT a FROM t WHERE a > -3")
        assert ast.where.right == Literal(-3)

    def test_boolean_and_null_literals(self):
        ast = parse_sql("SELECT a FROM t WHERE b = TRUE OR c != FALSE")
        assert ast.where.left.right == Literal(True)

    def test_semicolon_allowed(self):
        assert parse_sql("SELECT a FROM t;").from_table == "t"


class TestParseErrors:
    def test_join_rejected(self):
        with pytest.raises(UnsupportedFeature) as err:
            parse_sql("SELECT * FROM a JOIN b")
        assert err.value.feature == "join"

    def test_implicit_join_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_sql("SELECT * FROM a, b")

    def test_missing_select_list(self):
        with pytest.raises(SqlSyntaxError):
            parse_sql("SELECT FROM t")

    def test_subquery_rejected(self):
        with pytest.raises(UnsupportedFeature) as err:
            parse_sql("SELECT a FROM t WHERE a IN (SELECT b FROM u)")
        assert err.value.feature == "subquery"

    def test_ddl_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_sql("DROP TABLE t")

    def test_distinct_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_sql("SELECT DISTINCT a FROM t")

    def test_having_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_sql("SELECT a, COUNT(*) FROM t GROUP BY a HAVING COUNT(*) > 1")

    def test_is_null_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_sql("SELECT a FROM t WHERE a IS NULL")

    def test_unknown_function(self):
        with pytest.raises(UnsupportedFeature):
            parse_sql("SELECT LOWER(a) FROM t")

    def test_nested_aggregate(self):
        with pytest.raises(UnsupportedFeature) as err:
            parse_sql("SELECT AVG(SUM(a)) FROM t")
        assert err.value.feature == "nested aggregate"

    def test_nested_aggregate_through_parens(self):
        with pytest.raises(UnsupportedFeature):
            parse_sql("SELECT AVG((SUM(a))) FROM t")

    def test_trailing_garbage(self):
        with pytest.raises(SqlSyntaxError):
            parse_sql("SELECT a FROM t extra nonsense ,")

    def test_unterminated_string(self):
        with pytest.raises(SqlSyntaxError):
            parse_sql("SELECT a FROM t WHERE a = 'oops")

    def test_empty_statement(self):
        with pytest.raises(SqlSyntaxError):
            parse_sql("   ")

    def test_error_carries_position(self):
        with pytest.raises(SqlSyntaxError) as err:
            parse_sql("SELECT FROM t")
        assert err.value.position == 7


class TestPrinterRoundTrip:
    def test_handwritten_cases(self):
        cases = [
            "SELECT * FROM t",
            "SELECT a, b AS bee FROM t WHERE a = 'x' ORDER BY a ASC LIMIT 2",
            "SELECT AVG(a + b) FROM t WHERE NOT (a > 1 AND b < 2)",
            "SELECT COUNT(*) FROM t WHERE a IN (1, 2, 3) OR b LIKE 'pre%'",
            "SELECT a FROM t WHERE a BETWEEN 1 AND 10",
            "SELECT a - (b - 1) FROM t",
        ]
        for sql in cases:
            ast = parse_sql(sql)
            assert parse_sql(print_query(ast)) == ast, sql

    def test_random_round_trip(self):
        rng = random.Random(2024)
        for _ in range(200):
            table = random_table(rng, max_rows=5)
            ast = random_query(rng, table)
            printed = print_query(ast)
            assert parse_sql(printed) == ast, printed

    def test_shape_preserving_parens(self):
        ast = QueryAST(
            select=(SelectItem(Binary("+", Literal(1), Binary("+", Literal(2), Literal(3)))),),
            from_table="t",
        )
        assert parse_sql(print_query(ast)) == ast

    def test_not_prints(self):
        ast = parse_sql("SELECT a FROM t WHERE NOT a = 1")
        assert parse_sql(print_query(ast)) == ast
