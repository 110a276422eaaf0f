"""Seeded random tables and in-grammar queries for oracle-equivalence checks."""

from __future__ import annotations

import datetime as dt
import random
import string

from rtq.engine.nodes import (
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
)
from rtq.table import Column, DataType, Table

_WORDS = (
    "alpha beta gamma delta epsilon omega north south east west "
    "apple pear plum cherry grape mango lemon lime peach fig "
    "red green blue amber violet teal coral onyx pearl jade"
).split()

_TYPES = (DataType.TEXT, DataType.INTEGER, DataType.FLOAT, DataType.BOOLEAN, DataType.DATE)


def random_table(rng: random.Random, max_rows: int = 200, max_cols: int = 6) -> Table:
    n_rows = rng.randint(1, max_rows)
    n_cols = rng.randint(1, max_cols)
    columns = []
    for i in range(n_cols):
        dtype = rng.choice(_TYPES)
        name = f"col_{string.ascii_lowercase[i]}"
        values = []
        if dtype is DataType.TEXT:
            pool_size = rng.randint(2, 8)
            pool = rng.sample(_WORDS, pool_size)
            if rng.random() < 0.4:
                pool[0] = pool[0] + " " + rng.choice(_WORDS)
        for _ in range(n_rows):
            if rng.random() < 0.08:
                values.append(None)
                continue
            if dtype is DataType.TEXT:
                values.append(rng.choice(pool))
            elif dtype is DataType.INTEGER:
                values.append(rng.randint(-50, 50))
            elif dtype is DataType.FLOAT:
                values.append(round(rng.uniform(-100, 100), 3))
            elif dtype is DataType.BOOLEAN:
                values.append(rng.random() < 0.5)
            else:
                values.append(dt.date(2023, 1, 1) + dt.timedelta(days=rng.randint(0, 400)))
        columns.append(
            Column(name=name, normalized_name=name, dtype=dtype, values=tuple(values))
        )
    return Table(name="rand", columns=tuple(columns), row_count=n_rows)


def _sample_literal(rng: random.Random, col: Column) -> Literal:
    non_null = [v for v in col.values if v is not None]
    if non_null and rng.random() < 0.7:
        value = rng.choice(non_null)
    else:
        if col.dtype is DataType.TEXT:
            value = rng.choice(_WORDS)
        elif col.dtype is DataType.INTEGER:
            value = rng.randint(-50, 50)
        elif col.dtype is DataType.FLOAT:
            value = round(rng.uniform(-100, 100), 3)
        elif col.dtype is DataType.BOOLEAN:
            value = rng.random() < 0.5
        else:
            value = dt.date(2023, 1, 1) + dt.timedelta(days=rng.randint(0, 400))
    if col.dtype is DataType.DATE:
        return Literal(value.isoformat() if isinstance(value, dt.date) else value)
    return Literal(value)


def _numeric_expr(rng: random.Random, numeric_cols: list[Column], depth: int = 0):
    if not numeric_cols or depth >= 2 or rng.random() < 0.5:
        if numeric_cols and rng.random() < 0.8:
            return ColumnRef(rng.choice(numeric_cols).normalized_name)
        return Literal(rng.randint(-20, 20))
    op = rng.choice(["+", "-", "*", "/"])
    left = _numeric_expr(rng, numeric_cols, depth + 1)
    right = _numeric_expr(rng, numeric_cols, depth + 1)
    if op == "/" and isinstance(right, Literal) and right.value == 0:
        right = Literal(3)
    return Binary(op, left, right)


def _predicate(rng: random.Random, table: Table, depth: int = 0):
    cols = list(table.columns)
    if depth < 2 and rng.random() < 0.35:
        op = rng.choice(["AND", "OR"])
        return Binary(op, _predicate(rng, table, depth + 1), _predicate(rng, table, depth + 1))
    if depth < 2 and rng.random() < 0.12:
        from rtq.engine.nodes import Unary

        return Unary("NOT", _predicate(rng, table, depth + 1))

    col = rng.choice(cols)
    ref = ColumnRef(col.normalized_name)
    roll = rng.random()
    if col.dtype is DataType.TEXT and roll < 0.25:
        base = next((v for v in col.values if v is not None), "x")
        frag = base[: max(1, len(base) // 2)]
        pattern = rng.choice([frag + "%", "%" + frag + "%", base, frag + "_%"])
        return Like(ref, pattern, negated=rng.random() < 0.3)
    if roll < 0.45:
        items = tuple(_sample_literal(rng, col) for _ in range(rng.randint(1, 3)))
        return InList(ref, items, negated=rng.random() < 0.3)
    if col.dtype in (DataType.INTEGER, DataType.FLOAT, DataType.DATE) and roll < 0.65:
        a = _sample_literal(rng, col)
        b = _sample_literal(rng, col)
        return Between(ref, a, b, negated=rng.random() < 0.3)
    op = rng.choice(["=", "!=", "<", "<=", ">", ">="])
    if col.dtype is DataType.BOOLEAN and op not in ("=", "!="):
        op = rng.choice(["=", "!="])
    return Binary(op, ref, _sample_literal(rng, col))


def random_query(rng: random.Random, table: Table) -> QueryAST:
    cols = list(table.columns)
    numeric = [c for c in cols if c.dtype in (DataType.INTEGER, DataType.FLOAT)]
    where = _predicate(rng, table) if rng.random() < 0.75 else None

    shape = rng.random()
    group_by: tuple[str, ...] = ()
    star = False
    if shape < 0.2:
        star = True
        select: tuple[SelectItem, ...] = ()
    elif shape < 0.45 and cols:
        n = rng.randint(1, min(3, len(cols)))
        picked = rng.sample(cols, n)
        items = []
        for c in picked:
            if c.dtype in (DataType.INTEGER, DataType.FLOAT) and rng.random() < 0.3:
                items.append(SelectItem(_numeric_expr(rng, [c]), alias=f"x_{c.normalized_name}"))
            else:
                items.append(SelectItem(ColumnRef(c.normalized_name)))
        select = tuple(items)
    else:
        aggs = []
        for _ in range(rng.randint(1, 3)):
            func = rng.choice(["COUNT", "SUM", "AVG", "MIN", "MAX", "STDDEV"])
            if func == "COUNT":
                arg = None if rng.random() < 0.5 else ColumnRef(rng.choice(cols).normalized_name)
                aggs.append(Aggregate("COUNT", arg))
            elif func in ("SUM", "AVG", "STDDEV"):
                if not numeric:
                    aggs.append(Aggregate("COUNT", None))
                else:
                    aggs.append(Aggregate(func, _numeric_expr(rng, numeric)))
            else:
                col = rng.choice(cols)
                aggs.append(Aggregate(func, ColumnRef(col.normalized_name)))
        if rng.random() < 0.5 and cols:
            n_group = rng.randint(1, min(2, len(cols)))
            grouped_cols = rng.sample(cols, n_group)
            group_by = tuple(c.normalized_name for c in grouped_cols)
            select = tuple(
                [SelectItem(ColumnRef(g)) for g in group_by]
                + [SelectItem(a) for a in aggs]
            )
        else:
            select = tuple(SelectItem(a) for a in aggs)

    order_by: tuple[OrderItem, ...] = ()
    if rng.random() < 0.5:
        if star:
            candidates = [ColumnRef(c.normalized_name) for c in cols]
        elif group_by:
            candidates = [i.expr for i in select]
        else:
            candidates = [i.expr for i in select] or [ColumnRef(cols[0].normalized_name)]
        n_order = rng.randint(1, min(2, len(candidates)))
        picked = rng.sample(range(len(candidates)), n_order)
        order_by = tuple(
            OrderItem(candidates[i], descending=rng.random() < 0.5) for i in picked
        )

    limit = rng.randint(0, table.row_count + 3) if rng.random() < 0.3 else None

    return QueryAST(
        select=select,
        from_table=table.name,
        star=star,
        where=where,
        group_by=group_by,
        order_by=order_by,
        limit=limit,
    )
