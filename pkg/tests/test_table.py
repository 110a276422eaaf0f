import datetime as dt

import pytest
from hypothesis import given, settings, strategies as st

from rtq.errors import EmptyTable, MalformedCsv
from rtq.table import (
    CategoricalPolicy,
    DataType,
    Table,
    deserialize_table,
    get_attribute_names_and_types,
    load_table,
    normalize_column_name,
    profile_column,
    serialize_table,
    table_to_csv,
)


class TestLoadTable:
    def test_basic_inference(self):
        t = load_table("product,sales\nOneView,100\nData Smasher,250", name="t")
        assert t.row_count == 2
        assert [c.dtype for c in t.columns] == [DataType.TEXT, DataType.INTEGER]
        assert t.columns[0].values == ("OneView", "Data Smasher")
        assert t.columns[1].values == (100, 250)

    def test_header_only_is_empty(self):
        with pytest.raises(EmptyTable):
            load_table("product,sales\n")

    def test_mixed_column_falls_back_to_text(self):
        t = load_table("profit\n1.5\n2\nx")
        assert t.columns[0].dtype == DataType.TEXT
        assert t.columns[0].values == ("1.5", "2", "x")

    def test_float_column(self):
        t = load_table("profit\n1.5\n2\n")
        assert t.columns[0].dtype == DataType.FLOAT
        assert t.columns[0].values == (1.5, 2.0)

    def test_boolean_and_date(self):
        t = load_table("flag,day\ntrue,2023-01-15\nNO,2024-02-29")
        assert t.columns[0].dtype == DataType.BOOLEAN
        assert t.columns[0].values == (True, False)
        assert t.columns[1].dtype == DataType.DATE
        assert t.columns[1].values == (dt.date(2023, 1, 15), dt.date(2024, 2, 29))

    def test_invalid_date_is_text(self):
        t = load_table("day\n2023-13-45\n2023-01-02")
        assert t.columns[0].dtype == DataType.TEXT

    def test_nulls_do_not_affect_type(self):
        t = load_table("n\n1\nNA\nn/a\n4")
        assert t.columns[0].dtype == DataType.INTEGER
        assert t.columns[0].values == (1, None, None, 4)

    def test_blank_lines_skipped(self):
        t = load_table("a,b\n1,2\n\n3,4\n")
        assert t.row_count == 2

    def test_ragged_row_reports_row_number(self):
        with pytest.raises(MalformedCsv) as err:
            load_table("a,b\n1,2\n3\n")
        assert err.value.row == 2

    def test_bad_utf8(self):
        with pytest.raises(MalformedCsv):
            load_table(b"a\n\xff\xfe")

    def test_duplicate_headers_get_suffixes(self):
        t = load_table("x,x,X\n1,2,3")
        assert [c.normalized_name for c in t.columns] == ["x", "x_2", "x_3"]

    def test_custom_delimiter(self):
        t = load_table("a;b\n1;2", delimiter=";")
        assert t.columns[0].values == (1,)

    def test_headerless(self):
        t = load_table("1,2\n3,4", header=False)
        assert [c.normalized_name for c in t.columns] == ["column_1", "column_2"]
        assert t.row_count == 2

    def test_quoted_fields(self):
        t = load_table('name,note\n"Smith, Jane","said ""hi"""\n')
        assert t.columns[0].values == ("Smith, Jane",)
        assert t.columns[1].values == ('said "hi"',)

    def test_name_normalization(self):
        assert normalize_column_name("  Sub-Region  ", 0) == "sub_region"
        assert normalize_column_name("Sales ($)", 1) == "sales"
        assert normalize_column_name("???", 4) == "column_5"


class TestProfiles:
    def test_fixture_categoricals(self, b2b_table):
        entries = get_attribute_names_and_types(b2b_table)
        assert [name for name, _, _ in entries] == [
            "product", "customer", "subregion", "sales", "profit",
        ]
        flags = {name: prof.is_categorical for name, _, prof in entries}
        assert flags == {
            "product": True, "customer": True, "subregion": True,
            "sales": False, "profit": False,
        }

    def test_boolean_always_categorical(self):
        t = load_table("flag\ntrue\nfalse")
        prof = profile_column(t, 0)
        assert prof.is_categorical

    def test_all_distinct_text_not_categorical(self):
        rows = "\n".join(f"value{i}" for i in range(1000))
        t = load_table("c\n" + rows)
        prof = profile_column(t, 0)
        assert prof.distinct_count == 1000
        assert not prof.is_categorical

    def test_small_all_distinct_excluded_by_ratio(self):
        rows = "\n".join(f"w{i}" for i in range(10))
        t = load_table("c\n" + rows)
        assert not profile_column(t, 0).is_categorical

    def test_policy_cap(self):
        policy = CategoricalPolicy()
        assert policy.is_categorical(DataType.TEXT, 400, 10_000)
        assert not policy.is_categorical(DataType.TEXT, 10_001, 100_000)
        assert not policy.is_categorical(DataType.INTEGER, 2, 100)

    def test_empty_table_profile_guard(self):
        t = Table(name="t", columns=(), row_count=0)
        with pytest.raises(EmptyTable):
            get_attribute_names_and_types(t)


_cell_text = st.one_of(
    st.just(""),
    st.just("NA"),
    st.text(alphabet="abcdef ghij", min_size=1, max_size=8),
    st.integers(-1000, 1000).map(str),
    st.floats(-100, 100, allow_nan=False).map(lambda f: f"{f:.3f}"),
)


@st.composite
def csv_tables(draw):
    n_cols = draw(st.integers(1, 4))
    n_rows = draw(st.integers(1, 30))
    headers = [f"c{i}" for i in range(n_cols)]
    lines = [",".join(headers)]
    for _ in range(n_rows):
        cells = [draw(_cell_text).replace(",", " ") for _ in range(n_cols)]
        if not any(cells):
            cells[0] = "NA"  # a fully blank line would be skipped as a record
        lines.append(",".join(cells))
    return "\n".join(lines)


class TestProperties:
    @given(csv_tables())
    @settings(max_examples=60, deadline=None)
    def test_serialize_round_trip(self, text):
        table = load_table(text, name="t")
        assert deserialize_table(serialize_table(table)) == table

    @given(csv_tables())
    @settings(max_examples=60, deadline=None)
    def test_distinct_count_matches_brute_force(self, text):
        table = load_table(text, name="t")
        for i, col in enumerate(table.columns):
            prof = profile_column(table, i)
            non_null = [v for v in col.values if v is not None]
            assert prof.distinct_count == len(set(non_null))
            assert prof.null_count == len(col.values) - len(non_null)
            assert prof.distinct_count <= table.row_count

    @given(csv_tables(), st.randoms())
    @settings(max_examples=40, deadline=None)
    def test_inference_independent_of_row_order(self, text, rng):
        table = load_table(text, name="t")
        lines = text.splitlines()
        body = lines[1:]
        rng.shuffle(body)
        shuffled = load_table("\n".join([lines[0]] + body), name="t")
        assert [c.dtype for c in table.columns] == [c.dtype for c in shuffled.columns]

    @given(csv_tables())
    @settings(max_examples=30, deadline=None)
    def test_same_bytes_same_schema(self, text):
        a = load_table(text, name="t")
        b = load_table(text, name="t")
        assert a == b

    def test_csv_export_reimports_cells(self, b2b_table):
        again = load_table(table_to_csv(b2b_table), name=b2b_table.name)
        assert again == b2b_table
