import io
import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from rtq.errors import CorruptIndex, NotCategorical, UnsupportedVersion
from rtq.index import (
    PostingKind,
    build_inverse_index,
    create_index,
    extract_unique_values,
    filter_categorical_attributes,
    load_index,
    lookup,
    persist_index,
)
from rtq.llm import LlmConfig, MockLlm
from rtq.synonyms import (
    BuiltinSynonymProvider,
    LlmSynonymProvider,
    generate_synonyms,
    parse_synonym_file,
)
from rtq.table import load_table, get_attribute_names_and_types
from rtq.text import fuzzy_threshold, tokenize

from .conftest import build_index_for
from .oracles import brute_force_value_triples, oracle_edit_distance


def attr_name(index, posting):
    return index.attribute_profiles[posting.attribute_id].normalized_name


def all_lookup_results(index):
    out = {}
    for key in list(index.token_map) + list(index.phrase_map):
        for mode in ("exact", "prefix", "fuzzy"):
            out[(key, mode)] = [
                (h.posting.kind.value, h.posting.attribute_id, h.posting.value_id,
                 h.matched, round(h.score, 12))
                for h in lookup(index, key, mode)
            ]
    return out


class TestFilterCategorical:
    def test_fixture(self, b2b_table):
        profiles = [p for _, _, p in get_attribute_names_and_types(b2b_table)]
        ids = filter_categorical_attributes(profiles)
        names = [profiles[i].normalized_name for i in ids]
        assert names == ["product", "customer", "subregion"]

    def test_all_numeric(self):
        t = load_table("a,b\n1,2.5\n3,4.5")
        profiles = [p for _, _, p in get_attribute_names_and_types(t)]
        assert filter_categorical_attributes(profiles) == []

    def test_all_distinct_small_column_excluded(self):
        t = load_table("c\n" + "\n".join(f"w{i}" for i in range(10)))
        profiles = [p for _, _, p in get_attribute_names_and_types(t)]
        assert filter_categorical_attributes(profiles) == []


class TestExtractUniqueValues:
    def test_counts(self):
        t = load_table("customer,x\nAllianz,1\nCostco,2\nAllianz,3\nCostco,4")
        entries = extract_unique_values(t, 0)
        assert [(e.canonical_text, e.frequency) for e in entries] == [
            ("Allianz", 2),
            ("Costco", 2),
        ]

    def test_all_nulls_yield_no_entries(self):
        t = load_table("c,x\nNA,1\nn/a,2")
        assert extract_unique_values(t, 0) == []

    def test_case_folded_distinctness(self):
        t = load_table("c,x\nallianz,1\nAllianz,2\nallianz,3\nallianz,4")
        entries = extract_unique_values(t, 0)
        assert len(entries) == 1
        assert entries[0].canonical_text == "allianz"
        assert entries[0].frequency == 4

    def test_not_categorical_guard(self, b2b_table):
        with pytest.raises(NotCategorical):
            extract_unique_values(b2b_table, 3)  # sales: Integer


class TestSynonyms:
    def test_builtin_profit(self):
        entries = generate_synonyms(["profit"], BuiltinSynonymProvider())
        assert {(e.synonym_text, e.source) for e in entries} == {
            ("earnings", "builtin"),
            ("margin", "builtin"),
        }

    def test_no_dictionary_hit(self):
        assert generate_synonyms(["zorp"], BuiltinSynonymProvider()) == []

    def test_never_echoes_own_name(self, tmp_path):
        f = tmp_path / "syn.txt"
        f.write_text("sales: sales, revenue\n")
        entries = generate_synonyms(["sales"], BuiltinSynonymProvider(f))
        assert [e.synonym_text for e in entries] == ["revenue"]

    def test_parse_synonym_file(self):
        mapping = parse_synonym_file("# comment\nprofit: earnings, margin\nbad line\n")
        assert mapping == {"profit": ["earnings", "margin"]}

    def test_llm_provider_parses_lines(self):
        mock = MockLlm(rules=[(r"column name 'sales'", "revenue\nturnover")], synthesize=False)
        provider = LlmSynonymProvider(LlmConfig(), provider=mock)
        entries = generate_synonyms(["sales"], provider)
        assert [(e.synonym_text, e.source) for e in entries] == [
            ("revenue", "llm"),
            ("turnover", "llm"),
        ]


class TestBuildIndex:
    def test_value_postings(self, b2b_index):
        hits = lookup(b2b_index, "oneview", "exact")
        assert len(hits) == 1
        posting = hits[0].posting
        assert posting.kind is PostingKind.VALUE
        assert attr_name(b2b_index, posting) == "product"

    def test_multiword_value_token_and_phrase(self, b2b_index):
        token_hits = lookup(b2b_index, "smasher", "exact")
        assert [attr_name(b2b_index, h.posting) for h in token_hits] == ["product"]
        value = b2b_index.value_entries[token_hits[0].posting.value_id]
        assert value.canonical_text == "Data Smasher"
        phrase_hits = lookup(b2b_index, "data smasher", "exact")
        assert phrase_hits[0].posting == token_hits[0].posting

    def test_attribute_and_synonym_postings(self, b2b_index):
        exact = lookup(b2b_index, "profit", "exact")
        assert any(h.posting.kind is PostingKind.ATTRIBUTE_NAME for h in exact)
        syn = lookup(b2b_index, "earnings", "exact")
        assert [h.posting.kind for h in syn] == [PostingKind.ATTRIBUTE_SYNONYM]
        assert attr_name(b2b_index, syn[0].posting) == "profit"

    def test_empty_categorical_set(self):
        t = load_table("a,b\n1,2\n3,4")
        profiles = [p for _, _, p in get_attribute_names_and_types(t)]
        idx = build_inverse_index(profiles, [], {}, table_name="t", row_count=2)
        assert idx.value_entries == []
        kinds = {p.kind for ps in idx.token_map.values() for p in ps}
        assert PostingKind.VALUE not in kinds

    def test_numeric_columns_not_value_indexed(self, b2b_index):
        assert lookup(b2b_index, "100", "exact") == []

    def test_no_phantom_postings(self, b2b_index, gems_index):
        for index in (b2b_index, gems_index):
            n_attrs = len(index.attribute_profiles)
            for ps in list(index.token_map.values()) + list(index.phrase_map.values()):
                for p in ps:
                    assert 0 <= p.attribute_id < n_attrs
                    if p.kind is PostingKind.VALUE:
                        entry = index.value_entries[p.value_id]
                        assert entry.attribute_id == p.attribute_id
                    else:
                        assert p.value_id is None

    def test_trigram_map_covers_all_tokens(self, b2b_index):
        from rtq.text import trigrams

        for token in b2b_index.token_map:
            for gram in trigrams(token):
                assert token in b2b_index.trigram_map[gram]

    def test_build_is_deterministic(self, b2b_table):
        a = build_index_for(b2b_table)
        b = build_index_for(b2b_table)
        assert all_lookup_results(a) == all_lookup_results(b)


class TestLookup:
    def test_exact_anz(self, b2b_index):
        hits = lookup(b2b_index, "anz", "exact")
        assert len(hits) == 1
        assert hits[0].posting.kind is PostingKind.VALUE
        assert attr_name(b2b_index, hits[0].posting) == "subregion"
        assert hits[0].score == 1.0

    def test_exact_miss(self, b2b_index):
        assert lookup(b2b_index, "zzz", "exact") == []

    def test_fuzzy_misspelling(self, b2b_index):
        hits = lookup(b2b_index, "alianz", "fuzzy")
        assert hits, "fuzzy lookup must recover the misspelled value"
        top = hits[0]
        assert top.matched == "allianz"
        assert top.score == pytest.approx(1 - 1 / 7)
        value = b2b_index.value_entries[top.posting.value_id]
        assert value.canonical_text == "Allianz"

    def test_fuzzy_respects_threshold_for_short_tokens(self, b2b_index):
        # "anz" is length 3: zero edits allowed, so "amz" finds nothing there
        assert all(h.matched != "anz" for h in lookup(b2b_index, "amz", "fuzzy"))

    def test_prefix(self, b2b_index):
        hits = lookup(b2b_index, "one", "prefix")
        assert any(h.matched == "oneview" for h in hits)
        hits2 = lookup(b2b_index, "data sm", "prefix")
        assert [h.matched for h in hits2] == ["data smasher"]

    def test_scores_non_increasing(self, b2b_index):
        for term in ("one", "al", "s", "data"):
            for mode in ("prefix", "fuzzy"):
                scores = [h.score for h in lookup(b2b_index, term, mode)]
                assert scores == sorted(scores, reverse=True)

    def test_empty_term(self, b2b_index):
        assert lookup(b2b_index, "   ", "exact") == []


class TestFuzzySoundness:
    @given(st.text(alphabet="abcdefghinoprstuvz ", min_size=1, max_size=14))
    @settings(max_examples=200, deadline=None)
    def test_every_fuzzy_hit_is_within_threshold(self, term):
        index = _soundness_index()
        normalized = " ".join(tokenize(term))
        for hit in lookup(index, term, "fuzzy"):
            dist = oracle_edit_distance(normalized, hit.matched)
            assert dist <= fuzzy_threshold(len(hit.matched))
            assert hit.score == pytest.approx(1 - dist / len(hit.matched))


_SOUND_INDEX = None


def _soundness_index():
    global _SOUND_INDEX
    if _SOUND_INDEX is None:
        from .conftest import FIXTURES
        _SOUND_INDEX = build_index_for(load_table(FIXTURES / "b2b_sales.csv", name="b2b_sales"))
    return _SOUND_INDEX


class TestCompleteness:
    def test_fixture_indexes_complete(self, b2b_table, b2b_index, gems_table, gems_index):
        for table, index in ((b2b_table, b2b_index), (gems_table, gems_index)):
            for attr_id, phrase, token in brute_force_value_triples(table):
                hits = lookup(index, token, "exact")
                assert any(
                    h.posting.kind is PostingKind.VALUE
                    and h.posting.attribute_id == attr_id
                    and index.value_entries[h.posting.value_id].normalized_text == phrase
                    for h in hits
                ), (attr_id, phrase, token)

    def test_random_small_tables_complete(self):
        rng = random.Random(1234)
        pool = ["alpha", "beta", "gamma", "delta bay", "omega", "kite", "lunar", "mesa"]
        for _ in range(3):
            rows = ["cat,val"]
            n = rng.randint(20, 60)
            for _ in range(n):
                rows.append(f"{rng.choice(pool)},{rng.randint(0, 9)}")
            table = load_table("\n".join(rows), name="t")
            index = create_index(table)
            for attr_id, phrase, token in brute_force_value_triples(table):
                hits = lookup(index, token, "exact")
                assert any(
                    h.posting.attribute_id == attr_id
                    and h.posting.kind is PostingKind.VALUE
                    and index.value_entries[h.posting.value_id].normalized_text == phrase
                    for h in hits
                )


class TestPersistence:
    def test_round_trip_lookup_identical(self, b2b_index, tmp_path):
        path = tmp_path / "b2b.idx"
        persist_index(b2b_index, str(path))
        loaded = load_index(str(path))
        assert all_lookup_results(loaded) == all_lookup_results(b2b_index)
        assert loaded.table_name == b2b_index.table_name
        assert loaded.row_count == b2b_index.row_count

    def test_round_trip_via_stream(self, gems_index):
        buf = io.BytesIO()
        persist_index(gems_index, buf)
        loaded = load_index(buf.getvalue())
        assert all_lookup_results(loaded) == all_lookup_results(gems_index)

    def test_unsupported_version(self, b2b_index):
        buf = io.BytesIO()
        persist_index(b2b_index, buf)
        blob = bytearray(buf.getvalue())
        blob[4:8] = struct.pack(">I", 999)
        with pytest.raises(UnsupportedVersion):
            load_index(bytes(blob))

    def test_truncated_file(self, b2b_index):
        buf = io.BytesIO()
        persist_index(b2b_index, buf)
        with pytest.raises(CorruptIndex):
            load_index(buf.getvalue()[: len(buf.getvalue()) // 2])

    def test_corrupted_byte(self, b2b_index):
        buf = io.BytesIO()
        persist_index(b2b_index, buf)
        blob = bytearray(buf.getvalue())
        blob[len(blob) // 2] ^= 0xFF
        with pytest.raises(CorruptIndex):
            load_index(bytes(blob))

    def test_bad_magic(self):
        with pytest.raises(CorruptIndex):
            load_index(b"NOPE" + b"\x00" * 64)

    def test_persist_bytes_deterministic(self, b2b_index):
        a, b = io.BytesIO(), io.BytesIO()
        persist_index(b2b_index, a)
        persist_index(b2b_index, b)
        assert a.getvalue() == b.getvalue()

    def test_export_text_mentions_values(self, b2b_index):
        from rtq.index import export_index_text

        text = export_index_text(b2b_index)
        assert "OneView" in text
        assert "subregion" in text
