"""Inverse index over attribute names, synonyms, and unique categorical values.

Build once from a Table, then query with exact, prefix, or fuzzy lookup.
The built index is immutable and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import struct
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO, Iterable, Literal, Union

from .errors import CorruptIndex, NotCategorical, UnsupportedVersion
from .table import (
    AttributeProfile,
    CategoricalPolicy,
    DataType,
    DEFAULT_POLICY,
    Table,
    get_attribute_names_and_types,
)
from .text import damerau_levenshtein, fuzzy_threshold, normalize_phrase, tokenize, trigrams

INDEX_FORMAT_VERSION = 1
_MAGIC = b"RTIX"

LookupMode = Literal["exact", "prefix", "fuzzy"]


class PostingKind(Enum):
    ATTRIBUTE_NAME = "AttributeName"
    ATTRIBUTE_SYNONYM = "AttributeSynonym"
    VALUE = "Value"


_KIND_CODES = {
    PostingKind.ATTRIBUTE_NAME: 0,
    PostingKind.ATTRIBUTE_SYNONYM: 1,
    PostingKind.VALUE: 2,
}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


@dataclass(frozen=True)
class Posting:
    kind: PostingKind
    attribute_id: int
    value_id: int | None = None

    def __post_init__(self) -> None:
        if (self.kind is PostingKind.VALUE) != (self.value_id is not None):
            raise ValueError("value_id present iff kind is VALUE")


@dataclass(frozen=True)
class ValueEntry:
    canonical_text: str
    normalized_text: str
    attribute_id: int
    frequency: int


@dataclass(frozen=True)
class SynonymEntry:
    attribute_id: int
    synonym_text: str
    source: str  # builtin | llm | user


@dataclass(frozen=True)
class LookupHit:
    posting: Posting
    matched: str
    score: float


@dataclass(eq=False)
class VocabIndex:
    table_name: str
    row_count: int
    attribute_profiles: list[AttributeProfile]
    value_entries: list[ValueEntry]
    synonym_entries: list[SynonymEntry]
    token_map: dict[str, list[Posting]] = field(repr=False)
    phrase_map: dict[str, list[Posting]] = field(repr=False)
    version: int = INDEX_FORMAT_VERSION
    trigram_map: dict[str, set[str]] = field(default_factory=dict, repr=False)
    _sorted_tokens: list[str] = field(default_factory=list, repr=False)
    _sorted_phrases: list[str] = field(default_factory=list, repr=False)
    _values_by_frequency: list[int] = field(default_factory=list, repr=False)
    max_value_frequency: int = 1

    def finalize(self) -> "VocabIndex":
        """Populate derived structures; called after build or load."""
        tri: dict[str, set[str]] = {}
        for key in self.token_map:
            for gram in trigrams(key):
                tri.setdefault(gram, set()).add(key)
        self.trigram_map = tri
        self._sorted_tokens = sorted(self.token_map)
        self._sorted_phrases = sorted(self.phrase_map)
        self._values_by_frequency = sorted(
            range(len(self.value_entries)),
            key=lambda i: (-self.value_entries[i].frequency, self.value_entries[i].canonical_text),
        )
        self.max_value_frequency = max(
            (v.frequency for v in self.value_entries), default=1
        )
        # bucket layout: attribute/synonym postings first, then value postings
        # by descending frequency, so bounded readers can stop after k values
        def bucket_order(p: Posting) -> tuple:
            if p.kind is PostingKind.VALUE:
                return (1, -self.value_entries[p.value_id].frequency, p.value_id)
            return (0, p.attribute_id, _KIND_CODES[p.kind])

        for bucket in self.token_map.values():
            bucket.sort(key=bucket_order)
        for bucket in self.phrase_map.values():
            bucket.sort(key=bucket_order)
        return self

    def postings_for(self, key: str) -> list[Posting]:
        if " " in key:
            return self.phrase_map.get(key, [])
        return self.token_map.get(key, [])

    def posting_frequency(self, posting: Posting) -> int:
        if posting.kind is PostingKind.VALUE and posting.value_id is not None:
            return self.value_entries[posting.value_id].frequency
        return 0

    def all_keys(self) -> Iterable[str]:
        yield from self._sorted_tokens
        yield from self._sorted_phrases


# --- Alg. 1 steps -------------------------------------------------------------

def filter_categorical_attributes(
    profiles: list[AttributeProfile], policy: CategoricalPolicy = DEFAULT_POLICY
) -> list[int]:
    """Attribute ids whose columns hold a bounded set of discrete classes."""
    return [
        p.attribute_id
        for p in profiles
        if policy.is_categorical(p.dtype, p.distinct_count, p.row_count)
    ]


def _cell_text(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def extract_unique_values(
    table: Table, attribute_id: int, policy: CategoricalPolicy = DEFAULT_POLICY
) -> list[ValueEntry]:
    """Distinct non-null values of a categorical column, case-folded, first
    occurrence's casing kept as canonical."""
    col = table.columns[attribute_id]
    non_null = [v for v in col.values if v is not None]
    if not policy.is_categorical(col.dtype, len(set(non_null)), table.row_count):
        raise NotCategorical(
            f"attribute '{col.normalized_name}' does not satisfy the categorical policy"
        )
    order: list[str] = []
    canonical: dict[str, str] = {}
    freq: Counter[str] = Counter()
    for value in non_null:
        text = _cell_text(value)
        norm = normalize_phrase(text)
        if not norm:
            continue
        if norm not in canonical:
            canonical[norm] = text
            order.append(norm)
        freq[norm] += 1
    return [
        ValueEntry(
            canonical_text=canonical[n],
            normalized_text=n,
            attribute_id=attribute_id,
            frequency=freq[n],
        )
        for n in order
    ]


def build_inverse_index(
    profiles: list[AttributeProfile],
    synonyms: list[SynonymEntry],
    value_sets: dict[int, list[ValueEntry]],
    *,
    table_name: str = "table",
    row_count: int = 0,
) -> VocabIndex:
    """Combine attribute names, synonyms, and unique values into one index.

    Every token of every indexed string gets a posting; multi-token strings
    additionally land in the phrase map under their single-spaced form.
    """
    value_entries: list[ValueEntry] = []
    for attr_id in sorted(value_sets):
        value_entries.extend(value_sets[attr_id])

    token_map: dict[str, list[Posting]] = {}
    phrase_map: dict[str, list[Posting]] = {}
    token_seen: dict[str, set[Posting]] = {}
    phrase_seen: dict[str, set[Posting]] = {}

    def add(text: str, posting: Posting) -> None:
        tokens = tokenize(text)
        for tok in tokens:
            seen = token_seen.setdefault(tok, set())
            if posting not in seen:
                seen.add(posting)
                token_map.setdefault(tok, []).append(posting)
        if len(tokens) > 1:
            phrase = " ".join(tokens)
            seen = phrase_seen.setdefault(phrase, set())
            if posting not in seen:
                seen.add(posting)
                phrase_map.setdefault(phrase, []).append(posting)

    for prof in profiles:
        add(prof.normalized_name, Posting(PostingKind.ATTRIBUTE_NAME, prof.attribute_id))
    for syn in synonyms:
        add(syn.synonym_text, Posting(PostingKind.ATTRIBUTE_SYNONYM, syn.attribute_id))
    for vid, entry in enumerate(value_entries):
        add(
            entry.normalized_text,
            Posting(PostingKind.VALUE, entry.attribute_id, value_id=vid),
        )

    index = VocabIndex(
        table_name=table_name,
        row_count=row_count,
        attribute_profiles=list(profiles),
        value_entries=value_entries,
        synonym_entries=list(synonyms),
        token_map=token_map,
        phrase_map=phrase_map,
    )
    return index.finalize()


def create_index(
    table: Table,
    synonyms: list[SynonymEntry] | None = None,
    policy: CategoricalPolicy = DEFAULT_POLICY,
) -> VocabIndex:
    """End-to-end index build: profile, filter categoricals, extract values, combine."""
    profiles = [p for _, _, p in get_attribute_names_and_types(table, policy)]
    value_sets = {
        attr_id: extract_unique_values(table, attr_id, policy)
        for attr_id in filter_categorical_attributes(profiles, policy)
    }
    return build_inverse_index(
        profiles,
        synonyms or [],
        value_sets,
        table_name=table.name,
        row_count=table.row_count,
    )


# --- lookup --------------------------------------------------------------------

def _prefix_range(sorted_keys: list[str], prefix: str) -> Iterable[str]:
    lo = bisect_left(sorted_keys, prefix)
    hi = bisect_left(sorted_keys, prefix + "￿")
    return sorted_keys[lo:hi]


def _sort_hits(index: VocabIndex, hits: list[LookupHit]) -> list[LookupHit]:
    return sorted(
        hits,
        key=lambda h: (-h.score, -index.posting_frequency(h.posting), h.matched),
    )


def lookup(index: VocabIndex, term: str, mode: LookupMode = "exact") -> list[LookupHit]:
    """Resolve a term against the index.

    exact  - normalized term must equal an indexed token or phrase; score 1.0
    prefix - indexed tokens/phrases starting with the term; score len/len
    fuzzy  - trigram-gated candidates within the edit-distance band for the
             matched key's length; score 1 - distance/len(matched)
    """
    normalized = normalize_phrase(term)
    if not normalized:
        return []

    hits: list[LookupHit] = []
    if mode == "exact":
        for posting in index.postings_for(normalized):
            hits.append(LookupHit(posting, normalized, 1.0))
        return _sort_hits(index, hits)

    if mode == "prefix":
        for key in _prefix_range(index._sorted_tokens, normalized):
            score = len(normalized) / len(key)
            for posting in index.token_map[key]:
                hits.append(LookupHit(posting, key, score))
        for key in _prefix_range(index._sorted_phrases, normalized):
            score = len(normalized) / len(key)
            for posting in index.phrase_map[key]:
                hits.append(LookupHit(posting, key, score))
        return _sort_hits(index, hits)

    if mode == "fuzzy":
        return _sort_hits(index, _fuzzy_hits(index, normalized))

    raise ValueError(f"unknown lookup mode: {mode}")


# Hard ceiling on edit-distance computations per fuzzy lookup. Candidates are
# ranked by shared-trigram count first, so a genuine near-miss (which shares
# almost all of its trigrams) is never the one dropped; the cap only sheds
# far-away junk on very large vocabularies.
MAX_FUZZY_CANDIDATES = 512


def _fuzzy_token_candidates(index: VocabIndex, term: str) -> list[tuple[int, str]]:
    term_grams = trigrams(term)
    counts: Counter[str] = Counter()
    for gram in term_grams:
        bucket = index.trigram_map.get(gram)
        if bucket:
            counts.update(bucket)
    lt = len(term)
    eligible = [
        (shared, candidate)
        for candidate, shared in counts.items()
        if abs(len(candidate) - lt) <= fuzzy_threshold(len(candidate))
    ]
    if len(eligible) > MAX_FUZZY_CANDIDATES:
        return heapq.nlargest(MAX_FUZZY_CANDIDATES, eligible)
    eligible.sort(reverse=True)
    return eligible


def _fuzzy_phrase_candidates(index: VocabIndex, term: str) -> list[str]:
    """Phrases eligible to fuzzy-match the term.

    A phrase within the edit band of a term either keeps its opening characters
    (typo later in the string) or the term is the phrase with a separator
    edited out ("datasmasher"); in both cases the phrase still starts with the
    term's first characters, so prefix ranges over the sorted phrase list
    gather every such candidate without scanning the whole vocabulary.
    """
    probes = {term[:3]}
    if len(term) >= 2:
        probes.add(term[:2] + " ")
    probes.add(term[:1] + " ")
    lt = len(term)
    out: list[str] = []
    seen: set[str] = set()
    for probe in sorted(probes):
        for phrase in _prefix_range(index._sorted_phrases, probe):
            if phrase in seen:
                continue
            if abs(len(phrase) - lt) <= fuzzy_threshold(len(phrase)):
                seen.add(phrase)
                out.append(phrase)
    return out


def _fuzzy_hits(index: VocabIndex, term: str) -> list[LookupHit]:
    # Thresholds key on the matched key's length, so a 1-2 char term can never
    # sit within distance of any fuzzy-eligible key: only exact is possible.
    if len(term) <= 2:
        return [LookupHit(p, term, 1.0) for p in index.postings_for(term)]

    n_term_grams = len(trigrams(term))
    hits: list[LookupHit] = []
    budget = MAX_FUZZY_CANDIDATES

    for shared, candidate in _fuzzy_token_candidates(index, term):
        limit = fuzzy_threshold(len(candidate))
        if limit == 0:
            if candidate != term:
                continue
            dist = 0
        else:
            # q-gram count filter: one edit destroys at most 4 padded trigrams
            if shared < n_term_grams - 4 * limit:
                continue
            dist = damerau_levenshtein(term, candidate, max_dist=limit)
            if dist > limit:
                continue
        score = 1.0 - dist / len(candidate)
        for posting in index.token_map[candidate]:
            hits.append(LookupHit(posting, candidate, score))

    for candidate in _fuzzy_phrase_candidates(index, term):
        if budget <= 0:
            break
        budget -= 1
        limit = fuzzy_threshold(len(candidate))
        if limit == 0:
            if candidate != term:
                continue
            dist = 0
        else:
            dist = damerau_levenshtein(term, candidate, max_dist=limit)
            if dist > limit:
                continue
        score = 1.0 - dist / len(candidate)
        for posting in index.phrase_map[candidate]:
            hits.append(LookupHit(posting, candidate, score))
    return hits


# --- persistence ----------------------------------------------------------------

def _posting_to_json(p: Posting) -> list:
    return [_KIND_CODES[p.kind], p.attribute_id, p.value_id]


def _posting_from_json(raw: list) -> Posting:
    return Posting(_CODE_KINDS[raw[0]], raw[1], raw[2])


def _index_sections(index: VocabIndex) -> list[bytes]:
    meta = {
        "table_name": index.table_name,
        "row_count": index.row_count,
    }
    profiles = [
        {
            "attribute_id": p.attribute_id,
            "name": p.name,
            "normalized_name": p.normalized_name,
            "dtype": p.dtype.value,
            "row_count": p.row_count,
            "distinct_count": p.distinct_count,
            "null_count": p.null_count,
            "is_categorical": p.is_categorical,
        }
        for p in index.attribute_profiles
    ]
    values = [
        [v.canonical_text, v.normalized_text, v.attribute_id, v.frequency]
        for v in index.value_entries
    ]
    synonyms = [
        [s.attribute_id, s.synonym_text, s.source] for s in index.synonym_entries
    ]
    token_map = {
        k: [_posting_to_json(p) for p in ps] for k, ps in index.token_map.items()
    }
    phrase_map = {
        k: [_posting_to_json(p) for p in ps] for k, ps in index.phrase_map.items()
    }
    return [
        json.dumps(doc, sort_keys=True, ensure_ascii=False).encode("utf-8")
        for doc in (meta, profiles, values, synonyms, token_map, phrase_map)
    ]


def persist_index(index: VocabIndex, sink: Union[BinaryIO, str]) -> None:
    """Write the versioned single-file format: magic, version, length-prefixed
    JSON sections, trailing SHA-256 checksum."""
    body = bytearray()
    body += _MAGIC
    body += struct.pack(">I", index.version)
    for section in _index_sections(index):
        body += struct.pack(">I", len(section))
        body += section
    digest = hashlib.sha256(bytes(body)).digest()
    payload = bytes(body) + digest

    if isinstance(sink, str):
        with open(sink, "wb") as fh:
            fh.write(payload)
    else:
        sink.write(payload)


def load_index(source: Union[BinaryIO, bytes, str]) -> VocabIndex:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            blob = fh.read()
    elif isinstance(source, bytes):
        blob = source
    else:
        blob = source.read()

    if len(blob) < 8 or blob[:4] != _MAGIC:
        raise CorruptIndex("not an index file (bad magic)")
    version = struct.unpack(">I", blob[4:8])[0]
    if version != INDEX_FORMAT_VERSION:
        raise UnsupportedVersion(version)
    if len(blob) < 8 + 32:
        raise CorruptIndex("truncated index file")

    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptIndex("checksum mismatch")

    sections: list[bytes] = []
    pos = 8
    while pos < len(body):
        if pos + 4 > len(body):
            raise CorruptIndex("truncated section header")
        (length,) = struct.unpack(">I", body[pos : pos + 4])
        pos += 4
        if pos + length > len(body):
            raise CorruptIndex("truncated section body")
        sections.append(body[pos : pos + length])
        pos += length
    if len(sections) != 6:
        raise CorruptIndex(f"expected 6 sections, found {len(sections)}")

    try:
        meta, profiles, values, synonyms, token_map, phrase_map = [
            json.loads(s.decode("utf-8")) for s in sections
        ]
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptIndex(f"undecodable section: {exc}") from exc

    index = VocabIndex(
        table_name=meta["table_name"],
        row_count=meta["row_count"],
        attribute_profiles=[
            AttributeProfile(
                attribute_id=p["attribute_id"],
                name=p["name"],
                normalized_name=p["normalized_name"],
                dtype=DataType(p["dtype"]),
                row_count=p["row_count"],
                distinct_count=p["distinct_count"],
                null_count=p["null_count"],
                is_categorical=p["is_categorical"],
            )
            for p in profiles
        ],
        value_entries=[ValueEntry(*v) for v in values],
        synonym_entries=[SynonymEntry(*s) for s in synonyms],
        token_map={k: [_posting_from_json(p) for p in ps] for k, ps in token_map.items()},
        phrase_map={k: [_posting_from_json(p) for p in ps] for k, ps in phrase_map.items()},
        version=version,
    )
    return index.finalize()


def export_index_text(index: VocabIndex) -> str:
    """Human-readable dump of the index for debugging; not a load format."""
    lines = [
        f"table: {index.table_name} ({index.row_count} rows)",
        f"format version: {index.version}",
        "",
        "attributes:",
    ]
    for p in index.attribute_profiles:
        flag = " categorical" if p.is_categorical else ""
        lines.append(
            f"  [{p.attribute_id}] {p.normalized_name} ({p.dtype.value})"
            f" distinct={p.distinct_count} nulls={p.null_count}{flag}"
        )
    lines.append("")
    lines.append("synonyms:")
    for s in index.synonym_entries:
        attr = index.attribute_profiles[s.attribute_id].normalized_name
        lines.append(f"  {attr} <- {s.synonym_text} ({s.source})")
    lines.append("")
    lines.append("values:")
    for vid, v in enumerate(index.value_entries):
        attr = index.attribute_profiles[v.attribute_id].normalized_name
        lines.append(f"  [{vid}] {attr} = {v.canonical_text!r} x{v.frequency}")
    lines.append("")
    lines.append(f"tokens: {len(index.token_map)}  phrases: {len(index.phrase_map)}")
    return "\n".join(lines) + "\n"
