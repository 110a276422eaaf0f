"""Contextual typeahead over the vocabulary index.

suggest() is a pure function of (index, input_text, cursor, k): no state, no
side effects, safe under concurrency. Prefix candidates are gathered with a
work bound: matching keys are visited shortest-first (best match score first)
and each key contributes its attribute postings plus its k most frequent
values, so one-letter inputs over huge vocabularies stay fast.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_left
from dataclasses import dataclass
from typing import Literal

from .index import LookupHit, PostingKind, VocabIndex, lookup
from .text import normalize_phrase

_TOKEN_RUN = re.compile(r"[^\W_]+", re.UNICODE)

# stop expanding prefix matches once this many candidate postings are queued;
# keys are visited in descending match-score order so the cut is benign
_PREFIX_HIT_BUDGET = 240

SuggestionKind = Literal["Attribute", "Value"]

# Attribute completions win on single-token targets; once the user is inside
# a multi-word phrase, values win.
_WEIGHTS_SINGLE = {"Attribute": 1.0, "Value": 0.9}
_WEIGHTS_MULTI = {"Attribute": 0.9, "Value": 1.0}

_MAX_TAIL_TOKENS = 3


@dataclass(frozen=True)
class Suggestion:
    display_text: str
    kind: SuggestionKind
    attribute_name: str
    score: float
    replace_span: tuple[int, int]


def _value_damping(index: VocabIndex, frequency: int) -> float:
    return math.log1p(frequency) / math.log1p(max(index.max_value_frequency, 1))


def _hit_to_parts(
    index: VocabIndex, hit: LookupHit
) -> tuple[str, SuggestionKind, str, float]:
    posting = hit.posting
    attr = index.attribute_profiles[posting.attribute_id].normalized_name
    if posting.kind is PostingKind.VALUE:
        entry = index.value_entries[posting.value_id]
        return entry.canonical_text, "Value", attr, _value_damping(index, entry.frequency)
    # Synonym hits complete to the attribute they stand for.
    return attr, "Attribute", attr, 1.0


def _rank(
    index: VocabIndex,
    hits: list[LookupHit],
    weights: dict[str, float],
    span: tuple[int, int],
    k: int,
) -> list[Suggestion]:
    best: dict[tuple[str, str, str], Suggestion] = {}
    for hit in hits:
        display, kind, attr, damp = _hit_to_parts(index, hit)
        score = weights[kind] * hit.score * damp
        key = (kind, display, attr)
        prev = best.get(key)
        if prev is None or score > prev.score:
            best[key] = Suggestion(display, kind, attr, score, span)
    ordered = sorted(best.values(), key=lambda s: (-s.score, s.display_text))
    return ordered[:k]


def _cold_start(index: VocabIndex, cursor: int, k: int) -> list[Suggestion]:
    span = (cursor, cursor)
    out: list[Suggestion] = []
    for profile in sorted(index.attribute_profiles, key=lambda p: p.normalized_name):
        out.append(Suggestion(profile.normalized_name, "Attribute", profile.normalized_name, 1.0, span))
        if len(out) >= k:
            return out[:k]
    for vid in index._values_by_frequency[: k - len(out)]:
        entry = index.value_entries[vid]
        attr = index.attribute_profiles[entry.attribute_id].normalized_name
        score = 0.9 * _value_damping(index, entry.frequency)
        out.append(Suggestion(entry.canonical_text, "Value", attr, score, span))
    return out[:k]


def _gather_prefix(index: VocabIndex, term: str, k: int) -> list[LookupHit]:
    """Prefix hits, bounded: shortest keys first, per key all attribute
    postings plus the k most frequent values (buckets are frequency-ordered,
    so anything past k in a bucket cannot reach the top k)."""
    keys: list[str] = []
    for sorted_keys in (index._sorted_tokens, index._sorted_phrases):
        lo = bisect_left(sorted_keys, term)
        hi = bisect_left(sorted_keys, term + "￿")
        keys.extend(sorted_keys[lo:hi])
    keys.sort(key=lambda s: (len(s), s))

    hits: list[LookupHit] = []
    for key in keys:
        if len(hits) >= _PREFIX_HIT_BUDGET:
            break
        score = len(term) / len(key)
        taken_values = 0
        for posting in index.postings_for(key):
            if posting.kind is PostingKind.VALUE:
                if taken_values >= k:
                    break
                taken_values += 1
            hits.append(LookupHit(posting, key, score))
    return hits


def suggest(index: VocabIndex, input_text: str, cursor: int, k: int) -> list[Suggestion]:
    """Ranked completions for the token/phrase tail ending at the cursor.

    An empty target (blank input, or cursor right after a separator) returns
    the cold-start list: attribute names first, then values by frequency.
    """
    if not 0 <= cursor <= len(input_text):
        raise ValueError("cursor out of bounds")
    if k <= 0:
        return []

    prefix_text = input_text[:cursor]
    spans = [m.span() for m in _TOKEN_RUN.finditer(prefix_text)]
    if not spans or spans[-1][1] != cursor:
        return _cold_start(index, cursor, k)

    tails: list[tuple[str, tuple[int, int], int]] = []
    for m in range(min(_MAX_TAIL_TOKENS, len(spans)), 0, -1):
        start = spans[-m][0]
        tails.append((normalize_phrase(prefix_text[start:cursor]), (start, cursor), m))

    for term, span, m in tails:
        hits = _gather_prefix(index, term, k)
        if hits:
            if len(hits) < k:
                hits = hits + lookup(index, term, "fuzzy")
            weights = _WEIGHTS_SINGLE if m == 1 else _WEIGHTS_MULTI
            return _rank(index, hits, weights, span, k)

    for term, span, m in tails:
        hits = lookup(index, term, "fuzzy")
        if hits:
            weights = _WEIGHTS_SINGLE if m == 1 else _WEIGHTS_MULTI
            return _rank(index, hits, weights, span, k)

    return []
