"""Text normalization primitives used by the index, autocomplete, and keyword extraction.

Everything in here is deterministic: same input bytes, same output, no locale
or environment dependence.
"""

from __future__ import annotations

import re
import unicodedata

_SPLIT = re.compile(r"[\W_]+", re.UNICODE)

# pg_trgm-style padding: two leading blanks, one trailing. Guarantees that a
# single-character edit on a token of length >= 4 always leaves at least one
# trigram shared with the original, which the fuzzy candidate gate relies on.
_PAD_PREFIX = "  "
_PAD_SUFFIX = " "


def tokenize(text: str) -> list[str]:
    """Lowercase, NFC-compose, split on any non-alphanumeric run, drop empties."""
    if not text:
        return []
    normalized = unicodedata.normalize("NFC", text).lower()
    return [t for t in _SPLIT.split(normalized) if t]


def normalize_phrase(text: str) -> str:
    """Canonical single-spaced form of a value/name: its tokens joined by one space."""
    return " ".join(tokenize(text))


def trigrams(term: str) -> set[str]:
    """Padded character trigrams of a normalized token or phrase.

    Terms shorter than three characters additionally map to themselves so
    they stay directly addressable.
    """
    if not term:
        return set()
    padded = _PAD_PREFIX + term + _PAD_SUFFIX
    grams = {padded[i : i + 3] for i in range(len(padded) - 2)}
    if len(term) < 3:
        grams.add(term)
    return grams


def fuzzy_threshold(length: int) -> int:
    """Maximum allowed edit distance for a match against a term of this length."""
    if length <= 3:
        return 0
    if length <= 6:
        return 1
    return 2


def damerau_levenshtein(a: str, b: str, max_dist: int | None = None) -> int:
    """Edit distance with adjacent transpositions (optimal string alignment).

    When max_dist is given, computation is restricted to the |i - j| <= max_dist
    band (cells outside it cannot lie on a path of cost <= max_dist) and
    max_dist + 1 is returned as soon as the distance is known to exceed it.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        dist = max(la, lb)
        if max_dist is not None and dist > max_dist:
            return max_dist + 1
        return dist
    if max_dist is not None and abs(la - lb) > max_dist:
        return max_dist + 1

    band = max(la, lb) if max_dist is None else max_dist
    inf = band + 1
    prev2: list[int] | None = None
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        j_lo = max(1, i - band)
        j_hi = min(lb, i + band)
        cur = [inf] * (lb + 1)
        if i <= band:
            cur[0] = i
        ca = a[i - 1]
        row_min = inf
        for j in range(j_lo, j_hi + 1):
            cost = 0 if ca == b[j - 1] else 1
            d = prev[j - 1] + cost
            up = prev[j] + 1
            if up < d:
                d = up
            left = cur[j - 1] + 1
            if left < d:
                d = left
            if (
                prev2 is not None
                and i > 1
                and j > 1
                and ca == b[j - 2]
                and a[i - 2] == b[j - 1]
            ):
                t = prev2[j - 2] + cost
                if t < d:
                    d = t
            cur[j] = d
            if d < row_min:
                row_min = d
        if max_dist is not None and row_min > max_dist:
            return max_dist + 1
        prev2, prev = prev, cur
    dist = prev[lb]
    if max_dist is not None and dist > max_dist:
        return max_dist + 1
    return dist
