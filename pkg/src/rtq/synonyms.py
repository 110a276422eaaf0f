"""Synonym generation for attribute names.

The builtin provider reads a static dictionary file and is fully
deterministic; the LLM provider asks a completion endpoint for business
synonyms and parses one per line. Tests run on the builtin provider.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Protocol

from .errors import ProviderUnavailable, RtqError
from .index import SynonymEntry
from .text import normalize_phrase


class SynonymProvider(Protocol):
    source: str

    def synonyms_for(self, attribute_name: str) -> list[str]: ...


def parse_synonym_file(text: str) -> dict[str, list[str]]:
    """Parse `attribute_name: syn1, syn2` lines; `#` starts a comment."""
    mapping: dict[str, list[str]] = {}
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            continue
        head, tail = line.split(":", 1)
        key = normalize_phrase(head)
        if not key:
            continue
        syns = [normalize_phrase(s) for s in tail.split(",")]
        mapping.setdefault(key, []).extend(s for s in syns if s)
    return mapping


def _default_dictionary() -> dict[str, list[str]]:
    text = resources.files("rtq").joinpath("data/synonyms.txt").read_text("utf-8")
    return parse_synonym_file(text)


class BuiltinSynonymProvider:
    """Static dictionary lookup, keyed by the normalized attribute name."""

    source = "builtin"

    def __init__(self, path: str | Path | None = None):
        if path is None:
            self.mapping = _default_dictionary()
        else:
            self.mapping = parse_synonym_file(Path(path).read_text("utf-8"))

    def synonyms_for(self, attribute_name: str) -> list[str]:
        return list(self.mapping.get(normalize_phrase(attribute_name), []))


class LlmSynonymProvider:
    """Asks the configured completion endpoint for synonyms, one per line."""

    source = "llm"

    _PROMPT = (
        "List up to {n} short synonyms a business user might say instead of the "
        "column name '{name}' when asking questions about a data table. "
        "Answer with one synonym per line and nothing else."
    )

    def __init__(self, config, provider: str = "http", max_synonyms: int = 5):
        self.config = config
        self.provider = provider
        self.max_synonyms = max_synonyms

    def synonyms_for(self, attribute_name: str) -> list[str]:
        from .llm import complete  # local import: llm does not depend on synonyms

        prompt = self._PROMPT.format(n=self.max_synonyms, name=attribute_name)
        try:
            text = complete(prompt, self.config, provider=self.provider)
        except RtqError as exc:
            raise ProviderUnavailable(f"synonym endpoint failed: {exc}") from exc
        lines = [normalize_phrase(line) for line in text.splitlines()]
        return [s for s in lines if s][: self.max_synonyms]


def generate_synonyms(
    attribute_names: list[str], provider: SynonymProvider
) -> list[SynonymEntry]:
    """Zero or more synonyms per attribute; deduplicated, never echoing the
    attribute's own normalized name."""
    entries: list[SynonymEntry] = []
    for attr_id, name in enumerate(attribute_names):
        own = normalize_phrase(name)
        seen: set[str] = set()
        for syn in provider.synonyms_for(name):
            norm = normalize_phrase(syn)
            if not norm or norm == own or norm in seen:
                continue
            seen.add(norm)
            entries.append(
                SynonymEntry(attribute_id=attr_id, synonym_text=norm, source=provider.source)
            )
    return entries
