"""Question-time pipeline: keywords, index search, dynamic schema, prompt text.

All functions are pure over immutable inputs. The schema block rendering is
byte-exact and documented in the README, because the mock completion provider
and the default prompt template both parse it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import BadTemplate, EmptyQuery
from .index import PostingKind, VocabIndex, lookup
from .table import DataType, Table
from .text import tokenize

MAX_NGRAM = 3
MAX_RENDERED_VALUES = 20
DIALECT = "sql-subset"


@dataclass(frozen=True)
class UserQuery:
    raw_text: str
    normalized_tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, raw_text: str) -> "UserQuery":
        return cls(raw_text=raw_text, normalized_tokens=tuple(tokenize(raw_text)))


@dataclass(frozen=True)
class Keyword:
    text: str                    # normalized, single-spaced
    token_span: tuple[int, int]  # [start, end) over the query's token sequence
    ngram: int


@dataclass(frozen=True)
class KeywordSet:
    keywords: tuple[Keyword, ...]

    def texts(self) -> list[str]:
        return [k.text for k in self.keywords]


@dataclass(frozen=True)
class DirectMatch:
    attribute_id: int
    keyword: str


@dataclass(frozen=True)
class ValueMatch:
    attribute_id: int
    canonical_text: str
    keyword: str


@dataclass(frozen=True)
class MatchedValue:
    canonical_text: str
    keyword: str


@dataclass(frozen=True)
class SchemaAttribute:
    name: str
    dtype: DataType
    keyword: str | None
    values: tuple[MatchedValue, ...] = ()


@dataclass(frozen=True)
class DynamicSchema:
    table_name: str
    row_count: int
    direct_attributes: tuple[SchemaAttribute, ...]
    indirect_attributes: tuple[SchemaAttribute, ...]
    unmatched_keywords: tuple[str, ...]
    full_schema_fallback: bool = False

    def attribute_names(self) -> list[str]:
        return [a.name for a in self.direct_attributes + self.indirect_attributes]

    def matched_values(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for attr in self.direct_attributes + self.indirect_attributes:
            if attr.values:
                out[attr.name] = [v.canonical_text for v in attr.values]
        return out


@lru_cache(maxsize=1)
def load_stopwords() -> frozenset[str]:
    text = resources.files("rtq").joinpath("data/stopwords.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.add(word)
    return frozenset(words)


def extract_keywords(
    query: UserQuery,
    index: VocabIndex,
    stopwords: frozenset[str] | set[str] | None = None,
) -> KeywordSet:
    """Segment the question into keywords.

    Token n-grams (longest first, up to 3) that hit the index exactly consume
    their spans; leftover non-stopword unigrams are kept even without a hit so
    they can still fuzzy-match downstream. Stopword unigrams are dropped.
    """
    if not query.raw_text.strip():
        raise EmptyQuery("question text is empty")
    if stopwords is None:
        stopwords = load_stopwords()

    tokens = query.normalized_tokens
    consumed = [False] * len(tokens)
    found: list[Keyword] = []

    for n in range(MAX_NGRAM, 1, -1):
        for i in range(0, len(tokens) - n + 1):
            if any(consumed[i : i + n]):
                continue
            gram = " ".join(tokens[i : i + n])
            if lookup(index, gram, "exact"):
                found.append(Keyword(gram, (i, i + n), n))
                for j in range(i, i + n):
                    consumed[j] = True

    for i, tok in enumerate(tokens):
        if consumed[i] or tok in stopwords:
            continue
        found.append(Keyword(tok, (i, i + 1), 1))

    found.sort(key=lambda kw: kw.token_span)
    return KeywordSet(tuple(found))


def search_index(
    keywords: KeywordSet, index: VocabIndex
) -> tuple[list[DirectMatch], list[ValueMatch], list[str]]:
    """Resolve each keyword exact-then-fuzzy.

    Attribute-name/synonym postings become direct matches, value postings
    become indirect matches (owner attribute derived from the value), and
    keywords with no posting at all are reported unmatched.
    """
    direct: list[DirectMatch] = []
    indirect: list[ValueMatch] = []
    unmatched: list[str] = []
    seen_direct: set[tuple[int, str]] = set()
    seen_indirect: set[tuple[int, str, str]] = set()

    for kw in keywords.keywords:
        hits = lookup(index, kw.text, "exact")
        if not hits:
            hits = lookup(index, kw.text, "fuzzy")
        if not hits:
            unmatched.append(kw.text)
            continue
        for hit in hits:
            posting = hit.posting
            if posting.kind is PostingKind.VALUE:
                entry = index.value_entries[posting.value_id]
                key = (posting.attribute_id, entry.canonical_text, kw.text)
                if key not in seen_indirect:
                    seen_indirect.add(key)
                    indirect.append(
                        ValueMatch(posting.attribute_id, entry.canonical_text, kw.text)
                    )
            else:
                dkey = (posting.attribute_id, kw.text)
                if dkey not in seen_direct:
                    seen_direct.add(dkey)
                    direct.append(DirectMatch(posting.attribute_id, kw.text))
    return direct, indirect, unmatched


def create_dynamic_schema(
    direct: list[DirectMatch],
    indirect: list[ValueMatch],
    unmatched: list[str],
    index: VocabIndex,
) -> DynamicSchema:
    """Merge matches into the question-specific schema.

    Attributes keep column order; matched values sort lexicographically. An
    attribute matched both ways lands in the direct list with its values still
    attached. Zero matches fall back to the full column list, flagged.
    """
    profiles = index.attribute_profiles
    direct_ids = {m.attribute_id for m in direct}
    first_trigger: dict[int, str] = {}
    for m in direct:
        first_trigger.setdefault(m.attribute_id, m.keyword)

    values_by_attr: dict[int, dict[str, str]] = {}
    for m in indirect:
        bucket = values_by_attr.setdefault(m.attribute_id, {})
        bucket.setdefault(m.canonical_text, m.keyword)

    def attr_values(attr_id: int) -> tuple[MatchedValue, ...]:
        bucket = values_by_attr.get(attr_id, {})
        return tuple(
            MatchedValue(text, bucket[text]) for text in sorted(bucket)
        )

    direct_out: list[SchemaAttribute] = []
    indirect_out: list[SchemaAttribute] = []
    for p in profiles:
        if p.attribute_id in direct_ids:
            direct_out.append(
                SchemaAttribute(
                    p.normalized_name,
                    p.dtype,
                    first_trigger[p.attribute_id],
                    attr_values(p.attribute_id),
                )
            )
        elif p.attribute_id in values_by_attr:
            indirect_out.append(
                SchemaAttribute(
                    p.normalized_name, p.dtype, None, attr_values(p.attribute_id)
                )
            )

    fallback = not direct_out and not indirect_out
    if fallback:
        direct_out = [
            SchemaAttribute(p.normalized_name, p.dtype, None) for p in profiles
        ]

    return DynamicSchema(
        table_name=index.table_name,
        row_count=index.row_count,
        direct_attributes=tuple(direct_out),
        indirect_attributes=tuple(indirect_out),
        unmatched_keywords=tuple(unmatched),
        full_schema_fallback=fallback,
    )


def build_dynamic_schema(query: UserQuery, index: VocabIndex) -> tuple[DynamicSchema, KeywordSet]:
    """Convenience composition of extract_keywords, search_index, create_dynamic_schema."""
    keywords = extract_keywords(query, index)
    direct, indirect, unmatched = search_index(keywords, index)
    return create_dynamic_schema(direct, indirect, unmatched, index), keywords


# --- rendering -----------------------------------------------------------------

def _quote_value(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def render_schema_block(schema: DynamicSchema) -> str:
    """Byte-exact schema block grammar:

    TABLE <name> (<row_count> rows)
    - <normalized_name> (<DataType>)[ values: 'v1', 'v2'[, …and N more]]
    """
    lines = [f"TABLE {schema.table_name} ({schema.row_count} rows)"]
    for attr in schema.direct_attributes + schema.indirect_attributes:
        line = f"- {attr.name} ({attr.dtype.value})"
        if attr.values:
            shown = [v.canonical_text for v in attr.values[:MAX_RENDERED_VALUES]]
            rendered = ", ".join(_quote_value(v) for v in shown)
            overflow = len(attr.values) - len(shown)
            if overflow > 0:
                rendered += f", …and {overflow} more"
            line += f" values: {rendered}"
        lines.append(line)
    return "\n".join(lines)


def render_preview_block(table: Table, n_rows: int = 5) -> str:
    """Baseline context: column headers plus the first rows, comma-separated."""
    lines = [f"TABLE {table.name} (top {min(n_rows, table.row_count)} of {table.row_count} rows)"]
    lines.append(",".join(c.normalized_name for c in table.columns))
    for i, row in enumerate(table.rows()):
        if i >= n_rows:
            break
        lines.append(",".join("" if v is None else str(v) for v in row))
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptTemplate:
    template_text: str
    dialect: str = DIALECT

    _PLACEHOLDERS = ("{schema}", "{question}", "{dialect}")

    def validate(self) -> None:
        for ph in self._PLACEHOLDERS:
            count = self.template_text.count(ph)
            if count != 1:
                raise BadTemplate(
                    f"placeholder {ph} must appear exactly once, found {count}"
                )

    def render(self, schema_block: str, question: str) -> str:
        self.validate()
        out = self.template_text
        out = out.replace("{schema}", schema_block)
        out = out.replace("{question}", question)
        out = out.replace("{dialect}", self.dialect)
        return out


def _load_prompt(name: str) -> str:
    return resources.files("rtq").joinpath(f"prompts/{name}").read_text("utf-8")


@lru_cache(maxsize=None)
def default_template() -> PromptTemplate:
    return PromptTemplate(_load_prompt("default.txt"))


@lru_cache(maxsize=None)
def preview_template() -> PromptTemplate:
    return PromptTemplate(_load_prompt("preview.txt"))


def load_template(path: str | Path) -> PromptTemplate:
    template = PromptTemplate(Path(path).read_text("utf-8"))
    template.validate()
    return template


def formulate_prompt(
    schema: DynamicSchema, template: PromptTemplate, query: UserQuery
) -> str:
    """Render schema block, raw question, and dialect into the template."""
    return template.render(render_schema_block(schema), query.raw_text)


def formulate_preview_prompt(
    table: Table, template: PromptTemplate, query: UserQuery, n_rows: int = 5
) -> str:
    return template.render(render_preview_block(table, n_rows), query.raw_text)
