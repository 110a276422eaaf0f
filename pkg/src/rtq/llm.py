"""Completion gateway: OpenAI-compatible chat endpoint or a deterministic mock.

The mock is a rule table matched against the prompt, backed by a small
deterministic SQL synthesizer that reads the rendered schema/preview block
and the question line out of the prompt. All first-party tests run on it.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Protocol, Sequence, Union

from .errors import EmptyCompletion, LlmHttpError, LlmTimeout, NoQueryFound

_ENV_BASE_URL = "RT_LLM_BASE_URL"
_ENV_MODEL = "RT_LLM_MODEL"
_ENV_API_KEY = "RT_LLM_API_KEY"


@dataclass(frozen=True)
class LlmConfig:
    base_url: str = "http://localhost:1234/v1"
    model_name: str = "local-model"
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 30.0
    api_key: str | None = None

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @classmethod
    def from_mapping(cls, values: dict[str, str], env: dict[str, str] | None = None) -> "LlmConfig":
        """Build from a config-file mapping; RT_LLM_* env vars win."""
        env = os.environ if env is None else env
        return cls(
            base_url=env.get(_ENV_BASE_URL) or values.get("llm.base_url", cls.base_url),
            model_name=env.get(_ENV_MODEL) or values.get("llm.model", cls.model_name),
            temperature=float(values.get("llm.temperature", cls.temperature)),
            max_tokens=int(values.get("llm.max_tokens", cls.max_tokens)),
            timeout=float(values.get("llm.timeout", cls.timeout)),
            api_key=env.get(_ENV_API_KEY) or values.get("llm.api_key") or None,
        )


@dataclass(frozen=True)
class GeneratedQuery:
    raw_completion: str
    sql_text: str
    extraction_method: str  # fenced-block | first-select | whole-text


class CompletionProvider(Protocol):
    def complete(self, prompt: str, config: LlmConfig) -> str: ...


class HttpProvider:
    """POSTs a single-user-message chat request to {base_url}/chat/completions."""

    def complete(self, prompt: str, config: LlmConfig) -> str:
        import httpx

        url = config.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
        }
        headers = {}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"

        # one retry on timeout, none on HTTP errors: a 4xx is a prompt bug
        for attempt in (1, 2):
            try:
                response = httpx.post(
                    url, json=payload, headers=headers, timeout=config.timeout
                )
            except httpx.TimeoutException as exc:
                if attempt == 2:
                    raise LlmTimeout(f"no response within {config.timeout}s") from exc
                continue
            except httpx.HTTPError as exc:
                raise LlmTimeout(f"transport failure: {exc}") from exc
            if response.status_code != 200:
                raise LlmHttpError(response.status_code, response.text[:200])
            data = response.json()
            try:
                return data["choices"][0]["message"]["content"] or ""
            except (KeyError, IndexError, TypeError) as exc:
                raise EmptyCompletion(f"malformed response body: {exc}") from exc
        raise LlmTimeout("unreachable")  # pragma: no cover


# --- deterministic mock ---------------------------------------------------------

_AGGREGATE_CUES: tuple[tuple[str, str], ...] = (
    ("standard deviation", "STDDEV"),
    ("std dev", "STDDEV"),
    ("stddev", "STDDEV"),
    ("average", "AVG"),
    ("mean", "AVG"),
    ("how many", "COUNT"),
    ("number of", "COUNT"),
    ("count", "COUNT"),
    ("total", "SUM"),
    ("sum", "SUM"),
    ("highest", "MAX"),
    ("maximum", "MAX"),
    ("largest", "MAX"),
    ("lowest", "MIN"),
    ("minimum", "MIN"),
    ("smallest", "MIN"),
)

_GROUP_CUES = ("by", "per", "across", "each")

# connective vocabulary never mistaken for a data value by the mock
_MOCK_NOISE = frozenset(
    """a an and are average by calculate can count could deviation different does
    each entire find for from give highest how in is it largest list lowest many
    maximum mean minimum much number of on or per please provide rows selling show
    smallest sold standard sum table tell the to total trend us various what when
    where which std dev stddev who whole would you all data value values
    """.split()
)

_NUMERIC_TYPES = {"Integer", "Float"}

_SCHEMA_HEADER = re.compile(r"^TABLE (\S+) \((\d+) rows\)$", re.MULTILINE)
_PREVIEW_HEADER = re.compile(r"^TABLE (\S+) \(top (\d+) of (\d+) rows\)$", re.MULTILINE)
_ATTR_LINE = re.compile(r"^- (\S+) \((\w+)\)(?: values: (.*))?$")
_QUOTED = re.compile(r"'((?:[^']|'')*)'")


def _unquote_all(rendered: str) -> list[str]:
    return [m.group(1).replace("''", "'") for m in _QUOTED.finditer(rendered)]


def _question_from(prompt: str) -> str:
    for line in reversed(prompt.splitlines()):
        if line.startswith("Question: "):
            return line[len("Question: ") :]
    return ""


def _quote_sql(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


@dataclass
class _PromptView:
    table: str
    columns: list[tuple[str, str]]            # (name, dtype-or-guess)
    schema_values: list[tuple[str, list[str]]]  # dynamic-schema value lists
    preview_cells: dict[str, list[str]]        # column -> raw preview cell texts
    question: str


def _parse_prompt(prompt: str) -> _PromptView | None:
    question = _question_from(prompt)
    lines = prompt.splitlines()

    m = _SCHEMA_HEADER.search(prompt)
    if m and not _PREVIEW_HEADER.search(prompt):
        start = prompt[: m.start()].count("\n")
        columns: list[tuple[str, str]] = []
        schema_values: list[tuple[str, list[str]]] = []
        for line in lines[start + 1 :]:
            attr = _ATTR_LINE.match(line)
            if not attr:
                break
            name, dtype, rendered = attr.group(1), attr.group(2), attr.group(3)
            columns.append((name, dtype))
            if rendered:
                schema_values.append((name, _unquote_all(rendered)))
        return _PromptView(m.group(1), columns, schema_values, {}, question)

    m = _PREVIEW_HEADER.search(prompt)
    if m:
        start = prompt[: m.start()].count("\n")
        body = lines[start + 1 :]
        if not body:
            return _PromptView(m.group(1), [], [], {}, question)
        header = body[0].split(",")
        cells: dict[str, list[str]] = {name: [] for name in header}
        dtypes = {name: "Integer" for name in header}
        for line in body[1 : 1 + int(m.group(2))]:
            parts = line.split(",")
            if len(parts) != len(header):
                break
            for name, cell in zip(header, parts):
                cells[name].append(cell)
                try:
                    float(cell)
                except ValueError:
                    if cell != "":
                        dtypes[name] = "Text"
        columns = [(name, dtypes[name]) for name in header]
        return _PromptView(m.group(1), columns, [], cells, question)

    return None


class MockLlm:
    """Deterministic stand-in for a completion endpoint.

    Explicit rules (regex searched against the prompt) win; otherwise the
    built-in synthesizer derives a SELECT from the prompt's schema or preview
    block plus the question line. Same prompt, same completion, always.
    """

    def __init__(
        self,
        rules: Sequence[tuple[str, str]] = (),
        synthesize: bool = True,
    ):
        self.rules = [(re.compile(p, re.DOTALL), c) for p, c in rules]
        self.synthesize = synthesize

    def complete(self, prompt: str, config: LlmConfig) -> str:
        for pattern, completion in self.rules:
            if pattern.search(prompt):
                return completion
        if not self.synthesize:
            return ""
        view = _parse_prompt(prompt)
        if view is None or not view.question:
            return ""
        sql = self._synthesize(view)
        return f"```sql\n{sql}\n```"

    # -- synthesis rules ---------------------------------------------------

    def _synthesize(self, view: _PromptView) -> str:
        from .text import tokenize

        q_lower = " " + " ".join(tokenize(view.question)) + " "
        q_tokens = tokenize(view.question)

        agg = None
        for cue, func in _AGGREGATE_CUES:
            if f" {cue} " in q_lower:
                agg = func
                break

        def find_column(
            tokens: list[str], names: list[str], at: int | None = None
        ) -> str | None:
            # a column is "named" when its name tokens appear contiguously
            candidates = [(name, tokenize(name)) for name in names]
            for name, parts in sorted(candidates, key=lambda x: -len(x[1])):
                if not parts:
                    continue
                joined = "".join(parts)
                positions = range(len(tokens) - len(parts) + 1)
                if at is not None:
                    positions = [at] if at <= len(tokens) - len(parts) else []
                for i in positions:
                    if tokens[i : i + len(parts)] == parts:
                        return name
                if at is not None and at < len(tokens) and tokens[at] == joined:
                    return name
                if at is None and joined in tokens:
                    return name
            return None

        all_names = [name for name, _ in view.columns]
        group_col = None
        for i, tok in enumerate(q_tokens):
            if tok in _GROUP_CUES and i + 1 < len(q_tokens):
                candidate = find_column(q_tokens, all_names, at=i + 1)
                if candidate:
                    group_col = candidate
                    break

        # the aggregate argument must be numeric; a named text column is a
        # filter/grouping hint, not a measure
        numeric_cols = [n for n, t in view.columns if t in _NUMERIC_TYPES]
        rest = [t for t in q_tokens if t != (group_col or "")]
        named = find_column(rest, [n for n in numeric_cols if n != group_col])
        measure = named
        if measure is None:
            measure = next((c for c in numeric_cols if c != group_col), None)

        filters = self._filters(view, q_tokens)

        if agg == "COUNT":
            select_expr = "COUNT(*)"
        elif agg and measure:
            select_expr = f"{agg}({measure})"
        elif measure:
            select_expr = measure
        else:
            select_expr = "*"

        parts = ["SELECT "]
        if group_col:
            parts.append(f"{group_col}, {select_expr}")
        else:
            parts.append(select_expr)
        parts.append(f" FROM {view.table}")
        if filters:
            parts.append(" WHERE " + " AND ".join(filters))
        if group_col:
            parts.append(f" GROUP BY {group_col}")
        return "".join(parts)

    def _filters(self, view: _PromptView, q_tokens: list[str]) -> list[str]:
        from .text import normalize_phrase, tokenize

        filters: list[str] = []
        if view.schema_values:
            for attr, values in view.schema_values:
                if len(values) == 1:
                    filters.append(f"{attr} = {_quote_sql(values[0])}")
                elif values:
                    joined = ", ".join(_quote_sql(v) for v in values)
                    filters.append(f"{attr} IN ({joined})")
            return filters

        if not view.preview_cells:
            return filters

        # Baseline behavior: only values literally visible in the preview can
        # be quoted correctly; anything else is echoed as the user spelled it.
        cell_lookup: dict[str, tuple[str, str]] = {}
        for col, cells in view.preview_cells.items():
            for cell in cells:
                norm = normalize_phrase(cell)
                if norm and norm not in cell_lookup:
                    cell_lookup[norm] = (col, cell)

        column_tokens = {t for name, _ in view.columns for t in tokenize(name)}
        used = [False] * len(q_tokens)
        matched_cols: set[str] = set()
        for n in (3, 2, 1):
            for i in range(0, len(q_tokens) - n + 1):
                if any(used[i : i + n]):
                    continue
                gram = " ".join(q_tokens[i : i + n])
                hit = cell_lookup.get(gram)
                if hit and hit[0] not in matched_cols:
                    col, cell = hit
                    filters.append(f"{col} = {_quote_sql(cell)}")
                    matched_cols.add(col)
                    for j in range(i, i + n):
                        used[j] = True
        consumed = {q_tokens[j] for j in range(len(q_tokens)) if used[j]}

        # leftover capitalized / id-like words become guessed literals
        raw_words = re.findall(r"[\w-]+", view.question)
        text_cols = [n for n, t in view.columns if t == "Text" and n not in matched_cols]
        for word in raw_words:
            base = normalize_phrase(word)
            if not base or base in _MOCK_NOISE or base in column_tokens:
                continue
            if all(tok in consumed for tok in base.split(" ")):
                continue
            if base in cell_lookup or not text_cols:
                continue
            looks_like_value = word[:1].isupper() or any(ch.isdigit() for ch in word)
            if not looks_like_value:
                continue
            col = text_cols.pop(0)
            filters.append(f"{col} = {_quote_sql(word)}")
            matched_cols.add(col)
        return filters


_DEFAULT_MOCK = MockLlm()
_HTTP = HttpProvider()

ProviderSpec = Union[str, CompletionProvider]


def resolve_provider(provider: ProviderSpec) -> CompletionProvider:
    if provider == "mock":
        return _DEFAULT_MOCK
    if provider == "http":
        return _HTTP
    if isinstance(provider, str):
        raise ValueError(f"unknown provider: {provider}")
    return provider


def complete(prompt: str, config: LlmConfig, provider: ProviderSpec = "mock") -> str:
    """Send one user message, return the first choice's content."""
    text = resolve_provider(provider).complete(prompt, config)
    if not text or not text.strip():
        raise EmptyCompletion("provider returned no content")
    return text


_FENCE = re.compile(r"```[a-zA-Z]*\s*\n(.*?)```", re.DOTALL)
_SELECT_AT = re.compile(r"\bselect\b", re.IGNORECASE)


def _clip_statement(text: str) -> str:
    semi = text.find(";")
    return (text[:semi] if semi != -1 else text).strip()


def extract_sql(completion: str) -> tuple[str, str]:
    """Pull the SQL statement out of free-form completion text.

    Order: fenced code block, then first SELECT through `;` or end of text,
    then the whole text when it already is a bare statement.
    """
    fence = _FENCE.search(completion)
    if fence:
        inner = _clip_statement(fence.group(1))
        if inner:
            return inner, "fenced-block"

    stripped = completion.strip()
    if _SELECT_AT.match(stripped):
        return _clip_statement(stripped), "whole-text"

    m = _SELECT_AT.search(completion)
    if m:
        return _clip_statement(completion[m.start() :]), "first-select"

    raise NoQueryFound("no SELECT statement in completion")


def generate_db_query(
    prompt: str, config: LlmConfig, provider: ProviderSpec = "mock"
) -> GeneratedQuery:
    """Completion plus extracted statement; raises NoQueryFound when no SELECT appears."""
    completion = complete(prompt, config, provider)
    sql_text, method = extract_sql(completion)
    return GeneratedQuery(
        raw_completion=completion, sql_text=sql_text, extraction_method=method
    )
