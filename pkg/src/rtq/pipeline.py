"""End-to-end ask pipeline: question to (schema, prompt, SQL, validation, answer).

Composes the question-time stages and reports per-stage timings. Any stage
failure is captured with its stage name; nothing propagates as a bare
exception out of ask_pipeline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .engine import QueryAST, ResultTable, ValidationReport, execute, parse_sql, validate
from .errors import RtqError
from .index import VocabIndex
from .llm import GeneratedQuery, LlmConfig, ProviderSpec, generate_db_query
from .schema import (
    DynamicSchema,
    PromptTemplate,
    UserQuery,
    build_dynamic_schema,
    default_template,
    formulate_preview_prompt,
    formulate_prompt,
    preview_template,
    render_schema_block,
)
from .table import Table

MODE_WITH = "with_framework"
MODE_WITHOUT = "without_framework"


@dataclass
class AskResponse:
    question: str
    mode: str
    dynamic_schema: DynamicSchema | None = None
    schema_block: str | None = None
    prompt_used: str | None = None
    generated_query: GeneratedQuery | None = None
    ast: QueryAST | None = None
    validation: ValidationReport | None = None
    answer: ResultTable | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)
    error_stage: str | None = None
    error: str | None = None

    def ok(self) -> bool:
        return self.error_stage is None

    def to_json_dict(self, include_timings: bool = True) -> dict:
        doc: dict = {
            "question": self.question,
            "mode": self.mode,
            "dynamic_schema": _schema_json(self.dynamic_schema),
            "schema_block": self.schema_block,
            "prompt_used": self.prompt_used,
            "generated_query": (
                {
                    "raw_completion": self.generated_query.raw_completion,
                    "sql_text": self.generated_query.sql_text,
                    "extraction_method": self.generated_query.extraction_method,
                }
                if self.generated_query
                else None
            ),
            "validation": self.validation.to_json_dict() if self.validation else None,
            "answer": self.answer.to_json_dict() if self.answer is not None else None,
            "error_stage": self.error_stage,
            "error": self.error,
        }
        if include_timings:
            doc["timings_ms"] = {k: round(v, 3) for k, v in self.timings_ms.items()}
        return doc


def _schema_json(schema: DynamicSchema | None) -> dict | None:
    if schema is None:
        return None

    def attrs(entries) -> list[dict]:
        return [
            {
                "name": a.name,
                "dtype": a.dtype.value,
                "keyword": a.keyword,
                "values": [
                    {"canonical": v.canonical_text, "keyword": v.keyword} for v in a.values
                ],
            }
            for a in entries
        ]

    return {
        "table_name": schema.table_name,
        "row_count": schema.row_count,
        "direct_attributes": attrs(schema.direct_attributes),
        "indirect_attributes": attrs(schema.indirect_attributes),
        "unmatched_keywords": list(schema.unmatched_keywords),
        "full_schema_fallback": schema.full_schema_fallback,
    }


class _StageClock:
    def __init__(self, timings: dict[str, float]):
        self.timings = timings

    def run(self, stage: str, fn):
        started = time.perf_counter()
        try:
            return fn()
        finally:
            self.timings[stage] = (time.perf_counter() - started) * 1000.0


def ask_pipeline(
    table: Table,
    index: VocabIndex,
    question: str,
    *,
    execute_query: bool = False,
    mode: str = MODE_WITH,
    provider: ProviderSpec = "mock",
    config: LlmConfig | None = None,
    template: PromptTemplate | None = None,
) -> AskResponse:
    """Run the ask flow; in without_framework mode the dynamic schema is
    replaced by a fixed top-5-rows preview."""
    if mode not in (MODE_WITH, MODE_WITHOUT):
        raise ValueError(f"unknown mode: {mode}")
    config = config or LlmConfig()
    response = AskResponse(question=question, mode=mode)
    clock = _StageClock(response.timings_ms)

    def fail(stage: str, exc: Exception) -> AskResponse:
        response.error_stage = stage
        response.error = str(exc)
        return response

    query = UserQuery.from_text(question)

    if mode == MODE_WITH:
        try:
            schema, _ = clock.run("schema", lambda: build_dynamic_schema(query, index))
        except RtqError as exc:
            return fail("schema", exc)
        response.dynamic_schema = schema
        response.schema_block = render_schema_block(schema)
        tpl = template or default_template()
        try:
            prompt = clock.run("prompt", lambda: formulate_prompt(schema, tpl, query))
        except RtqError as exc:
            return fail("prompt", exc)
    else:
        tpl = template or preview_template()
        try:
            prompt = clock.run(
                "prompt", lambda: formulate_preview_prompt(table, tpl, query)
            )
        except RtqError as exc:
            return fail("prompt", exc)

    response.prompt_used = prompt

    try:
        generated = clock.run(
            "generate", lambda: generate_db_query(prompt, config, provider)
        )
    except RtqError as exc:
        return fail("generate", exc)
    response.generated_query = generated

    try:
        ast = clock.run("parse", lambda: parse_sql(generated.sql_text))
    except RtqError as exc:
        return fail("parse", exc)
    response.ast = ast

    try:
        report = clock.run("validate", lambda: validate(ast, table, index))
    except RtqError as exc:
        return fail("validate", exc)
    response.validation = report

    if execute_query and report.executable():
        try:
            response.answer = clock.run("execute", lambda: execute(ast, table))
        except RtqError as exc:
            return fail("execute", exc)
    return response
