"""Benchmark harness: labeled question sets, deterministic augmentation,
with/without-framework runs, and accuracy gain tables.

Correctness is execution-result equivalence: the generated query's result
must equal the gold query's result as an order-insensitive row multiset,
with 1e-9 relative tolerance on numeric cells.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Union

from .engine import execute, parse_sql
from .errors import (
    BadRecord,
    MismatchedSets,
    NotApplicable,
    RtqError,
    SqlSyntaxError,
    UnsupportedFeature,
)
from .index import VocabIndex, lookup
from .llm import LlmConfig, ProviderSpec
from .pipeline import MODE_WITH, ask_pipeline
from .schema import UserQuery, extract_keywords
from .table import Table
from .text import normalize_phrase

DIFFICULTIES = ("easy", "medium", "hard")
CATEGORIES = ("generic", "value_based")
TECHNIQUES = ("synonym_replacement", "word_deletion", "position_swap", "sentence_shuffle")

FAILURE_NO_QUERY = "no-query"
FAILURE_PARSE = "parse-error"
FAILURE_WRONG = "wrong-result"
CORRECT = "correct"

NUMERIC_REL_TOL = 1e-9


@dataclass(frozen=True)
class EvalRecord:
    id: str
    question: str
    gold_sql: str
    difficulty: str
    category: str
    dataset: str


@dataclass(frozen=True)
class QuestionOutcome:
    id: str
    difficulty: str
    category: str
    dataset: str
    generated_sql: str | None
    outcome: str  # correct | no-query | parse-error | wrong-result
    detail: str = ""


@dataclass(frozen=True)
class EvalCell:
    total: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass(frozen=True)
class EvalReport:
    mode: str
    outcomes: tuple[QuestionOutcome, ...]

    def ids(self) -> frozenset[str]:
        return frozenset(o.id for o in self.outcomes)

    def cell(self, dataset: str | None = None, category: str | None = None,
             difficulty: str | None = None) -> EvalCell:
        total = correct = 0
        for o in self.outcomes:
            if dataset is not None and o.dataset != dataset:
                continue
            if category is not None and o.category != category:
                continue
            if difficulty is not None and o.difficulty != difficulty:
                continue
            total += 1
            correct += o.outcome == CORRECT
        return EvalCell(total, correct)

    def datasets(self) -> list[str]:
        return sorted({o.dataset for o in self.outcomes})

    def to_json_dict(self) -> dict:
        cells = []
        for dataset in self.datasets():
            for category in CATEGORIES:
                for difficulty in DIFFICULTIES:
                    cell = self.cell(dataset, category, difficulty)
                    if cell.total == 0:
                        continue
                    cells.append(
                        {
                            "dataset": dataset,
                            "category": category,
                            "difficulty": difficulty,
                            "total": cell.total,
                            "correct": cell.correct,
                            "accuracy": round(cell.accuracy, 6),
                        }
                    )
        return {
            "mode": self.mode,
            "cells": cells,
            "outcomes": [
                {
                    "id": o.id,
                    "dataset": o.dataset,
                    "category": o.category,
                    "difficulty": o.difficulty,
                    "generated_sql": o.generated_sql,
                    "outcome": o.outcome,
                    "detail": o.detail,
                }
                for o in self.outcomes
            ],
        }


# --- question sets ---------------------------------------------------------------

_REQUIRED_FIELDS = ("id", "question", "gold_sql", "difficulty", "category", "dataset")


def load_question_set(source: Union[str, Path, IO[str]]) -> list[EvalRecord]:
    """Line-JSON, one record per line; every gold query must parse under the
    engine grammar and enums must be from the closed sets."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text("utf-8")
    else:
        text = source.read()

    records: list[EvalRecord] = []
    seen_ids: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except ValueError as exc:
            raise BadRecord(lineno, f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise BadRecord(lineno, "record must be a JSON object")
        for fld in _REQUIRED_FIELDS:
            if fld not in doc or not isinstance(doc[fld], str) or not doc[fld].strip():
                raise BadRecord(lineno, f"missing or empty field {fld!r}")
        if doc["difficulty"] not in DIFFICULTIES:
            raise BadRecord(lineno, f"difficulty must be one of {DIFFICULTIES}")
        if doc["category"] not in CATEGORIES:
            raise BadRecord(lineno, f"category must be one of {CATEGORIES}")
        if doc["id"] in seen_ids:
            raise BadRecord(lineno, f"duplicate id {doc['id']!r}")
        seen_ids.add(doc["id"])
        try:
            parse_sql(doc["gold_sql"])
        except (SqlSyntaxError, UnsupportedFeature) as exc:
            raise BadRecord(lineno, f"gold_sql does not parse: {exc}") from exc
        records.append(
            EvalRecord(
                id=doc["id"],
                question=doc["question"],
                gold_sql=doc["gold_sql"],
                difficulty=doc["difficulty"],
                category=doc["category"],
                dataset=doc["dataset"],
            )
        )
    return records


# --- augmentation ------------------------------------------------------------------

# connective-word substitutions; data values are protected and never touched
_SYNONYM_MAP = {
    "of": "in",
    "for": "of",
    "what": "which",
    "show": "display",
    "give": "provide",
    "across": "over",
    "all": "every",
    "would": "could",
}


def _protected_norms(question: str, index: VocabIndex | None) -> set[str]:
    """Normalized tokens that hit the index exactly (alone or inside a matched
    n-gram), plus digit-bearing tokens. These must survive augmentation."""
    protected: set[str] = set()
    query = UserQuery.from_text(question)
    for tok in query.normalized_tokens:
        if any(ch.isdigit() for ch in tok):
            protected.add(tok)
    if index is None:
        return protected
    try:
        keywords = extract_keywords(query, index)
    except RtqError:
        return protected
    for kw in keywords.keywords:
        if lookup(index, kw.text, "exact"):
            protected.update(kw.text.split(" "))
    return protected


def augment_question(
    record: EvalRecord,
    technique: str,
    seed: int,
    index: VocabIndex | None = None,
) -> EvalRecord:
    """Deterministic question variant; gold_sql is untouched by construction.

    Words whose normalized form matches the index (value/attribute vocabulary)
    are never deleted, replaced, or moved.
    """
    if technique not in TECHNIQUES:
        raise ValueError(f"unknown technique: {technique}")
    words = record.question.split()
    if technique == "word_deletion":
        if len(words) < 3:
            raise NotApplicable("word_deletion needs at least 3 words")
    elif len(words) < 2:
        raise NotApplicable(f"{technique} needs at least 2 words")

    rng = random.Random(seed)
    protected = _protected_norms(record.question, index)

    def movable(i: int) -> bool:
        norm = normalize_phrase(words[i])
        return bool(norm) and norm not in protected

    if technique == "synonym_replacement":
        candidates = [
            i for i in range(len(words))
            if movable(i) and normalize_phrase(words[i]) in _SYNONYM_MAP
        ]
        if not candidates:
            raise NotApplicable("no replaceable connective word")
        i = rng.choice(candidates)
        replacement = _SYNONYM_MAP[normalize_phrase(words[i])]
        if words[i][:1].isupper():
            replacement = replacement.capitalize()
        new_words = words[:i] + [replacement] + words[i + 1 :]

    elif technique == "word_deletion":
        candidates = [i for i in range(1, len(words)) if movable(i)]
        if not candidates:
            raise NotApplicable("no deletable word")
        i = rng.choice(candidates)
        new_words = words[:i] + words[i + 1 :]

    elif technique == "position_swap":
        candidates = [
            i for i in range(len(words) - 1) if movable(i) and movable(i + 1)
        ]
        if not candidates:
            raise NotApplicable("no adjacent movable pair")
        i = rng.choice(candidates)
        new_words = list(words)
        new_words[i], new_words[i + 1] = new_words[i + 1], new_words[i]

    else:  # sentence_shuffle
        positions = [i for i in range(len(words)) if movable(i)]
        if len(positions) < 2:
            raise NotApplicable("fewer than 2 movable words")
        shuffled = list(positions)
        rng.shuffle(shuffled)
        new_words = list(words)
        for src, dst in zip(positions, shuffled):
            new_words[dst] = words[src]

    return EvalRecord(
        id=f"{record.id}#aug-{technique}-s{seed}",
        question=" ".join(new_words),
        gold_sql=record.gold_sql,
        difficulty=record.difficulty,
        category=record.category,
        dataset=record.dataset,
    )


def augment_set(
    records: list[EvalRecord],
    seed: int,
    index: VocabIndex | None = None,
    techniques: Iterable[str] = TECHNIQUES,
) -> list[EvalRecord]:
    """Originals plus one variant per applicable technique, deterministically."""
    out = list(records)
    for record in records:
        for technique in techniques:
            try:
                out.append(augment_question(record, technique, seed, index))
            except NotApplicable:
                continue
    return out


# --- result comparison --------------------------------------------------------------

def _cells_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if math.isclose(a, b, rel_tol=NUMERIC_REL_TOL, abs_tol=0.0):
            return True
        return a == b
    return a == b


def _rows_equal(ra: tuple, rb: tuple) -> bool:
    return len(ra) == len(rb) and all(_cells_equal(x, y) for x, y in zip(ra, rb))


def _sort_key(row: tuple) -> tuple:
    return tuple((type(v).__name__, repr(v)) for v in row)


def results_equivalent(a, b) -> bool:
    """Order-insensitive row multiset comparison with numeric tolerance."""
    if len(a.columns) != len(b.columns) or len(a.rows) != len(b.rows):
        return False
    sa = sorted(a.rows, key=_sort_key)
    sb = sorted(b.rows, key=_sort_key)
    if all(_rows_equal(x, y) for x, y in zip(sa, sb)):
        return True
    # tolerance can break sort alignment; fall back to greedy matching
    remaining = list(sb)
    for row in sa:
        for i, other in enumerate(remaining):
            if _rows_equal(row, other):
                remaining.pop(i)
                break
        else:
            return False
    return True


# --- evaluation ----------------------------------------------------------------------

def run_eval(
    records: list[EvalRecord],
    table: Table,
    index: VocabIndex,
    mode: str = MODE_WITH,
    provider: ProviderSpec = "mock",
    config: LlmConfig | None = None,
) -> EvalReport:
    """Evaluate every record; per-question failures are classified, never raised."""
    outcomes: list[QuestionOutcome] = []
    config = config or LlmConfig()
    for record in records:
        outcomes.append(_evaluate_one(record, table, index, mode, provider, config))
    outcomes.sort(key=lambda o: o.id)
    return EvalReport(mode=mode, outcomes=tuple(outcomes))


def _evaluate_one(
    record: EvalRecord,
    table: Table,
    index: VocabIndex,
    mode: str,
    provider: ProviderSpec,
    config: LlmConfig,
) -> QuestionOutcome:
    def outcome(generated_sql: str | None, kind: str, detail: str = "") -> QuestionOutcome:
        return QuestionOutcome(
            id=record.id,
            difficulty=record.difficulty,
            category=record.category,
            dataset=record.dataset,
            generated_sql=generated_sql,
            outcome=kind,
            detail=detail,
        )

    response = ask_pipeline(
        table, index, record.question,
        execute_query=False, mode=mode, provider=provider, config=config,
    )
    generated_sql = response.generated_query.sql_text if response.generated_query else None

    if response.error_stage in ("schema", "prompt", "generate"):
        # nothing extractable came back from the model
        return outcome(
            generated_sql, FAILURE_NO_QUERY, f"{response.error_stage}: {response.error}"
        )
    if response.error_stage == "parse":
        return outcome(generated_sql, FAILURE_PARSE, response.error or "")
    if response.error_stage is not None:
        return outcome(generated_sql, FAILURE_WRONG, f"{response.error_stage}: {response.error}")

    try:
        gold_result = execute(parse_sql(record.gold_sql), table)
    except RtqError as exc:  # pragma: no cover - load_question_set parses gold
        return outcome(generated_sql, FAILURE_WRONG, f"gold query failed: {exc}")

    try:
        got_result = execute(response.ast, table)
    except RtqError as exc:
        return outcome(generated_sql, FAILURE_WRONG, f"execution failed: {exc}")

    if results_equivalent(gold_result, got_result):
        return outcome(generated_sql, CORRECT)
    return outcome(
        generated_sql,
        FAILURE_WRONG,
        f"expected {gold_result.rows!r}, got {got_result.rows!r}",
    )


# --- gains ------------------------------------------------------------------------

@dataclass(frozen=True)
class GainRow:
    dataset: str
    category: str
    total: int
    with_accuracy: float
    without_accuracy: float

    @property
    def gain_points(self) -> float:
        return (self.with_accuracy - self.without_accuracy) * 100.0


@dataclass(frozen=True)
class GainTable:
    rows: tuple[GainRow, ...]

    def overall(self, category: str | None = None) -> GainRow:
        rows = [r for r in self.rows if r.dataset != "overall"]
        if category is not None:
            rows = [r for r in rows if r.category == category]
        total = sum(r.total for r in rows)
        if total == 0:
            return GainRow("overall", category or "all", 0, 0.0, 0.0)
        w = sum(r.with_accuracy * r.total for r in rows) / total
        wo = sum(r.without_accuracy * r.total for r in rows) / total
        return GainRow("overall", category or "all", total, w, wo)

    def to_json_dict(self) -> dict:
        def row_doc(r: GainRow) -> dict:
            return {
                "dataset": r.dataset,
                "category": r.category,
                "total": r.total,
                "with_accuracy": round(r.with_accuracy, 6),
                "without_accuracy": round(r.without_accuracy, 6),
                "gain_points": round(r.gain_points, 4),
            }

        return {
            "cells": [row_doc(r) for r in self.rows],
            "overall": row_doc(self.overall()),
            "overall_by_category": {c: row_doc(self.overall(c)) for c in CATEGORIES},
        }


def compare_reports(with_report: EvalReport, without_report: EvalReport) -> GainTable:
    """Percentage-point accuracy delta per dataset and category."""
    if with_report.ids() != without_report.ids():
        raise MismatchedSets("reports cover different question ids")
    rows: list[GainRow] = []
    for dataset in with_report.datasets():
        for category in CATEGORIES:
            cell_with = with_report.cell(dataset, category)
            cell_without = without_report.cell(dataset, category)
            if cell_with.total == 0:
                continue
            rows.append(
                GainRow(
                    dataset=dataset,
                    category=category,
                    total=cell_with.total,
                    with_accuracy=cell_with.accuracy,
                    without_accuracy=cell_without.accuracy,
                )
            )
    return GainTable(tuple(rows))


# --- plain-text rendering ------------------------------------------------------------

def render_report_text(with_report: EvalReport, without_report: EvalReport | None) -> str:
    lines: list[str] = []
    header = f"{'dataset':<16} {'category':<12} {'difficulty':<10} {'n':>4} {'with':>8}"
    if without_report is not None:
        header += f" {'without':>8} {'gain pp':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for dataset in with_report.datasets():
        for category in CATEGORIES:
            for difficulty in (*DIFFICULTIES, None):
                cell = with_report.cell(dataset, category, difficulty)
                if cell.total == 0:
                    continue
                label = difficulty or "all"
                line = (
                    f"{dataset:<16} {category:<12} {label:<10} {cell.total:>4}"
                    f" {cell.accuracy:>8.3f}"
                )
                if without_report is not None:
                    other = without_report.cell(dataset, category, difficulty)
                    gain = (cell.accuracy - other.accuracy) * 100
                    line += f" {other.accuracy:>8.3f} {gain:>+8.2f}"
                lines.append(line)
    return "\n".join(lines) + "\n"


def render_summary_csv(with_report: EvalReport, without_report: EvalReport | None) -> str:
    out = ["dataset,category,difficulty,total,with_correct,with_accuracy"
           + (",without_correct,without_accuracy,gain_points" if without_report else "")]
    for dataset in with_report.datasets():
        for category in CATEGORIES:
            for difficulty in DIFFICULTIES:
                cell = with_report.cell(dataset, category, difficulty)
                if cell.total == 0:
                    continue
                row = (
                    f"{dataset},{category},{difficulty},{cell.total},"
                    f"{cell.correct},{cell.accuracy:.6f}"
                )
                if without_report is not None:
                    other = without_report.cell(dataset, category, difficulty)
                    gain = (cell.accuracy - other.accuracy) * 100
                    row += f",{other.correct},{other.accuracy:.6f},{gain:.4f}"
                out.append(row)
    return "\n".join(out) + "\n"
