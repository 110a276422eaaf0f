"""`rt` command line: index, suggest, ask, serve, bench."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .autocomplete import suggest as run_suggest
from .bench import (
    augment_set,
    compare_reports,
    load_question_set,
    render_report_text,
    render_summary_csv,
    run_eval,
)
from .config import llm_config_from
from .errors import RtqError
from .index import create_index, load_index, persist_index
from .pipeline import MODE_WITH, MODE_WITHOUT, ask_pipeline
from .schema import load_template
from .synonyms import BuiltinSynonymProvider, LlmSynonymProvider, generate_synonyms
from .table import load_table

_MODE_NAMES = {"with": MODE_WITH, "without": MODE_WITHOUT}


def _load(csv_path: str, name: str | None, delimiter: str):
    path = Path(csv_path)
    table_name = name or path.stem
    return load_table(path.read_bytes(), name=table_name, delimiter=delimiter)


def _synonyms_for(table, provider_name: str, synonyms_file: str | None, config):
    names = [c.normalized_name for c in table.columns]
    if synonyms_file:
        return generate_synonyms(names, BuiltinSynonymProvider(synonyms_file))
    if provider_name == "none":
        return []
    if provider_name == "llm":
        return generate_synonyms(names, LlmSynonymProvider(config))
    return generate_synonyms(names, BuiltinSynonymProvider())


@click.group()
def main() -> None:
    """Query tabular data in plain English, backed by a full-text vocabulary index."""


@main.command("index")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--name", default=None, help="Table name (default: file stem).")
@click.option("--delimiter", default=",", show_default=True)
@click.option(
    "--synonym-provider",
    type=click.Choice(["builtin", "llm", "none"]),
    default="builtin",
    show_default=True,
)
@click.option("--synonyms", "synonyms_file", type=click.Path(exists=True), default=None,
              help="Custom synonyms.txt overriding the builtin dictionary.")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
def index_cmd(csv_file, output, name, delimiter, synonym_provider, synonyms_file, config_file):
    """Build the vocabulary index for CSV_FILE and write it to OUTPUT."""
    config = llm_config_from(config_file)
    table = _load(csv_file, name, delimiter)
    synonyms = _synonyms_for(table, synonym_provider, synonyms_file, config)
    index = create_index(table, synonyms)
    persist_index(index, output)
    click.echo(
        f"indexed {table.name}: {table.row_count} rows, "
        f"{len(index.token_map)} tokens, {len(index.value_entries)} values -> {output}"
    )


@main.command("suggest")
@click.argument("index_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("partial")
@click.option("-k", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--cursor", default=None, type=int, help="Cursor offset (default: end of text).")
def suggest_cmd(index_file, partial, k, cursor):
    """Print autocomplete suggestions for PARTIAL input."""
    index = load_index(index_file)
    at = len(partial) if cursor is None else max(0, min(cursor, len(partial)))
    for s in run_suggest(index, partial, at, k):
        where = f"value of {s.attribute_name}" if s.kind == "Value" else "attribute"
        click.echo(f"{s.score:6.3f}  {s.display_text}  ({where})")


@main.command("inspect")
@click.argument("index_file", type=click.Path(exists=True, dir_okay=False))
def inspect_cmd(index_file):
    """Dump an index file as readable text (debugging aid, not a load format)."""
    from .index import export_index_text

    click.echo(export_index_text(load_index(index_file)), nl=False)


@main.command("ask")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("question")
@click.option("--execute", "execute_flag", is_flag=True, help="Run the generated query.")
@click.option("--mode", type=click.Choice(["with", "without"]), default="with", show_default=True)
@click.option("--provider", type=click.Choice(["mock", "http"]), default="mock", show_default=True)
@click.option("--name", default=None)
@click.option("--delimiter", default=",", show_default=True)
@click.option("--template", "template_file", type=click.Path(exists=True), default=None)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True, help="Emit the full response as JSON.")
def ask_cmd(csv_file, question, execute_flag, mode, provider, name, delimiter,
            template_file, config_file, as_json):
    """Ask QUESTION about CSV_FILE and print the generated SQL (and answer)."""
    config = llm_config_from(config_file)
    table = _load(csv_file, name, delimiter)
    synonyms = _synonyms_for(table, "builtin", None, config)
    index = create_index(table, synonyms)
    template = load_template(template_file) if template_file else None
    response = ask_pipeline(
        table,
        index,
        question,
        execute_query=execute_flag,
        mode=_MODE_NAMES[mode],
        provider=provider,
        config=config,
        template=template,
    )
    if as_json:
        click.echo(json.dumps(response.to_json_dict(), indent=2, sort_keys=True))
        return

    if response.schema_block:
        click.echo(response.schema_block)
        click.echo()
    if response.generated_query:
        click.echo(f"SQL: {response.generated_query.sql_text}")
    if response.validation:
        for unseen in response.validation.unseen_values:
            hint = f" (did you mean {unseen.suggestion!r}?)" if unseen.suggestion else ""
            click.echo(f"warning: {unseen.attribute} = {unseen.literal!r} not in the data{hint}")
        for name_ in response.validation.unknown_columns:
            click.echo(f"warning: unknown column {name_!r}")
        for violation in response.validation.subset_violations:
            click.echo(f"warning: {violation}")
    if response.answer is not None:
        click.echo()
        click.echo(response.answer.to_csv(), nl=False)
    if response.error_stage:
        click.echo(f"error at stage {response.error_stage}: {response.error}", err=True)
        sys.exit(1)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Persist uploaded tables and indexes here and reload on start.")
@click.option("--provider", type=click.Choice(["mock", "http"]), default="http", show_default=True)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
def serve_cmd(host, port, data_dir, provider, config_file):
    """Run the HTTP service (and the browser console, when built)."""
    import uvicorn

    from .service import TableRegistry, create_app, default_static_dir

    config = llm_config_from(config_file)
    registry = TableRegistry(data_dir=data_dir, llm_config=config)
    app = create_app(
        registry=registry,
        llm_config=config,
        default_provider=provider,
        static_dir=default_static_dir(),
    )
    uvicorn.run(app, host=host, port=port)


@main.command("bench")
@click.argument("questions", type=click.Path(exists=True, dir_okay=False))
@click.option("--table", "csv_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["with", "without", "both"]), default="both",
              show_default=True)
@click.option("--provider", type=click.Choice(["mock", "http"]), default="mock", show_default=True)
@click.option("--seed", default=42, show_default=True, type=int,
              help="Seed for question augmentation.")
@click.option("--augment", is_flag=True, help="Add augmented variants of each question.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Write report.json, summary.csv, report.txt, and figures here.")
@click.option("--name", default=None)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
def bench_cmd(questions, csv_file, mode, provider, seed, augment, out_dir, name, config_file):
    """Evaluate a question set with and/or without dynamic-schema prompting."""
    config = llm_config_from(config_file)
    table = _load(csv_file, name, ",")
    synonyms = _synonyms_for(table, "builtin", None, config)
    index = create_index(table, synonyms)

    try:
        records = load_question_set(questions)
    except RtqError as exc:
        raise click.ClickException(str(exc))
    if augment:
        records = augment_set(records, seed, index)

    with_report = None
    without_report = None
    if mode in ("with", "both"):
        with_report = run_eval(records, table, index, MODE_WITH, provider, config)
    if mode in ("without", "both"):
        without_report = run_eval(records, table, index, MODE_WITHOUT, provider, config)

    primary = with_report or without_report
    assert primary is not None
    secondary = without_report if with_report is not None else None

    click.echo(render_report_text(primary, secondary))

    gains = None
    if with_report and without_report:
        gains = compare_reports(with_report, without_report)
        overall = gains.overall()
        value_based = gains.overall("value_based")
        click.echo(
            f"overall gain: {overall.gain_points:+.2f} pp"
            f" (value-based: {value_based.gain_points:+.2f} pp)"
        )

    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        doc = {
            "questions": str(questions),
            "table": table.name,
            "seed": seed,
            "augmented": bool(augment),
            "with_framework": with_report.to_json_dict() if with_report else None,
            "without_framework": without_report.to_json_dict() if without_report else None,
            "gains": gains.to_json_dict() if gains else None,
        }
        (out / "report.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8"
        )
        (out / "report.txt").write_text(render_report_text(primary, secondary), "utf-8")
        (out / "summary.csv").write_text(render_summary_csv(primary, secondary), "utf-8")
        if with_report and without_report and gains:
            from .figures import render_report_figures

            for path in render_report_figures(with_report, without_report, gains, out):
                click.echo(f"wrote {path}")
        click.echo(f"wrote {out / 'report.json'}")


if __name__ == "__main__":
    main()
