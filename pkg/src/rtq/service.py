"""HTTP front door: table registry plus the ask/autocomplete/schema endpoints.

Stage failures inside the ask pipeline come back as structured fields in the
response body (with the failing stage named), not as 500s. The registry takes
exclusive locks only for insert/replace; reads share the immutable objects.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .autocomplete import suggest
from .errors import MalformedCsv, EmptyTable, RtqError, UnknownTable
from .index import VocabIndex, create_index, load_index, persist_index
from .llm import LlmConfig, ProviderSpec
from .pipeline import MODE_WITH, MODE_WITHOUT, ask_pipeline
from .synonyms import BuiltinSynonymProvider, LlmSynonymProvider, generate_synonyms
from .table import Table, load_table


@dataclass(frozen=True)
class RegisteredTable:
    table: Table
    index: VocabIndex
    built_at: float


def _table_id(name: str, csv_bytes: bytes) -> str:
    return hashlib.sha256(name.encode("utf-8") + b"\0" + csv_bytes).hexdigest()[:12]


def _build_index(table: Table, synonym_provider: str, llm_config: LlmConfig) -> VocabIndex:
    names = [c.normalized_name for c in table.columns]
    if synonym_provider == "none":
        synonyms = []
    elif synonym_provider == "llm":
        synonyms = generate_synonyms(names, LlmSynonymProvider(llm_config))
    else:
        synonyms = generate_synonyms(names, BuiltinSynonymProvider())
    return create_index(table, synonyms)


class TableRegistry:
    """In-memory table/index store with optional directory persistence."""

    def __init__(self, data_dir: str | Path | None = None, llm_config: LlmConfig | None = None):
        self._lock = threading.RLock()
        self._entries: dict[str, RegisteredTable] = {}
        self.data_dir = Path(data_dir) if data_dir else None
        self.llm_config = llm_config or LlmConfig()
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._reload()

    def register(
        self, name: str, csv_bytes: bytes, synonym_provider: str = "builtin",
        delimiter: str = ",",
    ) -> tuple[str, RegisteredTable]:
        table = load_table(csv_bytes, name=name, delimiter=delimiter)
        index = _build_index(table, synonym_provider, self.llm_config)
        table_id = _table_id(name, csv_bytes)
        entry = RegisteredTable(table=table, index=index, built_at=time.time())
        with self._lock:
            self._entries[table_id] = entry
        if self.data_dir:
            self._persist(table_id, name, csv_bytes, index, delimiter)
        return table_id, entry

    def get(self, table_id: str) -> RegisteredTable:
        with self._lock:
            entry = self._entries.get(table_id)
        if entry is None:
            raise UnknownTable(table_id)
        return entry

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._entries)

    def rebuild(self, table_id: str, synonym_provider: str = "builtin") -> RegisteredTable:
        entry = self.get(table_id)
        index = _build_index(entry.table, synonym_provider, self.llm_config)
        new_entry = RegisteredTable(table=entry.table, index=index, built_at=time.time())
        with self._lock:
            self._entries[table_id] = new_entry
        if self.data_dir:
            persist_index(index, str(self.data_dir / f"{table_id}.idx"))
        return new_entry

    # -- directory persistence ------------------------------------------------

    def _persist(
        self, table_id: str, name: str, csv_bytes: bytes, index: VocabIndex, delimiter: str
    ) -> None:
        assert self.data_dir is not None
        (self.data_dir / f"{table_id}.csv").write_bytes(csv_bytes)
        meta = {"name": name, "delimiter": delimiter}
        (self.data_dir / f"{table_id}.meta.json").write_text(json.dumps(meta), "utf-8")
        persist_index(index, str(self.data_dir / f"{table_id}.idx"))

    def _reload(self) -> None:
        assert self.data_dir is not None
        for meta_path in sorted(self.data_dir.glob("*.meta.json")):
            table_id = meta_path.name.removesuffix(".meta.json")
            csv_path = self.data_dir / f"{table_id}.csv"
            idx_path = self.data_dir / f"{table_id}.idx"
            if not csv_path.exists():
                continue
            meta = json.loads(meta_path.read_text("utf-8"))
            table = load_table(
                csv_path.read_bytes(), name=meta["name"], delimiter=meta.get("delimiter", ",")
            )
            if idx_path.exists():
                index = load_index(str(idx_path))
            else:
                index = _build_index(table, "builtin", self.llm_config)
            with self._lock:
                self._entries[table_id] = RegisteredTable(
                    table=table, index=index, built_at=time.time()
                )


# --- HTTP layer -----------------------------------------------------------------


class AskRequest(BaseModel):
    question: str
    execute: bool = False
    mode: str = Field(default=MODE_WITH)
    provider: str | None = None


class RebuildRequest(BaseModel):
    synonym_provider: str = "builtin"


def _schema_payload(entry: RegisteredTable) -> dict:
    return {
        "name": entry.table.name,
        "row_count": entry.table.row_count,
        "columns": [
            {
                "name": p.name,
                "normalized_name": p.normalized_name,
                "dtype": p.dtype.value,
                "distinct_count": p.distinct_count,
                "null_count": p.null_count,
                "is_categorical": p.is_categorical,
            }
            for p in entry.index.attribute_profiles
        ],
    }


def create_app(
    registry: TableRegistry | None = None,
    llm_config: LlmConfig | None = None,
    default_provider: ProviderSpec = "mock",
    static_dir: str | Path | None = None,
) -> FastAPI:
    llm_config = llm_config or LlmConfig()
    registry = registry or TableRegistry(llm_config=llm_config)
    app = FastAPI(title="rtq", docs_url=None, redoc_url=None)
    app.state.registry = registry
    app.state.llm_config = llm_config
    app.state.default_provider = default_provider

    @app.exception_handler(UnknownTable)
    async def _unknown_table(_req: Request, exc: UnknownTable):
        return JSONResponse({"error": str(exc)}, status_code=404)

    @app.exception_handler(RtqError)
    async def _domain_error(_req: Request, exc: RtqError):
        return JSONResponse(
            {"error": str(exc), "kind": type(exc).__name__}, status_code=400
        )

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "tables": len(registry.ids())}

    @app.post("/v1/tables")
    async def upload_table(request: Request, name: str = Query("table")):
        body = await request.body()
        if not body:
            raise EmptyTable("request body is empty")
        try:
            table_id, entry = registry.register(name, body)
        except (MalformedCsv, EmptyTable):
            raise
        return {"table_id": table_id, "schema": _schema_payload(entry)}

    @app.get("/v1/tables")
    async def list_tables():
        out = []
        for table_id in registry.ids():
            entry = registry.get(table_id)
            out.append(
                {
                    "table_id": table_id,
                    "name": entry.table.name,
                    "row_count": entry.table.row_count,
                }
            )
        return {"tables": out}

    @app.get("/v1/tables/{table_id}/schema")
    async def table_schema(table_id: str):
        return _schema_payload(registry.get(table_id))

    @app.get("/v1/tables/{table_id}/autocomplete")
    async def autocomplete(
        table_id: str,
        q: str = Query(""),
        cursor: int | None = Query(None),
        k: int = Query(10, ge=1, le=50),
    ):
        entry = registry.get(table_id)
        at = len(q) if cursor is None else max(0, min(cursor, len(q)))
        suggestions = suggest(entry.index, q, at, k)
        return {
            "suggestions": [
                {
                    "display_text": s.display_text,
                    "kind": s.kind,
                    "attribute_name": s.attribute_name,
                    "score": round(s.score, 6),
                    "replace_span": list(s.replace_span),
                }
                for s in suggestions
            ]
        }

    @app.post("/v1/tables/{table_id}/ask")
    async def ask(table_id: str, body: AskRequest):
        entry = registry.get(table_id)
        if body.mode not in (MODE_WITH, MODE_WITHOUT):
            return JSONResponse(
                {"error": f"mode must be {MODE_WITH} or {MODE_WITHOUT}"}, status_code=400
            )
        provider: ProviderSpec = body.provider or app.state.default_provider
        response = ask_pipeline(
            entry.table,
            entry.index,
            body.question,
            execute_query=body.execute,
            mode=body.mode,
            provider=provider,
            config=llm_config,
        )
        return response.to_json_dict()

    @app.post("/v1/tables/{table_id}/index/rebuild")
    async def rebuild(table_id: str, body: RebuildRequest):
        entry = registry.rebuild(table_id, body.synonym_provider)
        return {"status": "rebuilt", "table_id": table_id, "schema": _schema_payload(entry)}

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app


def default_static_dir() -> Path | None:
    """The built browser console, when present in a source checkout."""
    candidate = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    return candidate if candidate.is_dir() else None
