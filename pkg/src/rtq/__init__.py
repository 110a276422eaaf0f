"""rtq: ask questions about a CSV table in plain English.

A vocabulary index over the table's attribute names, synonyms, and
categorical values powers typeahead autocomplete and question-specific
schema pruning for SQL generation; generated queries run against an
in-memory engine.
"""

from .autocomplete import Suggestion, suggest
from .engine import ResultTable, execute, parse_sql, print_query, validate
from .errors import RtqError
from .index import (
    VocabIndex,
    create_index,
    build_inverse_index,
    extract_unique_values,
    filter_categorical_attributes,
    load_index,
    lookup,
    persist_index,
)
from .llm import GeneratedQuery, LlmConfig, MockLlm, generate_db_query
from .pipeline import MODE_WITH, MODE_WITHOUT, AskResponse, ask_pipeline
from .schema import (
    DynamicSchema,
    UserQuery,
    build_dynamic_schema,
    extract_keywords,
    formulate_prompt,
    render_schema_block,
)
from .synonyms import BuiltinSynonymProvider, generate_synonyms
from .table import DataType, Table, get_attribute_names_and_types, load_table

__version__ = "0.1.0"

__all__ = [
    "AskResponse",
    "BuiltinSynonymProvider",
    "DataType",
    "DynamicSchema",
    "GeneratedQuery",
    "LlmConfig",
    "MockLlm",
    "MODE_WITH",
    "MODE_WITHOUT",
    "ResultTable",
    "RtqError",
    "Suggestion",
    "Table",
    "UserQuery",
    "VocabIndex",
    "ask_pipeline",
    "build_dynamic_schema",
    "build_inverse_index",
    "create_index",
    "execute",
    "extract_keywords",
    "extract_unique_values",
    "filter_categorical_attributes",
    "formulate_prompt",
    "generate_db_query",
    "generate_synonyms",
    "get_attribute_names_and_types",
    "load_index",
    "load_table",
    "lookup",
    "parse_sql",
    "persist_index",
    "print_query",
    "render_schema_block",
    "suggest",
    "validate",
]
