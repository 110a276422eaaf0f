from __future__ import annotations

from pathlib import Path

import pytest

from rtq.index import create_index
from rtq.synonyms import BuiltinSynonymProvider, generate_synonyms
from rtq.table import load_table

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def build_index_for(table):
    names = [c.normalized_name for c in table.columns]
    return create_index(table, generate_synonyms(names, BuiltinSynonymProvider()))


@pytest.fixture(scope="session")
def b2b_table():
    return load_table(FIXTURES / "b2b_sales.csv", name="b2b_sales")


@pytest.fixture(scope="session")
def b2b_index(b2b_table):
    return build_index_for(b2b_table)


@pytest.fixture(scope="session")
def gems_table():
    return load_table(FIXTURES / "gems.csv", name="gems")


@pytest.fixture(scope="session")
def gems_index(gems_table):
    return build_index_for(gems_table)


@pytest.fixture(scope="session")
def questions_path():
    return FIXTURES / "b2b_questions.jsonl"
