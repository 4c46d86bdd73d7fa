from pathlib import Path

import pytest

from foodlink.knowledge import Ontology

DATA_DIR = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def fixture_ontology() -> Ontology:
    return Ontology.from_jsonl(DATA_DIR / "fixture_ontology.jsonl")
