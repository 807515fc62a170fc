import json
from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parent.parent / "src" / "absmath" / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def template_dir() -> Path:
    return DATA / "templates"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return DATA / "fixtures"


@pytest.fixture(scope="session")
def cases() -> dict:
    """The four end-to-end case fixtures, keyed by id."""
    out = {}
    for path in sorted((DATA / "cases").glob("*.json")):
        record = json.loads(path.read_text(encoding="utf-8"))
        out[record["id"]] = record
    return out
