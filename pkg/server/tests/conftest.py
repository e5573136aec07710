import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from victimserve import create_app, mock_model

PROTOCOL = Path(__file__).resolve().parents[2] / "protocol"


@pytest.fixture(scope="session")
def golden_dir():
    return PROTOCOL / "golden"


@pytest.fixture(scope="session")
def rule_doc():
    return json.loads((PROTOCOL / "mock_rule.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def client():
    return TestClient(create_app(mock_model()))
