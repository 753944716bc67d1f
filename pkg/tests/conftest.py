import json
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def pinned_offset() -> dict:
    return json.loads((FIXTURES / "dpp_offset.json").read_text())
