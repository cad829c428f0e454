import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"

# criterion number -> (passed, detail); filled by test_acceptance, printed at session end
CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def criteria():
    return CRITERIA


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
