from __future__ import annotations

import numpy as np
import pytest

from floqsym import pipeline
from floqsym.models import MODELS, get_model

BUNDLED = tuple(MODELS)

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def analyses():
    """Default-parameter analysis of every bundled model, computed once."""
    out = {}
    for name in BUNDLED:
        spec = get_model(name)
        out[name] = (spec.field(), pipeline.analyze(spec.field(), spec.start()))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(
            f"acceptance criterion {k}: {'PASS' if ok else 'FAIL'}: {detail}")
