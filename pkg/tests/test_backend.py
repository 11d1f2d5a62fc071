from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from floqsym import _backend
from floqsym.models import get_model, make_field
from floqsym.ode import VectorField, integrate, integrate_variational
from floqsym.pipeline import SolverConfig, analyze

needs_compiled = pytest.mark.skipif(not _backend.compiled_available(),
                                    reason="compiled extension not built")


@needs_compiled
@pytest.mark.parametrize("name", ["pnf", "vdp", "tcr", "fet", "counterexample"])
def test_backends_agree(name):
    fld = make_field(name)
    x0 = get_model(name).start()
    a = integrate_variational(fld, x0, (0.0, 7.0), backend="compiled")
    b = integrate_variational(fld, x0, (0.0, 7.0), backend="python")
    assert np.allclose(a[0].final, b[0].final, rtol=1e-12, atol=1e-14)
    assert np.allclose(a[1], b[1], rtol=1e-12, atol=1e-14)
    assert a[0].times.size == b[0].times.size


@needs_compiled
def test_backends_agree_on_measures():
    spec = get_model("tcr")
    c = analyze(spec.field(), spec.start(), SolverConfig(backend="compiled"))
    p = analyze(spec.field(), spec.start(), SolverConfig(backend="python"))
    assert abs(c.measures.lambda_ - p.measures.lambda_) <= 1e-9
    assert abs(c.measures.upsilon - p.measures.upsilon) <= 1e-9


def test_user_field_runs_in_python():
    fld = VectorField(1, lambda x: -x, name="decay")
    assert _backend.resolve(None, False) == "python"
    assert abs(integrate(fld, [1.0], (0.0, 1.0)).final[0] - np.exp(-1.0)) <= 1e-9


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.resolve("gpu", True)


def test_pure_environment_switch():
    env = dict(os.environ, FLOQSYM_PURE="1")
    code = "from floqsym import _backend; print(_backend.default_backend())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.strip()
    assert out == "python"
