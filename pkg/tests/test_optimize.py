from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floqsym.optimize import nelder_mead


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_quadratic():
    res = nelder_mead(lambda x: float(np.sum((x - [1.5, -0.5, 2.0]) ** 2)), [1.0, 1.0, 1.0],
                      budget=2000, xtol=1e-8)
    assert res.converged
    assert np.allclose(res.x, [1.5, -0.5, 2.0], atol=1e-6)


def test_rosenbrock():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], budget=5000, xtol=1e-10)
    assert res.converged
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-6)


def test_one_dimensional():
    res = nelder_mead(lambda x: (x[0] - 3.0) ** 2, 1.0, budget=500)
    assert res.converged and abs(res.x[0] - 3.0) <= 1e-3


def test_budget_below_first_simplex():
    calls = []
    with pytest.raises(ValueError):
        nelder_mead(lambda x: calls.append(x) or 0.0, [1.0, 2.0], budget=2)
    assert calls == []


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 60), st.lists(st.floats(-3, 3), min_size=2, max_size=4))
def test_budget_never_exceeded(budget, x0):
    if budget < len(x0) + 1:
        return
    calls = [0]

    def f(x):
        calls[0] += 1
        return rosenbrock(x[:2]) + float(np.sum(x[2:] ** 2))

    res = nelder_mead(f, x0, budget=budget, xtol=1e-14)
    assert calls[0] == res.nfev <= budget


def test_history_is_monotone():
    seen = []
    res = nelder_mead(rosenbrock, [-1.2, 1.0], budget=300, callback=seen.append)
    best = [h["best_f"] for h in res.history]
    assert np.all(np.diff(best) <= 0)
    assert seen == res.history
    assert res.fun == best[-1]


def test_infeasible_points():
    # an infeasible half-plane is treated as +inf, never as a minimum
    def f(x):
        return np.inf if x[0] < 0.5 else (x[0] - 0.5) ** 2 + x[1] ** 2 + 1.0

    res = nelder_mead(f, [2.0, 1.0], budget=1000)
    assert np.isfinite(res.fun) and res.x[0] >= 0.5
    nan_res = nelder_mead(lambda x: float("nan") if x[0] > 1.02 else x[0] ** 2, [1.0],
                          budget=100)
    assert np.isfinite(nan_res.fun)


def test_zero_start_coordinate():
    res = nelder_mead(lambda x: (x[0] - 0.1) ** 2, [0.0], budget=500)
    assert abs(res.x[0] - 0.1) <= 1e-4
