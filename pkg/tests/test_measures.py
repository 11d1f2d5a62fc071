from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floqsym import pipeline
from floqsym.floquet import FloquetDecomposition
from floqsym.measures import (
    DB_FLOOR,
    MeasureError,
    MeasurePair,
    lambda_measure,
    measure_pair,
    theta_pair,
    to_db,
    upsilon_measure,
)
from floqsym.models import get_model, make_field
from floqsym.pss import solve_orbit

from .conftest import BUNDLED

TAU = 2 * np.pi * np.arange(512) / 512


def frame(vectors):
    """Constant real frame on a 4-node grid."""
    R = np.array([vectors] * 4, dtype=float)
    n = R.shape[1]
    return FloquetDecomposition(np.ones(n), np.zeros(n), np.zeros(4), R.astype(complex),
                                R.astype(complex), R)


def test_unit_circle_samples():
    circle = np.column_stack([np.cos(TAU), np.sin(TAU)])
    assert lambda_measure(circle) <= 1e-12


@pytest.mark.parametrize("name", ["pnf", "counterexample"])
def test_unit_circle_orbit_at_tight_tolerance(name):
    orbit = solve_orbit(make_field(name), get_model(name).start(), rtol=1e-12, atol=1e-14)
    assert lambda_measure(orbit) <= 1e-12


def test_ellipse_closed_form():
    ellipse = np.column_stack([2 * np.cos(TAU), np.sin(TAU)])
    assert lambda_measure(ellipse) == pytest.approx(3 / 8, abs=1e-14)


def test_skewed_van_der_pol():
    orbit = solve_orbit(make_field("vdp", eps=0.5, c0=4.0), [2.0, 0.0])
    assert lambda_measure(orbit) > 0.01


def test_degenerate_orbit():
    with pytest.raises(MeasureError):
        lambda_measure(np.zeros((8, 2)))


def test_theta_examples():
    assert theta_pair([1, 0], [0, 1]) == 0.0
    assert theta_pair([1, 0], [3, 0]) == pytest.approx(np.pi / 2, abs=1e-15)
    assert theta_pair([1, 0], [-2, 0]) == pytest.approx(np.pi / 2, abs=1e-15)
    c, s = math.cos(np.pi / 3), math.sin(np.pi / 3)
    assert abs(theta_pair([1, 0], [c, s]) - np.pi / 6) <= 1e-12


def test_theta_takes_worst_node():
    u = np.array([[1.0, 0.0], [1.0, 0.0]])
    v = np.array([[0.0, 1.0], [math.cos(1.2), math.sin(1.2)]])
    assert theta_pair(u, v) == pytest.approx(np.pi / 2 - 1.2, abs=1e-14)


def test_theta_zero_vector():
    with pytest.raises(MeasureError):
        theta_pair([0, 0], [1, 0])


@settings(max_examples=50)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3),
       st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_theta_range_and_symmetry(a, b):
    if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
        return
    t = theta_pair(a, b)
    assert 0.0 <= t <= np.pi / 2
    assert t == pytest.approx(theta_pair(b, a), abs=1e-14)


def test_upsilon_single_oblique_pair():
    th = 1.1
    dec = frame([[1.0, 0.0], [math.cos(th), math.sin(th)]])
    ups, table = upsilon_measure(dec)
    assert ups == pytest.approx(abs(th - np.pi / 2), abs=1e-14)
    assert table[0, 0] == table[1, 1] == 0.0
    assert table[0, 1] == table[1, 0] == ups


def test_upsilon_examples(analyses):
    assert analyses["pnf"][1].measures.upsilon <= 1e-6
    assert analyses["counterexample"][1].measures.upsilon > 0.01


@pytest.mark.parametrize("name", BUNDLED)
def test_measure_pair_invariants(name, analyses):
    m = analyses[name][1].measures
    t = m.theta_table
    assert m.lambda_ >= 0
    assert np.all((t >= 0) & (t <= np.pi / 2))
    assert np.array_equal(t, t.T)
    off = t[~np.eye(t.shape[0], dtype=bool)]
    assert m.upsilon == off.max()


def test_to_db():
    assert to_db(1.0) == 0.0
    assert to_db(0.001) == pytest.approx(-30.0, abs=1e-12)
    assert to_db(0.0) == DB_FLOOR == -200.0
    assert to_db(1e-21) == -200.0
    assert to_db(0.0, floor=-120.0) == -120.0
    with pytest.raises(MeasureError):
        to_db(-1e-3)
    with pytest.raises(MeasureError):
        to_db(float("nan"))


def test_measure_pair_views():
    m = MeasurePair(1e-3, 0.0, np.zeros((2, 2)))
    assert m.lambda_db == pytest.approx(-30.0)
    assert m.upsilon_db == -200.0
    assert "lambda=" in m.summary() and "dB" in m.summary()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_lambda_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    samples = np.column_stack([2 * np.cos(TAU), np.sin(TAU) + 0.3, 0.5 * np.cos(2 * TAU)])
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    assert abs(lambda_measure(samples @ Q.T) - lambda_measure(samples)) <= 1e-12


@settings(max_examples=30)
@given(st.floats(1e-3, 1e3))
def test_lambda_scale_invariance(c):
    samples = np.column_stack([2 * np.cos(TAU), np.sin(TAU) + 0.3])
    assert abs(lambda_measure(c * samples) - lambda_measure(samples)) <= 1e-12


@settings(max_examples=30)
@given(st.lists(st.floats(1e-3, 1e3), min_size=3, max_size=3))
def test_upsilon_mode_rescaling_invariance(scales):
    vecs = np.array([[1.0, 0.2, 0.0], [0.1, 1.0, 0.3], [0.0, 0.4, 1.0]])
    base, _ = upsilon_measure(frame(vecs))
    scaled, _ = upsilon_measure(frame(vecs * np.array(scales)[:, None]))
    assert abs(scaled - base) <= 1e-14


@pytest.mark.parametrize("name", BUNDLED)
def test_grid_refinement(name, analyses):
    fld, res = analyses[name]
    fine = pipeline.analyze(fld, get_model(name).start(), pipeline.SolverConfig(n_samples=1024))
    assert abs(fine.measures.lambda_ - res.measures.lambda_) < 1e-6
    assert abs(fine.measures.upsilon - res.measures.upsilon) < 1e-6


def test_measure_pair_from_pipeline(analyses):
    _, res = analyses["tcr"]
    m = measure_pair(res.orbit, res.floquet, floor=-150.0)
    assert m.lambda_ == res.measures.lambda_ and m.floor == -150.0
