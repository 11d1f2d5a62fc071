from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floqsym.models import make_field
from floqsym.ode import (
    IntegrationError,
    VectorField,
    find_crossings,
    flow_jacobian_fd,
    integrate,
    integrate_variational,
)
from floqsym.pss import solve_orbit


def decay():
    return VectorField(1, lambda x: -x, lambda x: -np.eye(1), name="decay")


def diag12():
    A = np.diag([-1.0, -2.0])
    return VectorField(2, lambda x: A @ x, lambda x: A, name="diag")


def harmonic():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return VectorField(2, lambda x: A @ x, lambda x: A, name="harmonic")


def test_exponential_decay():
    traj = integrate(decay(), [1.0], (0.0, 1.0))
    assert abs(traj.final[0] - math.exp(-1)) <= 1e-9


def test_normal_form_cycle_closes():
    fld = make_field("pnf")
    x0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    traj = integrate(fld, x0, (0.0, 2 * np.pi))
    assert np.max(np.abs(traj.final - x0)) <= 1e-8


def test_van_der_pol_attractor_band():
    fld = make_field("vdp", eps=1.0, c0=1.0)
    end = integrate(fld, [2.0, 0.0], (0.0, 100.0)).final
    ref = integrate(fld, [2.0, 0.0], (0.0, 100.0), rtol=1e-12, atol=1e-14).final
    assert np.max(np.abs(end - ref)) <= 1e-3
    assert abs(end[0]) <= 2.1 + 1e-3


def test_variational_constant_coefficients():
    _, Phi = integrate_variational(diag12(), [1.0, 1.0], (0.0, 1.0))
    assert np.max(np.abs(Phi - np.diag([math.exp(-1), math.exp(-2)]))) <= 1e-9


def test_variational_empty_span_is_identity():
    fld = make_field("tcr")
    _, Phi = integrate_variational(fld, [0.1, 0.2, 0.3], (0.0, 0.0))
    assert np.array_equal(Phi, np.eye(3))


def test_variational_normal_form_closed_form():
    fld = make_field("pnf")
    th = 0.7
    x0 = np.array([math.cos(th), math.sin(th), 0.0, 0.0, 0.0])
    _, M = integrate_variational(fld, x0, (0.0, 2 * np.pi))
    t = np.array([-math.sin(th), math.cos(th)])
    r = np.array([math.cos(th), math.sin(th)])
    ref = np.zeros((5, 5))
    ref[:2, :2] = np.outer(t, t) + math.exp(-np.pi) * np.outer(r, r)
    ref[2, 2] = math.exp(-0.4 * np.pi)
    c, s = math.cos(0.6 * np.pi), math.sin(0.6 * np.pi)
    ref[3:, 3:] = math.exp(-0.2 * np.pi) * np.array([[c, s], [-s, c]])
    assert np.max(np.abs(M - ref)) <= 1e-6


def test_fd_jacobian_scalar():
    F = flow_jacobian_fd(decay(), [1.0], 1.0, h=1e-4)
    assert abs(F[0, 0] - math.exp(-1)) <= 1e-7


def test_fd_matches_variational_normal_form():
    fld = make_field("pnf")
    x0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    _, M = integrate_variational(fld, x0, (0.0, 2 * np.pi))
    F = flow_jacobian_fd(fld, x0, 2 * np.pi, h=1e-5)
    assert np.linalg.norm(M - F) / np.linalg.norm(M) <= 1e-4


def test_fd_phase_multiplier_van_der_pol():
    fld = make_field("vdp", eps=0.5)
    orbit = solve_orbit(fld, [2.0, 0.0])
    F = flow_jacobian_fd(fld, orbit.anchor, orbit.period, h=1e-5)
    assert np.min(np.abs(np.linalg.eigvals(F) - 1.0)) <= 1e-3


def test_trajectory_invariants():
    traj = integrate(make_field("vdp", eps=1.0), [2.0, 0.0], (0.0, 20.0))
    assert np.all(np.diff(traj.times) > 0)
    assert np.all(np.isfinite(traj.states))
    assert np.array_equal(traj(traj.times), traj.states)


def test_dense_output_outside_span():
    traj = integrate(decay(), [1.0], (0.0, 1.0))
    with pytest.raises(ValueError):
        traj(1.5)


def test_blow_up_reports_last_state():
    fld = VectorField(1, lambda x: x * x, name="blowup")
    with pytest.raises(IntegrationError) as info:
        integrate(fld, [1.0], (0.0, 2.0))
    err = info.value
    assert 0.9 < err.t <= 1.0
    assert np.all(np.isfinite(err.state))


@pytest.mark.parametrize("bad", [dict(rtol=0.0), dict(atol=-1.0)])
def test_bad_tolerances(bad):
    with pytest.raises(ValueError):
        integrate(decay(), [1.0], (0.0, 1.0), **bad)


def test_nonfinite_start():
    with pytest.raises(ValueError):
        integrate(decay(), [np.nan], (0.0, 1.0))


def test_crossings_of_harmonic_oscillator():
    traj = integrate(harmonic(), [0.0, 1.0], (0.0, 3 * np.pi))
    # x1 = sin t crosses upward at 2 pi only (the start sits on the plane)
    hits = find_crossings(traj, [0.0, 0.0], [1.0, 0.0], direction=1)
    times = [t for t, _ in hits]
    assert len(times) == 1
    assert abs(times[0] - 2 * np.pi) <= 1e-9
    down = find_crossings(traj, [0.0, 0.0], [1.0, 0.0], direction=-1)
    assert abs(down[0][0] - np.pi) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 9.95))
def test_dense_output_consistency(tau):
    fld = make_field("vdp", eps=1.0)
    traj = integrate(fld, [2.0, 0.0], (0.0, 10.0))
    direct = integrate(fld, [2.0, 0.0], (0.0, tau)).final
    tol = 1e-10 * max(1.0, float(np.max(np.abs(direct))))
    assert np.max(np.abs(traj(tau) - direct)) <= 10 * tol


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(0.5, 5.0))
def test_time_reversal(a, b, span):
    fld = make_field("vdp", eps=0.3)
    x0 = np.array([1.0 + a, b])
    fwd = integrate(fld, x0, (0.0, span)).final
    back = integrate(fld, fwd, (span, 0.0)).final
    assert np.max(np.abs(back - x0)) <= 100 * 1e-10 * max(1.0, float(np.max(np.abs(x0))))


@pytest.mark.parametrize("name", ["pnf", "vdp", "tcr", "fet", "counterexample"])
def test_variational_vs_finite_difference_on_cycle(name, analyses):
    fld, res = analyses[name]
    orbit = res.orbit
    _, M = integrate_variational(fld, orbit.anchor, (0.0, orbit.period))
    F = flow_jacobian_fd(fld, orbit.anchor, orbit.period, h=1e-5)
    assert np.linalg.norm(M - F) / np.linalg.norm(M) <= 1e-4
