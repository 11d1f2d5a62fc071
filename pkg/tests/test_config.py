from __future__ import annotations

import pytest

from floqsym.config import ConfigError, load_config, parse_config, parse_grid

BASE = """
[model]
name = tcr
p = 0.06

[solver]
rtol = 1e-9
samples = 256

[sweep]
alpha = linspace(0.1, 2.0, 11)
beta = 0.5, 1.0

[output]
prefix = t
"""


def test_parse_grid_forms():
    g = parse_grid("linspace(0.1, 2.0, 11)")
    assert len(g) == 11 and g[0] == 0.1 and g[-1] == 2.0
    assert parse_grid("logspace(-3, 0, 4)") == pytest.approx((1e-3, 1e-2, 1e-1, 1.0))
    assert parse_grid("1, 2.5,3") == (1.0, 2.5, 3.0)
    for bad in ("", "linspace(0, 1)", "linspace(0, 1, 2.5)", "linspace(0, 1, 0)", "1, x"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_full_config():
    cfg = parse_config(BASE)
    assert cfg.model == "tcr" and cfg.params["p"] == 0.06
    assert cfg.solver.rtol == 1e-9 and cfg.solver.n_samples == 256
    assert list(cfg.grids) == ["alpha", "beta"] and cfg.grids["beta"] == (0.5, 1.0)
    assert cfg.output.prefix == "t"


@pytest.mark.parametrize("text", [
    "[model]\nname = duffing\n",
    "[model]\nname = tcr\ngamma = 1\n",
    "[model]\nname = tcr\n[plot]\nx = 1\n",
    "[model]\nname = tcr\n[solver]\nspeed = 3\n",
    "[model]\nname = tcr\n[solver]\nrtol = -1\n",
    "[model]\nname = tcr\n[solver]\nbackend = gpu\n",
    "[model]\nname = tcr\n[sweep]\ngamma = 1, 2\n",
    "[model]\nname = tcr\n[output]\ncolour = red\n",
    "[model]\nname = tcr\n[output]\norbit_dims = 0, 7\n",
    "[model]\nname = tcr\n[output]\ncsv = maybe\n",
    "[model]\nname = vdp\n[search]\nfree = gamma\n",
    "[model]\nname = vdp\n[search]\nfree = c0\ninitial = 1, 2\n",
    "[model]\nname = vdp\n[search]\nstep = 3\n",
    "[model]\nname = vdp\nc0 = -1\n",
    "[solver]\nrtol = 1e-9\n",
    "not an ini file",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_set_and_preset():
    cfg = parse_config(BASE, sets=["p=0.07", "solver.samples=128", "output.prefix=u"])
    assert cfg.params["p"] == 0.07 and cfg.solver.n_samples == 128
    assert cfg.output.prefix == "u"
    cfg = parse_config("[output]\nprefix = x\n", preset="vdp", sets=["c0=2"])
    assert cfg.model == "vdp" and cfg.params["c0"] == 2.0
    with pytest.raises(ConfigError):
        parse_config(BASE, sets=["novalue"])


def test_fet_topology_words():
    assert parse_config("[model]\nname = fet\ntopology = series\n").params["topology"] == 2
    assert parse_config("[model]\nname = fet\ntopology = parallel\n").params["topology"] == 1
    with pytest.raises(ConfigError):
        parse_config("[model]\nname = fet\ntopology = diagonal\n")


def test_out_of_range_grid_is_accepted():
    cfg = parse_config("[model]\nname = tcr\n[sweep]\nalpha = 0.01, 5\n")
    assert cfg.grids["alpha"] == (0.01, 5.0)


def test_search_defaults_initial_from_model():
    cfg = parse_config("[model]\nname = vdp\nc0 = 1.7\n[search]\nfree = c0\nbudget = 50\n")
    assert cfg.search.free == ("c0",) and cfg.search.initial == (1.7,)
    assert cfg.search.budget == 50


def test_echo_round_trip():
    cfg = parse_config(BASE + "\n[search]\nfree = alpha\ninitial = 0.7\n")
    again = parse_config(cfg.echo())
    assert again == cfg
    assert again.echo() == cfg.echo()


def test_load_config(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(BASE)
    assert load_config(str(p)).model == "tcr"
    with pytest.raises(OSError):
        load_config(str(tmp_path / "missing.ini"))
