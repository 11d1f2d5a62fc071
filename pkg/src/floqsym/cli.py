"""Command-line front end.

``floqsym <command> --config <path> [--out <dir>] [--jobs <k>] [--preset <name>] [--set key=value ...]``

Exit status: 0 success, 2 configuration error, 3 solver failure, 4 I/O failure,
130 interrupted (a partial sweep table is still written).
"""
from __future__ import annotations

import argparse
import json
import os
import signal
import sys
from pathlib import Path

from . import floquet
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .measures import measure_pair, to_db
from .models import get_model
from .plots import PlotError, heatmap_svg, orbit_svg, save_svg, scatter_svg
from .pss import solve_orbit
from .sweep import SearchError, StatisticsError, SweepTable, correlate, find_symmetry, iter_sweep
from .tables import emit_csv, write_rows

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO, EXIT_INTERRUPT = 0, 2, 3, 4, 130


class _Run:
    def __init__(self, cfg: RunConfig, out: Path, jobs: int | None):
        self.cfg = cfg
        self.out = out
        self.jobs = jobs
        self.echo = cfg.echo()
        self.written: list[Path] = []

    def path(self, stem: str, ext: str) -> Path:
        prefix = self.cfg.output.prefix
        name = f"{prefix}_{stem}" if prefix else stem
        return self.out / f"{name}.{ext}"

    def csv(self, stem, header, rows, truncated=False):
        if self.cfg.output.csv:
            p = self.path(stem, "csv")
            write_rows(p, header, rows, self.echo, truncated)
            self.written.append(p)

    def svg(self, stem, text_fn):
        if self.cfg.output.svg:
            p = self.path(stem, "svg")
            save_svg(text_fn(), p)
            self.written.append(p)

    def field(self):
        return get_model(self.cfg.model).field(self.cfg.params)

    def orbit(self):
        s = self.cfg.solver
        return solve_orbit(
            self.field(), get_model(self.cfg.model).start(self.cfg.params),
            horizon=s.horizon, settle_tol=s.settle_tol, tol=s.shoot_tol, n_samples=s.n_samples,
            rtol=s.rtol, atol=s.atol, backend=s.backend,
        )

    def floquet(self, orbit):
        s = self.cfg.solver
        return floquet.analyze(self.field(), orbit, rtol=s.rtol, atol=s.atol, backend=s.backend)


def _orbit_artifacts(run: _Run, orbit) -> None:
    n = orbit.dim
    header = ["tau", *[f"x{i + 1}" for i in range(n)], *[f"dx{i + 1}" for i in range(n)]]
    run.csv("orbit", header, ([t, *s, *d] for t, s, d in
                              zip(orbit.tau, orbit.samples, orbit.tau_derivs)))
    dims = run.cfg.output.orbit_dims
    run.svg("orbit", lambda: orbit_svg(
        orbit.samples, dims, title=f"{run.cfg.model} cycle, T = {orbit.period:.6g}",
        metadata=run.echo,
    ))


def cmd_pss(run: _Run) -> str:
    orbit = run.orbit()
    _orbit_artifacts(run, orbit)
    return (f"period={orbit.period:.12g} residual={orbit.residual:.3e} "
            f"iterations={orbit.iterations}")


def _floquet_rows(dec):
    for i, (lam, mu) in enumerate(zip(dec.multipliers, dec.exponents)):
        yield [i + 1, lam.real, lam.imag, abs(lam), mu.real, mu.imag]


def cmd_floquet(run: _Run) -> str:
    orbit = run.orbit()
    dec = run.floquet(orbit)
    _orbit_artifacts(run, orbit)
    run.csv("multipliers", ["mode", "re", "im", "abs", "exponent_re", "exponent_im"],
            _floquet_rows(dec))
    n = dec.dim
    header = ["tau", *[f"u{i + 1}_{a + 1}" for i in range(n) for a in range(n)]]
    run.csv("modes", header, ([t, *R.ravel()] for t, R in zip(dec.tau, dec.realized)))
    lams = " ".join(f"{abs(v):.6g}" for v in dec.multipliers)
    return (f"period={orbit.period:.12g} |multipliers|=[{lams}] "
            f"biorthogonality={dec.biorthogonality_error():.3e}")


def cmd_measures(run: _Run) -> str:
    orbit = run.orbit()
    dec = run.floquet(orbit)
    m = measure_pair(orbit, dec, run.cfg.solver.db_floor)
    _orbit_artifacts(run, orbit)
    run.csv("measures", ["lambda", "upsilon", "lambda_db", "upsilon_db", "period"],
            [[m.lambda_, m.upsilon, m.lambda_db, m.upsilon_db, orbit.period]])
    n = m.theta_table.shape[0]
    run.csv("theta", ["mode", *[f"m{j + 1}" for j in range(n)]],
            ([i + 1, *m.theta_table[i]] for i in range(n)))
    return m.summary()


def _sweep_artifacts(run: _Run, table: SweepTable) -> str:
    cfg = run.cfg
    if cfg.output.csv:
        p = run.path("sweep", "csv")
        emit_csv(table, p, run.echo)
        run.written.append(p)
    ok = [r for r in table.rows if r.ok]
    floor = cfg.solver.db_floor
    usable = [r for r in ok if r.lambda_db > floor and r.upsilon_db > floor]
    if len(table.names) == 2 and not table.truncated:
        a, b = table.names
        for meas in ("lambda", "upsilon"):
            col = f"{meas}_db"
            run.csv(f"{meas}_contour", [a, b, col],
                    ([*r.values, getattr(r, col)] for r in table.rows))
            try:
                z = table.grid_array(col)
                run.svg(f"{meas}_contour", lambda z=z, meas=meas: heatmap_svg(
                    table.grids[0], table.grids[1], z, title=f"{meas} [dB]",
                    xlabel=a, ylabel=b, zlabel="dB", metadata=run.echo))
            except PlotError as exc:
                print(f"floqsym: skipped {meas} contour plot: {exc}", file=sys.stderr)
    run.csv("scatter", ["lambda_db", "upsilon_db"],
            ([r.lambda_db, r.upsilon_db] for r in usable))
    if usable:
        run.svg("scatter", lambda: scatter_svg(
            [r.lambda_db for r in usable], [r.upsilon_db for r in usable],
            title="symmetry vs orthogonality", xlabel="lambda [dB]", ylabel="upsilon [dB]",
            metadata=run.echo))
    summary = f"rows={len(table.rows)} ok={len(ok)}"
    try:
        summary += f" pearson_r={correlate(table, floor).r:.6f}"
    except StatisticsError:
        pass
    if ok:
        best = min(ok, key=lambda r: r.lambda_)
        summary += (f" min_lambda={best.lambda_:.6e} ({best.lambda_db:.2f} dB)"
                    f" upsilon_there={best.upsilon:.6e} ({best.upsilon_db:.2f} dB)")
    return summary


def cmd_sweep(run: _Run) -> str:
    cfg = run.cfg
    if not cfg.grids:
        raise ConfigError("sweep needs at least one grid in [sweep]")
    fixed = {k: v for k, v in cfg.params.items() if k not in cfg.grids}
    table = SweepTable(cfg.model, tuple(cfg.grids), tuple(cfg.grids.values()), fixed=fixed)
    try:
        for row in iter_sweep(cfg.model, cfg.grids, fixed=fixed, config=cfg.solver,
                              jobs=run.jobs):
            table.rows.append(row)
    except KeyboardInterrupt:
        table.truncated = True
        _sweep_artifacts(run, table)
        raise
    return _sweep_artifacts(run, table)


def cmd_search(run: _Run) -> str:
    cfg = run.cfg
    s = cfg.search
    if not s.free:
        raise ConfigError("search needs [search] free")
    fixed = {k: v for k, v in cfg.params.items() if k not in s.free}
    path = run.path("search", "jsonl")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"config": run.echo}) + "\n")

        def log(rec):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.flush()

        res = find_symmetry(cfg.model, s.free, s.initial, s.budget, fixed=fixed,
                            config=cfg.solver, xtol=s.xtol, initial_step=s.initial_step,
                            lambda_tol=s.lambda_tol, upsilon_tol=s.upsilon_tol, log=log)
        fh.write(json.dumps({"result": res.to_dict()}, sort_keys=True) + "\n")
    run.written.append(path)
    argmin = " ".join(f"{k}={v:.10g}" for k, v in res.params.items())
    ups = "nan" if res.upsilon is None else f"{res.upsilon:.6e}"
    return (f"{argmin} lambda_min={res.lambda_min:.6e} ({to_db(res.lambda_min):.2f} dB) "
            f"upsilon={ups} evaluations={res.evaluations} converged={res.converged} "
            f"false_positive={res.false_positive}")


HANDLERS = {
    "pss": cmd_pss,
    "floquet": cmd_floquet,
    "measures": cmd_measures,
    "sweep": cmd_sweep,
    "search": cmd_search,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="floqsym",
        description="Limit cycles, Floquet frames and symmetry/orthogonality measures.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output directory (default: [output] dir or .)")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes for sweeps (default: $FLOQSYM_JOBS or 1)")
    p.add_argument("--preset", help="model preset name, overrides [model] name")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry; KEY is section.key or a model parameter")
    return p


def _jobs(arg: int | None) -> int:
    if arg is not None:
        jobs = arg
    else:
        env = os.environ.get("FLOQSYM_JOBS", "").strip()
        try:
            jobs = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"FLOQSYM_JOBS must be an integer, got {env!r}") from None
    if jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return jobs


def _terminate(signum, frame):
    raise KeyboardInterrupt


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        jobs = _jobs(args.jobs)
        cfg = load_config(args.config, preset=args.preset, sets=args.sets)
    except ConfigError as exc:
        print(f"floqsym: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"floqsym: config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.output.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"floqsym: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    run = _Run(cfg, out, jobs)
    previous = signal.signal(signal.SIGTERM, _terminate)
    try:
        summary = HANDLERS[args.command](run)
    except KeyboardInterrupt:
        print("floqsym: interrupted; partial results written", file=sys.stderr)
        return EXIT_INTERRUPT
    except ConfigError as exc:
        print(f"floqsym: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"floqsym: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RuntimeError, ValueError, ArithmeticError, SearchError) as exc:
        print(f"floqsym: solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    finally:
        signal.signal(signal.SIGTERM, previous)
    print(f"{args.command} {cfg.model}: {summary}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
