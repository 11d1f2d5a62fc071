"""Time the compiled and pure-Python integration backends on the bundled models.

Usage: python3 benchmarks/bench_integrate.py [--repeat N] [--span T]
"""
from __future__ import annotations

import argparse
import statistics
import time

from floqsym import _backend
from floqsym.models import MODELS, get_model
from floqsym.ode import integrate_variational
from floqsym.pipeline import SolverConfig, analyze


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--span", type=float, default=20.0, help="integration time per run")
    args = ap.parse_args()
    if not _backend.compiled_available():
        raise SystemExit("compiled extension not built; nothing to compare")

    print(f"{'model':<16}{'task':<14}{'compiled [s]':>14}{'python [s]':>14}{'speed-up':>10}")
    ratios = []
    for name in MODELS:
        spec = get_model(name)
        fld, x0 = spec.field(), spec.start()
        tasks = {
            "variational": lambda b: integrate_variational(fld, x0, (0.0, args.span), backend=b),
            "analyze": lambda b: analyze(fld, x0, SolverConfig(backend=b)),
        }
        for task, fn in tasks.items():
            tc = best_of(lambda: fn("compiled"), args.repeat)
            tp = best_of(lambda: fn("python"), args.repeat)
            ratios.append(tp / tc)
            print(f"{name:<16}{task:<14}{tc:>14.4f}{tp:>14.4f}{tp / tc:>9.1f}x")
    print(f"median speed-up {statistics.median(ratios):.1f}x")


if __name__ == "__main__":
    main()
