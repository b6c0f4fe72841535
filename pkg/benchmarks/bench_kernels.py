"""Timing comparison of the jitted kernels against the numpy fallback.

Runs the same workloads in two subprocesses, one with numba enabled and
one with FINSLERFLOW_DISABLE_NUMBA=1, and prints a side-by-side table.

    python3 benchmarks/bench_kernels.py

Each workload is timed after a warmup call so jit compilation time is
not counted.  Pass --repeat to change the number of timed repetitions.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def run_workloads(repeat: int) -> dict:
    import numpy as np

    from finslerflow import _kernels, flow, singular
    from finslerflow import metric as mt
    from finslerflow.flow import IntegratorConfig, PTMPoint

    _kernels.warmup()
    m = mt.metric_from_strings(3, ["0.7*y^2 - x", "0", "1", "0"])
    results = {"backend": "numba" if _kernels.NUMBA_ENABLED else "numpy"}

    def timed(name, fn):
        fn()
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        results[name] = best

    xs = np.linspace(-1.5, 1.5, 600)
    grid_fn = singular.disc_grid_fn(m)
    X, Y = np.meshgrid(xs, xs)
    timed("grid scan 600x600 discriminant", lambda: grid_fn(X, Y))

    table = m.table("denom")
    pts = np.random.default_rng(7).uniform(-1.0, 1.0, (20000, 3))

    def point_loop():
        acc = 0.0
        for x, y, p in pts:
            acc += table.poly_value(x, y, p)
        return acc

    timed("20k pointwise denominator calls", point_loop)

    cfg = IntegratorConfig(box=(-1.2, 1.2, -1.2, 1.2))

    def geodesics():
        for p0 in (0.4, 0.8, 1.2):
            flow.integrate(m, PTMPoint(0.3, 0.2, p0), cfg)

    timed("integrate 3 geodesics", geodesics)
    return results


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    if args.child:
        print(json.dumps(run_workloads(args.repeat)))
        return 0

    runs = {}
    for disable in ("0", "1"):
        env = dict(os.environ, FINSLERFLOW_DISABLE_NUMBA=disable)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--child", "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        rec = json.loads(out.stdout.strip().splitlines()[-1])
        runs[rec.pop("backend")] = rec

    if "numba" not in runs:
        print("numba backend unavailable; fallback timings only")
        for name, dt in runs["numpy"].items():
            print(f"  {name:<36} {dt * 1e3:9.2f} ms")
        return 0

    print(f"{'workload':<36} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, dt in runs["numba"].items():
        ref = runs["numpy"][name]
        print(
            f"{name:<36} {dt * 1e3:8.2f}ms {ref * 1e3:8.2f}ms "
            f"{ref / dt:7.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
