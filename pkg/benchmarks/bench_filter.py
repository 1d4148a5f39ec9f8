"""Benchmark the GARCH filter recursion: numba kernel vs numpy fallback.

The filter is the hot inner loop of the likelihood, evaluated hundreds of
times per fit, so the compiled/interpreted gap here drives total fit time.

Run both sides in separate processes (the kernel backend is chosen at
import time from CHAINVOL_DISABLE_NUMBA):

    python3 benchmarks/bench_filter.py                # compiled, if numba installed
    CHAINVOL_DISABLE_NUMBA=1 python3 benchmarks/bench_filter.py

Or let the script orchestrate both and print a comparison table:

    python3 benchmarks/bench_filter.py --compare
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def run_benchmark(sizes, repeats):
    from chainvol import _kernels
    from chainvol.garchx import ArmaGarchXParams, ModelSpec, neg_log_likelihood, simulate

    spec = ModelSpec(1, 1, 0, "normal")
    params = ArmaGarchXParams(
        mu=0.0, phi=[0.2], theta=[0.1], alpha0=0.05, alpha1=0.10, beta=0.85
    )
    results = []
    for n in sizes:
        y, _, _ = simulate(params, spec, None, n, seed=0)
        xvar = np.zeros(n)
        args = (y, xvar, 0.0, np.array([0.2]), np.array([0.1]), 0.05, 0.10, 0.85,
                float(np.var(y)), 1e-12)
        _kernels.filter_recursion(*args)  # warm-up (includes jit compile)
        t0 = time.perf_counter()
        for _ in range(repeats):
            _kernels.filter_recursion(*args)
        filter_us = (time.perf_counter() - t0) / repeats * 1e6

        t0 = time.perf_counter()
        for _ in range(max(1, repeats // 5)):
            neg_log_likelihood(y, None, params, spec)
        nll_ms = (time.perf_counter() - t0) / max(1, repeats // 5) * 1e3
        results.append({"n": n, "filter_us": filter_us, "nll_ms": nll_ms})
    return {"numba": _kernels.NUMBA_ENABLED, "results": results}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[1000, 10_000, 100_000])
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--compare", action="store_true",
                        help="run compiled and fallback in subprocesses and compare")
    parser.add_argument("--json", action="store_true", help="emit machine-readable output")
    args = parser.parse_args(argv)

    if args.compare:
        rows = {}
        for label, disable in (("numba", "0"), ("fallback", "1")):
            env = dict(os.environ, CHAINVOL_DISABLE_NUMBA=disable)
            cmd = [sys.executable, __file__, "--json",
                   "--sizes", *map(str, args.sizes), "--repeats", str(args.repeats)]
            out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
            rows[label] = json.loads(out.stdout)
        if not rows["numba"]["numba"]:
            print("note: numba unavailable; both columns use the numpy fallback")
        print(f"{'n':>8} {'numba filter (us)':>18} {'fallback filter (us)':>21} {'speedup':>8}")
        for a, b in zip(rows["numba"]["results"], rows["fallback"]["results"]):
            speedup = b["filter_us"] / a["filter_us"]
            print(f"{a['n']:>8} {a['filter_us']:>18.1f} {b['filter_us']:>21.1f} {speedup:>7.1f}x")
        return 0

    report = run_benchmark(args.sizes, args.repeats)
    if args.json:
        print(json.dumps(report))
    else:
        backend = "numba" if report["numba"] else "numpy fallback"
        print(f"backend: {backend}")
        for r in report["results"]:
            print(f"n={r['n']:>7}  filter {r['filter_us']:>10.1f} us   nll {r['nll_ms']:>8.3f} ms")
    return 0


if __name__ == "__main__":
    sys.exit(main())
