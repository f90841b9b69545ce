"""Benchmark the jitted kernels against the pure-numpy fallback.

The fallback is selected by the EXTRAGRAD_DISABLE_NUMBA environment variable,
which must be set before the package is imported, so this script re-executes
itself in a subprocess for the second measurement.

Usage: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np


def measure():
    import extragrad as eg

    results = {"using_numba": eg.USING_NUMBA}

    # box-simplex certified solve, the hottest loop in the package
    inst = eg.preprocess(eg.gen_box_simplex(50, 40, 0.5, seed=0))
    eg.solve_box_simplex(inst, 1e-300, max_iters=5, certify=True)  # warm up / compile
    start = time.perf_counter()
    _, _, gap, trace = eg.solve_box_simplex(inst, 1e-300, max_iters=1000, certify=True)
    results["box_simplex_1000_iters_s"] = time.perf_counter() - start
    results["box_simplex_gap"] = gap

    # accelerated phases on a diagonal quadratic
    prob = eg.gen_quadratic(200, 1.0, 1e4, diag=True, seed=1)
    eg.eg_accel(prob, np.zeros(200), 1e-4, eps0=1.0)  # warm up / compile
    start = time.perf_counter()
    x = eg.eg_accel(prob, np.zeros(200), 1e-10)
    results["eg_accel_s"] = time.perf_counter() - start
    results["eg_accel_err"] = prob.error(x)
    return results


def main():
    if os.environ.get("_BENCH_CHILD"):
        print(json.dumps(measure()))
        return
    import warnings

    warnings.simplefilter("ignore", RuntimeWarning)
    fast = measure()

    env = dict(os.environ, EXTRAGRAD_DISABLE_NUMBA="1", _BENCH_CHILD="1")
    out = subprocess.run([sys.executable, os.path.abspath(__file__)],
                         capture_output=True, text=True, env=env, check=True)
    slow = json.loads(out.stdout.strip().splitlines()[-1])

    print(f"{'kernel':<30}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for key in ("box_simplex_1000_iters_s", "eg_accel_s"):
        a, b = fast[key], slow[key]
        print(f"{key:<30}{a:>12.4f}{b:>12.4f}{b / a:>10.2f}x")
    for key in ("box_simplex_gap", "eg_accel_err"):
        rel = abs(fast[key] - slow[key]) / max(1.0, abs(slow[key]))
        print(f"{key}: numba={fast[key]:.12e} numpy={slow[key]:.12e} rel diff={rel:.2e}")


if __name__ == "__main__":
    main()
