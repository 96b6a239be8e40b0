"""Numba vs numpy kernel timings, plus an end-to-end run under each backend.

    python3 benchmarks/bench_kernels.py [--N 100] [--repeat 5]

Kernel timings exclude the first (compiling) call.  The end-to-end runs are
launched in subprocesses with FBSPEC_DISABLE_NUMBA set or cleared, since the
backend is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from fbspec import kernels
from fbspec._accel import HAVE_NUMBA
from fbspec.polybasis import TrialBasis, gauss_rule


def best_of(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(N):
    x = np.linspace(-1, 1, 16 * (N + 2))
    i = np.arange(1, N + 2)
    x0 = np.cos(np.pi * (i - 0.25) / (N + 1.5))
    nodes = gauss_rule(N + 1).nodes
    B0, B1, B2 = TrialBasis(N).matrices(nodes)
    adv = np.linspace(-0.01, 0.01, N + 1)
    F = np.random.default_rng(0).standard_normal((N + 2, 16))
    W = np.abs(F) * 1e-3
    return {
        "legendre_table": lambda impl: impl(N + 2, x),
        "gauss_newton": lambda impl: impl(N + 1, x0, 1e-14, 100),
        "assemble_operator": lambda impl: impl(B0, B1, B2, nodes, adv, 0.01),
        "panel_cumsum": lambda impl: impl(F, W),
    }


def end_to_end(N, M, disable):
    env = {**os.environ, "FBSPEC_DISABLE_NUMBA": "1" if disable else ""}
    code = (
        "import time; from fbspec import harness; p = harness.make_problem('example2'); "
        f"p.solve({N}, 4); t = time.perf_counter(); p.solve({N}, {M}); print(time.perf_counter() - t)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--M", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba not importable; nothing to compare")
        return 1

    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, call in kernel_cases(args.N).items():
        t_np = best_of(lambda: call(getattr(kernels, f"{name}_numpy")), args.repeat)
        t_nb = best_of(lambda: call(getattr(kernels, f"{name}_numba")), args.repeat)
        print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")

    t_np = end_to_end(args.N, args.M, disable=True)
    t_nb = end_to_end(args.N, args.M, disable=False)
    print(f"\nexample2 run N={args.N} M={args.M}: numpy {t_np:.3f} s, numba {t_nb:.3f} s, speedup {t_np / t_nb:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
