"""Compare the numba and numpy kernel backends on the two hot paths.

* ``surface``: per-cell pump optimization over a (jitter, loss) grid
* ``mc``: sin^2 moments of 1e6 jitter samples
* ``scan``: one dense brute-force scan of the observed level

Usage::

    python3 benchmarks/bench_kernels.py [--grid 101] [--samples 1000000] [--repeat 5]

Numba timings exclude the first (compiling) call.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sqzbudget import reference_config
from sqzbudget._accel import get_backend
from sqzbudget.opomodel import kernel_args
from sqzbudget.optimize import COARSE_POINTS, X_MAX, X_TOL


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=101, help="cells per surface axis")
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--scan", type=int, default=100_001, help="points in the brute-force scan")
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()

    cfg = reference_config()
    args = kernel_args(cfg.opo_params(), cfg.detection_chain())
    for k in ("theta", "loss0", "loss1"):
        args.pop(k)
    th, ll = np.meshgrid(np.radians(np.linspace(0.0, 5.0, opts.grid)), np.linspace(0.0, 0.01, opts.grid),
                         indexing="ij")
    theta, loss0, loss1 = th.ravel(), ll.ravel(), np.zeros(th.size)
    jitter = np.random.Generator(np.random.Philox(key=0)).standard_normal(opts.samples) * np.radians(1.5)
    xs = np.linspace(0.0, X_MAX, opts.scan)

    backends = {}
    for name in ("numpy", "numba"):
        try:
            backends[name] = get_backend(name)
        except RuntimeError:
            print(f"{name}: not available")

    results = {}
    for name, k in backends.items():
        jobs = {
            "surface": lambda k=k: k.optimize_cells(theta, loss0, loss1, n_coarse=COARSE_POINTS, x_max=X_MAX,
                                                    tol=X_TOL, **args),
            "mc": lambda k=k: k.sin2_moments(jitter),
            "scan": lambda k=k: k.observed_squeezed(xs, 0.026, 0.00249, 0.00222, **args),
        }
        for job, fn in jobs.items():
            fn()  # warm-up, and JIT compile for numba
            results[(name, job)] = best_of(fn, opts.repeat)

    print(f"{'job':<10s}{'numpy [ms]':>12s}{'numba [ms]':>12s}{'speedup':>10s}")
    for job, label in (("surface", f"{opts.grid}x{opts.grid}"), ("mc", f"{opts.samples}"),
                       ("scan", f"{opts.scan}")):
        t_np = results.get(("numpy", job))
        t_nb = results.get(("numba", job))
        speed = f"{t_np / t_nb:9.1f}x" if t_np and t_nb else "      n/a"
        fmt = lambda t: f"{1e3 * t:12.2f}" if t else f"{'n/a':>12s}"
        print(f"{job:<10s}{fmt(t_np)}{fmt(t_nb)}{speed}   ({label})")


if __name__ == "__main__":
    main()
