"""Throughput comparison of the numba kernels against the numpy fallbacks.

Run:  python benchmarks/bench_backends.py
The numba variants are exercised only when numba is importable; the first
call includes JIT compilation, so each kernel is warmed before timing.
"""

import time

import numpy as np

from liewalk._kernels import (
    indexed_products_np,
    partial_products_np,
    stoch2_log_norms_np,
)
from liewalk.backend import NUMBA_ENABLED
from liewalk.lie import _expm


def timeit(fn, *args, repeats=5):
    fn(*args)  # warm-up (JIT compile / cache touch)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    atoms = []
    for _ in range(2):
        a = rng.uniform(0, 1, size=(2, 2))
        np.fill_diagonal(a, 0.0)
        a -= np.diag(a.sum(axis=1))
        atoms.append(a)
    n_traj = 100_000
    step_mats = np.array([_expm(a / n_traj) for a in atoms])

    cases = []

    chain = step_mats[rng.integers(0, 2, size=n_traj)]
    cases.append(("partial_products (n=1e5)", partial_products_np, (chain,),
                  "_partial_products_jit"))

    idx = rng.integers(0, 2, size=(100_000, 160)).astype(np.uint8)
    mc_steps = np.array([_expm(a / 160) for a in atoms])
    cases.append(("indexed_products (1e5 x 160)", indexed_products_np,
                  (mc_steps, idx, np.eye(2)), "_indexed_products_jit"))

    mats = indexed_products_np(mc_steps, idx[:20000], np.eye(2))
    cases.append(("stoch2_log_norms (2e4)", stoch2_log_norms_np, (mats,),
                  "_stoch2_log_norms_jit"))

    print(f"{'kernel':34s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, np_fn, args, jit_name in cases:
        t_np = timeit(np_fn, *args)
        if NUMBA_ENABLED:
            import liewalk._kernels as kernels

            jit_fn = getattr(kernels, jit_name)
            t_nb = timeit(jit_fn, *args)
            print(f"{name:34s} {t_np * 1e3:9.1f}ms {t_nb * 1e3:9.1f}ms "
                  f"{t_np / t_nb:7.1f}x")
        else:
            print(f"{name:34s} {t_np * 1e3:9.1f}ms {'n/a':>10s} {'':>8s}")
    if not NUMBA_ENABLED:
        print("numba backend unavailable or disabled (LIEWALK_BACKEND=numpy)")


if __name__ == "__main__":
    main()
