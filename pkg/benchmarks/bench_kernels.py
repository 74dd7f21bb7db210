"""Compare the numba and numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is called once
per backend before timing so that JIT compilation (or loading the on-disk
cache) is not counted. Outputs of the two backends are checked to agree.
"""

import argparse
import time

import numpy as np

from mixmom import _accel, kernels
from mixmom.moments import Dataset
from mixmom.simulate import SimConfig, sample_model, simulate_dataset
from mixmom.tensor import unfold


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n, p, sweeps):
    cfg = SimConfig(p=p, k=4, d=4, n=n, seed=7)
    data = simulate_dataset(sample_model(cfg), cfg)
    assert isinstance(data, Dataset)
    third = p // 3
    enc = [data.encoding(range(m * third, (m + 1) * third)) for m in range(3)]
    (ra, va, da), (rb, vb, db), (rc, vc, dc) = enc

    rng = np.random.default_rng(0)
    T = rng.standard_normal((da, db, dc))
    T /= np.abs(T).max()
    init = [rng.random((d, 4)) for d in (da, db, dc)]
    M = [unfold(T, m) for m in (1, 2, 3)]

    yield "pair_sums", lambda: kernels.pair_sums(ra, va, rb, vb, da, db)
    yield "triple_sums", lambda: kernels.triple_sums(ra, va, rb, vb, rc, vc, da, db, dc)
    # rel_tol=0 forces exactly `sweeps` sweeps on both backends
    yield "pqp_sweeps", lambda: kernels.pqp_sweeps(*M, *init, sweeps, 0.0, 1e-10)[:3]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--p", type=int, default=24)
    ap.add_argument("--sweeps", type=int, default=500)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    print(f"{'kernel':<12} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8}  max |diff|")
    for name, fn in cases(args.n, args.p, args.sweeps):
        results = {}
        for backend in ("numpy", "numba"):
            _accel.set_backend(backend)
            fn()  # warm-up
            results[backend] = best_of(fn, args.repeats)
        t_np, out_np = results["numpy"]
        t_nb, out_nb = results["numba"]
        if isinstance(out_np, tuple):
            diff = max(float(np.max(np.abs(a - b))) for a, b in zip(out_np, out_nb))
        else:
            diff = float(np.max(np.abs(out_np - out_nb)))
        print(f"{name:<12} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x  {diff:.2e}")


if __name__ == "__main__":
    main()
