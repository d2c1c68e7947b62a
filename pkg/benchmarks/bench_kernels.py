"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from slevir import _kernels
from slevir.group_flow import basis, step_operator_arrays


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    dt = 1e-3

    inc = rng.normal(0, np.sqrt(4 * dt), (10_000, 500))
    op = step_operator_arrays(4, dt)
    rec = np.arange(50, 501, 50)
    P = len(basis(4))
    yield ("flow_batch 1e4x500 N=4",
           lambda: _kernels.flow_batch_loops(inc, *op, P, rec),
           lambda: _kernels.flow_batch_numpy(inc, *op, P, rec))

    xis = np.concatenate([[0.0], np.cumsum(rng.normal(0, np.sqrt(4 * dt), 1999))])
    dts = np.full(2000, dt)
    yield ("trace 2000 steps",
           lambda: _kernels.trace_loops(xis, dts),
           lambda: _kernels.trace_numpy(xis, dts))

    pts = (rng.uniform(-2, 2, 1000) + 1j * rng.uniform(0.05, 2, 1000)).astype(np.complex128)
    yield ("forward 1000 points x 2000 steps",
           lambda: _kernels.forward_loops(pts, xis, dts),
           lambda: _kernels.forward_numpy(pts, xis, dts))

    binc = rng.normal(0, np.sqrt(6e-4), (10_000, 1000))
    brec = np.arange(100, 1001, 100)
    yield ("boundary 1e4x1000",
           lambda: _kernels.boundary_loops(1.0, binc, 1e-4, brec),
           lambda: _kernels.boundary_numpy(1.0, binc, 1e-4, brec))

    path = np.concatenate([[0.0], np.cumsum(rng.normal(0, np.sqrt(4 * dt), 5000))])
    yield ("laurent K=8, 5000 steps",
           lambda: _kernels.laurent_loops(path, dt, 8),
           lambda: _kernels.laurent_numpy(path, dt, 8))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _kernels.USE_NUMBA:
        print("numba disabled (SLEVIR_NO_NUMBA set or numba missing); both columns run numpy code")
    print(f"{'kernel':36s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, fast, slow in cases():
        fast()  # compile
        tf = best_of(fast, args.repeat)
        ts = best_of(slow, args.repeat)
        print(f"{name:36s} {tf:10.4f} {ts:10.4f} {ts / tf:8.1f}")


if __name__ == "__main__":
    main()
