"""Time the numba and numpy RK4 kernels on the same march.

    python3 benchmarks/bench_backends.py [--points 1001 8001] [--steps 2000] [--repeat 3]

Prints wall time per march, throughput in million cell-steps per second, the
speed-up of numba over numpy and the max difference between the two results.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from scalewave import _kernels


# small enough that the cubic source stays finite over the default march
AMPLITUDE = 0.05


def _data(n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    x = (np.arange(n) - n // 2) * h
    g = AMPLITUDE * np.exp(-x ** 2)
    return g, -2 * x * g


def time_march(backend: str, n: int, steps: int, repeat: int, kind: int, p: float):
    _, advance = _kernels.BACKENDS[backend]
    h = 0.05
    dt = 0.4 * h
    best = math.inf
    for _ in range(repeat):
        u, v = _data(n, h)
        t0 = time.perf_counter()
        advance(u, v, 0, steps, dt, 0.0, 1.0, kind, p, 1, h, math.inf)
        best = min(best, time.perf_counter() - t0)
    return best, u, v


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, nargs="+", default=[1001, 8001, 32001])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nonlinear", action="store_true", help="include a cubic |u_t|^p source")
    args = ap.parse_args(argv)

    if not _kernels.HAVE_NUMBA:
        print("numba is not importable; only the numpy backend is available")
        return 1
    kind, p = (_kernels.UNSIGNED, 3.0) if args.nonlinear else (_kernels.NONE, 1.0)
    # compile outside the timed region
    time_march("numba", 64, 2, 1, kind, p)

    print(f"{'points':>8} {'numpy s':>10} {'numba s':>10} {'numpy Mcs/s':>12} {'numba Mcs/s':>12} "
          f"{'speed-up':>9} {'max diff':>10}")
    for n in args.points:
        t_np, u_np, v_np = time_march("numpy", n, args.steps, args.repeat, kind, p)
        t_nb, u_nb, v_nb = time_march("numba", n, args.steps, args.repeat, kind, p)
        work = n * args.steps / 1e6
        diff = max(np.max(np.abs(u_np - u_nb)), np.max(np.abs(v_np - v_nb)))
        print(f"{n:>8} {t_np:>10.4f} {t_nb:>10.4f} {work / t_np:>12.2f} {work / t_nb:>12.2f} "
              f"{t_np / t_nb:>8.2f}x {diff:>10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
