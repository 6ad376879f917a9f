"""Compiled versus numpy trajectory kernel, and where the ensemble time goes.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from measurement_engine import kernels
from measurement_engine.continuous import ContinuousParams, _draws, run_ensemble
from measurement_engine.qubit import EngineParams

SHAPES = [(20_000, 15), (2_000, 1_000), (200, 10_000)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"default backend: {kernels.BACKEND}; available: {', '.join(sorted(kernels.BACKENDS))}")
    print(f"{'n_traj x n_steps':>18} " + " ".join(f"{b:>10}" for b in sorted(kernels.BACKENDS)) + "   speedup")
    rng = np.random.default_rng(0)
    for n_traj, n_steps in SHAPES:
        u = rng.random((n_traj, n_steps))
        n = rng.standard_normal((n_traj, n_steps))
        times = {
            name: best_of(lambda f=fn: f(0.0, 0.0, -0.1, u, n, 0.01, False), args.repeat)
            for name, fn in sorted(kernels.BACKENDS.items())
        }
        speedup = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        cells = " ".join(f"{times[b]:>9.4f}s" for b in sorted(times))
        print(f"{n_traj:>8} x {n_steps:<7} {cells}   {speedup:6.2f}x")

    # whole-ensemble breakdown at the 20000 x 15 reference scale
    params = EngineParams(omega0=1.0, z0_override=-0.1)
    cp = ContinuousParams(0.01, 15, 20_000, 42)
    t_draws = best_of(lambda: _draws(42, range(cp.n_traj), cp.n_steps), args.repeat)
    print("\nensemble of 20000 x 15 (best of %d)" % args.repeat)
    print(f"  random draws      {t_draws:.4f}s")
    for name in sorted(kernels.BACKENDS):
        t = best_of(lambda b=name: run_ensemble(params, cp, backend=b), args.repeat)
        print(f"  run_ensemble[{name}] {t:.4f}s")


if __name__ == "__main__":
    main()
