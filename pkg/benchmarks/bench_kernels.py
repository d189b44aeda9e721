"""Time the compiled and numpy flow kernels on the same run.

    python benchmarks/bench_kernels.py [--N 200] [--t-end 0.01] [--repeat 3]
"""
import argparse
import time

import numpy as np

from riccicone import kernels
from riccicone.flow import FlowConfig, run_flow


def timed(cfg, backend, repeat):
    best, traj = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = run_flow(cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=200)
    ap.add_argument("--t-end", type=float, default=0.01)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    cfg = FlowConfig(n=3, profile="perturbed_cone", amplitude=1e-3, exponent=2, N=args.N,
                     t_end=args.t_end, store_every=10 ** 9)
    results = {}
    for name in sorted(kernels.BACKENDS):
        results[name] = timed(cfg, name, args.repeat)
        secs, tr = results[name]
        print(f"{name:>7}: {secs:.3f} s for {tr.states[-1].step_index} RK4 steps "
              f"({1e6 * secs / tr.states[-1].step_index:.1f} us/step)")
    if len(results) == 2:
        (tc, a), (tp, b) = results["cython"], results["python"]
        diff = max(np.max(np.abs(a.states[-1].g.q - b.states[-1].g.q)),
                   np.max(np.abs(a.states[-1].P - b.states[-1].P)))
        print(f"speedup {tp / tc:.1f}x, max final-state difference {diff:.1e}")
    else:
        print("compiled extension not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
