"""Time the compiled sweep kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--sweeps 100]

Both backends consume the same uniforms, so the script also confirms the
chains agree before reporting the speedup.
"""
import argparse
import time

import numpy as np

from annealed_ising.graphs import Multigraph, build_weights
from annealed_ising.samplers import (
    BACKEND,
    ChainConfig,
    glauber_annealed_grg,
    glauber_quenched,
    joint_mcmc_cm,
)


def cases(n):
    w = build_weights("powerlaw", n, tau=4.0)
    return {
        "heat bath, sparse (cycle)": lambda cfg, be: glauber_quenched(Multigraph.cycle(n), 0.5, 0.1, cfg, backend=be),
        "heat bath, dense couplings": lambda cfg, be: glauber_annealed_grg(w, 0.3, 0.1, cfg, backend=be),
        "heat bath, rank-1 field": lambda cfg, be: glauber_annealed_grg(w, 0.3, 0.1, cfg, backend=be, force_rank1=True),
        "joint pairing/spin chain": lambda cfg, be: joint_mcmc_cm([1] * (n // 2) + [2] * (n // 2), 0.5, 0.1, cfg, backend=be),
    }


def timed(fn, cfg, backend):
    t0 = time.perf_counter()
    out = fn(cfg, backend)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=500)
    ap.add_argument("--sweeps", type=int, default=100)
    args = ap.parse_args()
    if BACKEND != "compiled":
        raise SystemExit("compiled kernels are not built; reinstall with Cython available")
    cfg = ChainConfig(args.sweeps, seed=1, burn_in=0)
    print(f"N={args.N}, {args.sweeps} sweeps per run")
    print(f"{'kernel':30s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>9s}  same chain")
    for name, fn in cases(args.N).items():
        fn(ChainConfig(1, seed=0, burn_in=0), "compiled")  # warm caches
        tp, a = timed(fn, cfg, "python")
        tc, b = timed(fn, cfg, "compiled")
        print(f"{name:30s} {tp:11.3f} {tc:13.4f} {tp / tc:8.0f}x  {np.array_equal(a.S, b.S)}")


if __name__ == "__main__":
    main()
