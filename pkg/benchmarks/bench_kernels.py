"""Compare the compiled and pure-Python simulation kernels.

Runs the same workloads through both backends, reports throughput, and
verifies that the outputs are bit-for-bit identical (both backends consume
the same block-buffered random draws in the same order).

Usage:  python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import numpy as np

from thermobilliards import (RngStream, equilateral_triangle, sample_initial,
                             two_plates, disc_union)
from thermobilliards.kernels import get_backend
from thermobilliards.chain import _effective_arrays
from thermobilliards.sampling import ReflectionLaw
from thermobilliards.rng import BlockDraws


def _chain_args(table, n_steps, seed):
    arrays = _effective_arrays(table, ReflectionLaw())
    if table.kind == "two_plates":
        vel0 = np.array([0.3, 0.1, 1.2])
    else:
        x0 = sample_initial(table, 1.0, RngStream(seed, 1).generator())
        return (arrays, x0.component, x0.position, x0.velocity, n_steps,
                BlockDraws(RngStream(seed, 0).generator()), 1.0)
    return (arrays, 0, 0.0, vel0, n_steps,
            BlockDraws(RngStream(seed, 0).generator()), 1.0)


def bench_chain(n_steps):
    tables = {
        "two_plates": two_plates((2.0, 1.0), (0.5, 0.8)),
        "triangle": equilateral_triangle((1.0, 2.0, 3.0), (0.7, 0.7, 0.7)),
        "disc_union": disc_union(1.0, 0.6, (1.0, 2.0), (0.8, 0.8)),
    }
    pure, _ = get_backend("pure")
    core, _ = get_backend("cython")
    print(f"{'table':<12} {'pure Msteps/s':>14} {'cython Msteps/s':>16} "
          f"{'speedup':>8}  identical")
    for name, tab in tables.items():
        results, rates = {}, {}
        for label, backend in (("pure", pure), ("cython", core)):
            args = _chain_args(tab, n_steps, seed=42)
            t0 = time.perf_counter()
            rec = backend.run_chain(*args)
            dt = time.perf_counter() - t0
            results[label] = rec
            rates[label] = n_steps / dt / 1e6
        same = all(
            np.array_equal(results["pure"][k], results["cython"][k])
            for k in ("comp", "pre_e", "post_e", "speed"))
        print(f"{name:<12} {rates['pure']:>14.3f} {rates['cython']:>16.3f} "
              f"{rates['cython'] / rates['pure']:>7.1f}x  {same}")


def bench_engine(n_collisions):
    pure, _ = get_backend("pure")
    core, _ = get_backend("cython")
    kp = {"T_h": 50.0, "T_c": 1.0, "alpha_h": 1.0, "alpha_c": 1.0,
          "m1": 1000.0, "m2": 1.0, "force": -2.0, "side": 1.0}
    print(f"\n{'engine':<12} {'pure Mcoll/s':>14} {'cython Mcoll/s':>16} "
          f"{'speedup':>8}  identical")
    results, rates = {}, {}
    for label, backend in (("pure", pure), ("cython", core)):
        draws = BlockDraws(RngStream(7, 0).generator())
        t0 = time.perf_counter()
        rec = backend.engine_run(kp, n_collisions, draws)
        dt = time.perf_counter() - t0
        results[label] = rec
        rates[label] = len(rec["t"]) / dt / 1e6
    same = all(np.array_equal(results["pure"][k], results["cython"][k])
               for k in ("t", "x_w", "w", "q_h", "q_c", "work", "energy"))
    print(f"{'triangle':<12} {rates['pure']:>14.3f} {rates['cython']:>16.3f} "
          f"{rates['cython'] / rates['pure']:>7.1f}x  {same}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200_000,
                    help="collisions per chain benchmark (default 200000)")
    args = ap.parse_args()
    bench_chain(args.steps)
    bench_engine(min(args.steps, 50_000))


if __name__ == "__main__":
    main()
