"""Compiled core vs numpy fallback on the two hot kernels.

    python3 benchmarks/bench_core.py [--paths 200000] [--steps 20]
"""

import argparse
import time

import numpy as np

from coset_chains import _fallback
from coset_chains.chains import rt_matrix
from coset_chains.spectral import symmetrize
from coset_chains.tables import enumerate_tables, fisher_yates_pmf

try:
    from coset_chains import _core
except ImportError:
    _core = None


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_jacobi(rows, cols):
    states, P = rt_matrix(rows, cols)
    pi = np.array([float(fisher_yates_pmf(s)) for s in states])
    S = np.ascontiguousarray(symmetrize(P.toarray(), pi))
    out = {"states": len(states)}
    for name, mod in (("compiled", _core), ("python", _fallback)):
        if mod is not None:
            out[name] = best_of(lambda: mod.jacobi_eigenvalues(S.copy(), 1e-12, 100), repeat=1)
    return out


def bench_walk(rows, cols, paths, steps, seed=0):
    x0 = np.array(enumerate_tables(rows, cols)[0].flat(), dtype=np.int64)
    n = sum(rows)
    picks = np.random.default_rng(seed).integers(n, size=(steps, paths, 2), dtype=np.int64)
    out = {}
    results = {}
    for name, mod in (("compiled", _core), ("python", _fallback)):
        if mod is None:
            continue
        out[name] = best_of(lambda: results.__setitem__(name, mod.rt_walk(np.tile(x0, (paths, 1)), len(cols), picks)))
    if len(results) == 2:
        out["agree"] = bool(np.array_equal(results["compiled"], results["python"]))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=20)
    args = ap.parse_args()
    print("compiled core available:", _core is not None)
    for rows, cols in [((3, 2, 1), (2, 2, 1, 1)), ((2, 2, 1, 1), (2, 2, 1, 1)), ((3, 2, 2), (2, 2, 2, 1)),
                       ((2, 2, 2, 1), (2, 2, 1, 1, 1))]:
        r = bench_jacobi(rows, cols)
        print(f"jacobi {rows} x {cols}: {r}")
    r = bench_walk((3, 2), (2, 2, 1), args.paths, args.steps)
    print(f"rt_walk {args.paths} paths x {args.steps} steps: {r}")


if __name__ == "__main__":
    main()
