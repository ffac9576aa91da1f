"""Time the per-sample minima kernels under the numba and numpy backends.

    python benchmarks/bench_kernels.py --samples 2000 --p 10
"""

import argparse
import time

import numpy as np

from strongfaith import kernels
from strongfaith.graph import make_bipartite, make_cycle, make_random
from strongfaith.numeric import ZERO_THRESHOLD


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(p, samples, rng):
    for name, g in (("cycle", make_cycle(p)), ("bipartite", make_bipartite(p))):
        a = kernels.weight_matrices(g, rng.uniform(-1, 1, (samples, len(g.edges))))
        table = kernels.flag_table(g)
        yield f"fixed {name} p={p}", lambda a=a, t=table: kernels.minima_fixed(a, t, ZERO_THRESHOLD)
    dags = [make_random(p, 2.0, rng) for _ in range(samples)]
    a = np.stack([kernels.weight_matrices(g, rng.uniform(-1, 1, len(g.edges)))[0] for g in dags])
    yield f"varying random p={p} en=2", lambda: kernels.minima_varying(a, dags, ZERO_THRESHOLD)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'case':32s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in cases(args.p, args.samples, rng):
        timings = {}
        results = {}
        for backend in ("numba", "numpy"):
            with kernels.using_backend(backend):
                results[backend] = fn()  # also triggers JIT compilation
                timings[backend] = best_of(fn, args.repeats)
        assert np.allclose(results["numba"][0], results["numpy"][0], atol=1e-12)
        speedup = timings["numpy"] / timings["numba"]
        print(f"{name:32s} {timings['numba']:10.3f} {timings['numpy']:10.3f} {speedup:7.1f}x")


if __name__ == "__main__":
    main()
