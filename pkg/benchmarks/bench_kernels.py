"""Time the compiled and pure-Python kernels on the same inputs and check they agree.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from brwre import kernels
from brwre.environment import EnvironmentLaw, sample_environment
from brwre.offspring import OffspringLaw

CASES = {
    # name: (offspring pairs, env support, steps)
    "counts subcritical n=2000": ([[1, 0.5], [2, 0.5]], [0.2, 0.4], 2000),
    "counts critical n=5000": ([[2, 1.0]], [0.3, 0.5], 5000),
}


def _counts(backend, probs, omegas, n, seed):
    m = float(np.dot(np.arange(len(probs)), probs))
    rngs = np.random.default_rng(seed).spawn(n + 1)
    return backend.run_counts(probs, omegas, np.log(m * omegas), np.log(m * (1 - omegas)),
                              n, 2**20, rngs, [], True)


def _stayer(backend, probs, omega, size, seed):
    return backend.stayer_gw(probs, omega, size, 10**6, kernels.DEFAULT_SURVIVAL_BOUND,
                             np.random.default_rng(seed), False)


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation`")
    backends = {"cython": kernels.compiled_backend, "python": kernels.python_backend}

    jobs = []
    for name, (pairs, support, n) in CASES.items():
        law = OffspringLaw.from_pairs(pairs)
        env = sample_environment(EnvironmentLaw.from_pairs(support), n + 1, np.random.default_rng(1))
        jobs.append((name, lambda b, p=law.as_array(), w=env.omegas, n=n: _counts(b, p, w, n, 5)))
    crit = OffspringLaw.binary().as_array()
    jobs.append(("stayer GW omega=0.5 x 2000", lambda b: _stayer(b, crit, 0.5, 2000, 5)))
    jobs.append(("stayer GW omega=0.25 x 1e5", lambda b: _stayer(b, crit, 0.25, 100_000, 5)))

    print(f"{'case':32s} {'cython [s]':>11s} {'python [s]':>11s} {'speedup':>8s}  same")
    for name, fn in jobs:
        tc, oc = best_of(lambda: fn(backends["cython"]), args.repeat)
        tp, op = best_of(lambda: fn(backends["python"]), args.repeat)
        same = np.array_equal(oc[0], op[0])
        print(f"{name:32s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f}  {same}")


if __name__ == "__main__":
    main()
