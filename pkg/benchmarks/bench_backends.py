"""Time the compiled kernel against the pure-Python environment.

    python3 benchmarks/bench_backends.py [--T 200000] [--repeat 3]

Both backends replay the same trial, so the summaries are also compared.
"""
import argparse
import time

import numpy as np

from streambandit.core import SeededRng, make_instance
from streambandit.policies import PolicyConfig, select_policy
from streambandit.simulate import BACKEND, simulate_trial

CASES = [("small", 50, 10), ("large", 60, 50), ("plain-ucb", 10, 10)]


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if BACKEND != "compiled":
        raise SystemExit("compiled kernel not available; rebuild with `pip install -e . --no-build-isolation`")

    print(f"{'case':<10} {'n':>4} {'m':>4} {'T':>9} {'python s':>10} {'compiled s':>11} {'speedup':>8}  same")
    for name, n, m in CASES:
        inst = make_instance(np.random.default_rng(n).uniform(0.5, 0.8, n))
        tag = select_policy(n, m)
        cfg = PolicyConfig()

        def trial(backend):
            return lambda: simulate_trial(inst, m, args.T, tag, cfg, SeededRng(7), backend=backend)

        tp, sp = best_of(trial("python"), args.repeat)
        tc, sc = best_of(trial("compiled"), args.repeat)
        print(f"{name:<10} {n:>4} {m:>4} {args.T:>9} {tp:>10.3f} {tc:>11.4f} {tp / tc:>7.0f}x  {sp == sc}")


if __name__ == "__main__":
    main()
