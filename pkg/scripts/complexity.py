"""Wall-clock of one exact gradient against network size, split into the
fixed-point solve and the dense linear algebra.

Usage: python3 scripts/complexity.py [n ...]
"""

import sys
import time

import numpy as np

from arnn_botnet.core import ArnnModel, solve_fixed_point
from arnn_botnet.learn import TrainingSample, build_workspace, cost_gradient, gradient_from_workspace


def best_of(fn, reps):
    fn()
    best = np.inf
    for _ in range(reps):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(ns):
    rows = []
    for n in ns:
        rng = np.random.default_rng(n)
        wx, wy = rng.uniform(0, 1, (2, n, n))
        np.fill_diagonal(wx, 0)
        np.fill_diagonal(wy, 0)
        model = ArnnModel(1.0, wx, wy)
        sample = TrainingSample(rng.random(n), rng.random(n))
        inputs = sample.inputs
        states = solve_fixed_point(model, inputs)
        reps = max(3, 2000 // n)
        total = best_of(lambda: cost_gradient(model, sample), reps)
        solve = best_of(lambda: solve_fixed_point(model, inputs), reps)
        algebra = best_of(lambda: gradient_from_workspace(build_workspace(model, inputs, states), sample), reps)
        rows.append((n, states.iterations, total, solve, algebra))
        print(f"n={n:4d}  iterations={states.iterations:4d}  total={1e3 * total:9.3f}ms  "
              f"solve={1e3 * solve:9.3f}ms  algebra={1e3 * algebra:9.3f}ms")
    logn = np.log([r[0] for r in rows])
    for k, name in ((2, "total"), (3, "solve"), (4, "algebra")):
        slope = np.polyfit(logn, np.log([r[k] for r in rows]), 1)[0]
        print(f"log-log slope ({name}): {slope:.2f}")


if __name__ == "__main__":
    main([int(a) for a in sys.argv[1:]] or [8, 16, 32, 64, 128, 256, 512])
