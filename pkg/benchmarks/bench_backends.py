"""Compiled vs numpy Gram kernels: agreement and wall-clock time.

    python3 benchmarks/bench_backends.py [--sizes 200,500,1000] [--repeat 5]

Prints one row per (operation, N) with the median time of each backend,
the speedup and the largest absolute difference between the two results.
"""

import argparse
import statistics
import time

import numpy as np

from advgp import _backend
from advgp.core import Hyperparameters, NoiseModel, make_dataset, IndexSpace
from advgp.engine import PriorMean, log_marginal_likelihood
from advgp.kernels import ConstantMatrixField, LinearField, matern, paciorek_risser


def _time(fn, repeat):
    out, ts = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t0)
    return statistics.median(ts), out


def cases(n, rng):
    X = rng.uniform(-3, 3, (n, 3))
    Y = rng.uniform(-3, 3, (n, 3))
    w = np.array([1.0, 0.5, 2.0])
    M = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 0.5]])
    r = rng.uniform(0, 4, (n, n))
    S = np.broadcast_to(np.diag([0.5, 1.0, 2.0]), (n, 3, 3)).copy()
    S2 = S + 0.1 * np.eye(3)
    a = rng.uniform(0.5, 1.5, n)
    yield "sqdist_weighted", lambda ops: ops.sqdist_weighted(X, Y, w)
    yield "sqdist_metric", lambda ops: ops.sqdist_metric(X, Y, M)
    yield "profile_matern52", lambda ops: ops.profile(r, 5)
    yield "paciorek_gram", lambda ops: ops.paciorek_gram(X, Y, S, S2, a, a, 3)

    pr = paciorek_risser(LinearField((0.2, 0.1, 0.0), 1.0), ConstantMatrixField((0.6, 0.9, 1.2)), 1.5)
    ds = make_dataset(IndexSpace(3), X, np.sin(X[:, 0]), NoiseModel.iid(1e-2))
    k = matern(["l1", "l2", "l3"], 2.5, "s2")
    h = Hyperparameters([("s2", 1.0, 0.1, 10, "log"), ("l1", 1, 0.1, 10, "log"), ("l2", 1, 0.1, 10, "log"), ("l3", 1, 0.1, 10, "log")])
    yield "lml_matern52", lambda ops: log_marginal_likelihood(ds, k, PriorMean.zero(), h)
    yield "lml_paciorek", lambda ops: log_marginal_likelihood(ds, pr, PriorMean.zero(), None)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="200,500,1000")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if "cython" not in _backend.available():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'operation':<18}{'N':>6}{'cython s':>12}{'python s':>12}{'speedup':>9}{'max |diff|':>13}")
    for n in (int(s) for s in args.sizes.split(",")):
        for label, fn in cases(n, np.random.default_rng(0)):
            res = {}
            for b in ("cython", "python"):
                with _backend.use(b) as ops:
                    res[b] = _time(lambda: fn(ops), args.repeat)
            diff = float(np.max(np.abs(np.asarray(res["cython"][1]) - np.asarray(res["python"][1]))))
            tc, tp = res["cython"][0], res["python"][0]
            print(f"{label:<18}{n:>6}{tc:>12.4g}{tp:>12.4g}{tp / tc:>9.2f}{diff:>13.3g}")


if __name__ == "__main__":
    main()
