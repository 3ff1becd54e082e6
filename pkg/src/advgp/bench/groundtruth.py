"""Synthetic test functions and seeded samplers.

Formulas (inputs ``x = (a, b)``):

* ``additive2d`` on [0, 1]^2: ``sin(2 pi a) + 0.6 cos(3 b)``; training points
  lie on the two axes a = 0 or b = 0.
* ``ackley_symmetric`` on [-2, 2]^2: Ackley's function, which is even in each
  coordinate.
* ``periodic2d`` on [0, 3] x [0, 4]: ``(1 + 0.4 a) sin(2 pi u) + 0.3 cos(4 pi u)``
  with ``u = (b mod p) / p``, ``p = 1``.
* ``sixfold2d`` on [-2, 2]^2: ``Re((a + ib)^6) exp(-r^2) / 1.34 + 0.5 cos(1.5 r)``,
  invariant under rotation by pi/3.
* ``nonstat1d`` on [0, 10]: ``(0.05 + 0.3 x) sin(2 x)``, amplitude growing
  linearly.
* ``nonstat2d`` on [0, 5]^2: ``sin(0.35 r^2)``, local frequency growing with r.
* ``ir_drift`` (multi-task) on [1, 2]^2 x tasks in [0, 10]: two Gaussian
  peaks along the task axis, ``exp(-(t - c1)^2 / 0.5) + 0.8 exp(-(t - c2)^2 / 0.5)``
  with centers ``c1 = 1.5 a + 0.5 b`` and ``c2 = 2 a + 2 b`` drifting with the input.

Sampling uses independent child streams of one seed for training
locations, noise and test locations, so the first N training points do not
depend on how many are drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import Dataset, IndexSpace, NoiseModel, make_dataset
from ..multitask import MultiTaskDataset, TaskGrid, make_multitask
from ..errors import ValidationError

__all__ = [
    "GroundTruth",
    "GROUND_TRUTHS",
    "get_ground_truth",
    "generate",
    "test_points",
    "streams",
    "DriftingPeaks",
    "IR_DRIFT",
]


@dataclass(frozen=True)
class GroundTruth:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    bounds: tuple[tuple[float, float], ...]
    axis_confined: bool = False

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def space(self) -> IndexSpace:
        return IndexSpace(self.dim, 0, self.bounds)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.func(X)


def _additive(X):
    return np.sin(2.0 * np.pi * X[:, 0]) + 0.6 * np.cos(3.0 * X[:, 1])


def _ackley(X):
    a, b = X[:, 0], X[:, 1]
    return (
        -20.0 * np.exp(-0.2 * np.sqrt(0.5 * (a * a + b * b)))
        - np.exp(0.5 * (np.cos(2.0 * np.pi * a) + np.cos(2.0 * np.pi * b)))
        + math.e
        + 20.0
    )


PERIOD = 1.0


def _periodic(X):
    u = np.mod(X[:, 1], PERIOD) / PERIOD
    return (1.0 + 0.4 * X[:, 0]) * np.sin(2.0 * np.pi * u) + 0.3 * np.cos(4.0 * np.pi * u)


def _sixfold(X):
    a, b = X[:, 0], X[:, 1]
    a2, b2 = a * a, b * b
    re6 = a2 * a2 * a2 - 15.0 * a2 * a2 * b2 + 15.0 * a2 * b2 * b2 - b2 * b2 * b2
    r2 = a2 + b2
    return re6 * np.exp(-r2) / 1.34 + 0.5 * np.cos(1.5 * np.sqrt(r2))


def _nonstat1d(X):
    x = X[:, 0]
    return (0.05 + 0.3 * x) * np.sin(2.0 * x)


def _nonstat2d(X):
    r2 = X[:, 0] ** 2 + X[:, 1] ** 2
    return np.sin(0.35 * r2)


GROUND_TRUTHS = {
    "additive2d": GroundTruth("additive2d", _additive, ((0.0, 1.0), (0.0, 1.0)), axis_confined=True),
    "ackley_symmetric": GroundTruth("ackley_symmetric", _ackley, ((-2.0, 2.0), (-2.0, 2.0))),
    "periodic2d": GroundTruth("periodic2d", _periodic, ((0.0, 3.0), (0.0, 4.0))),
    "sixfold2d": GroundTruth("sixfold2d", _sixfold, ((-2.0, 2.0), (-2.0, 2.0))),
    "nonstat1d": GroundTruth("nonstat1d", _nonstat1d, ((0.0, 10.0),)),
    "nonstat2d": GroundTruth("nonstat2d", _nonstat2d, ((0.0, 5.0), (0.0, 5.0))),
}


def get_ground_truth(name: str) -> GroundTruth:
    try:
        return GROUND_TRUTHS[name]
    except KeyError:
        raise ValidationError(f"unknown ground truth {name!r}; choose from {sorted(GROUND_TRUTHS)}") from None


def streams(seed: int):
    """(training locations, noise, test locations) generators for one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def _uniform(rng, bounds, n):
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + rng.random((n, len(bounds))) * (hi - lo)


def training_points(gt: GroundTruth, n: int, seed: int) -> np.ndarray:
    rng = streams(seed)[0]
    if not gt.axis_confined:
        return _uniform(rng, gt.bounds, n)
    u = rng.random((n, 2))
    lo = np.array([b[0] for b in gt.bounds])
    hi = np.array([b[1] for b in gt.bounds])
    X = np.tile(lo, (n, 1))
    axis = (u[:, 0] >= 0.5).astype(int)  # which coordinate varies
    rows = np.arange(n)
    X[rows, axis] = lo[axis] + u[:, 1] * (hi[axis] - lo[axis])
    return X


def generate(gt: GroundTruth, n: int, seed: int, noise_var: float = 0.0) -> Dataset:
    """Seeded training set: y = f(x) + N(0, noise_var)."""
    if n < 1:
        raise ValidationError("need at least one training point")
    X = training_points(gt, n, seed)
    y = gt(X)
    if noise_var > 0:
        y = y + math.sqrt(noise_var) * streams(seed)[1].standard_normal(n)
        noise = NoiseModel.iid(noise_var)
    else:
        noise = NoiseModel.none()
    return make_dataset(gt.space, X, y, noise)


def test_points(gt: GroundTruth, m: int, seed: int) -> np.ndarray:
    """Held-out locations drawn uniformly over the whole domain."""
    return _uniform(streams(seed)[2], gt.bounds, m)


@dataclass(frozen=True)
class DriftingPeaks:
    """Multi-task truth: peaks along the task axis whose positions move with the input."""

    name: str = "ir_drift"
    bounds: tuple[tuple[float, float], ...] = ((1.0, 2.0), (1.0, 2.0))
    task_range: tuple[float, float] = (0.0, 10.0)
    centers: tuple[tuple[float, float], ...] = ((1.5, 0.5), (2.0, 2.0))
    heights: tuple[float, ...] = (1.0, 0.8)
    width: float = 0.5

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def tasks(self, n_tasks: int) -> TaskGrid:
        return TaskGrid(np.linspace(self.task_range[0], self.task_range[1], n_tasks))

    def __call__(self, X, t) -> np.ndarray:
        """(N, T) values at inputs X and task coordinates t."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        t = np.asarray(t, dtype=np.float64).ravel()[None, :]
        out = np.zeros((X.shape[0], t.shape[1]))
        for (wa, wb), hgt in zip(self.centers, self.heights):
            c = (wa * X[:, 0] + wb * X[:, 1])[:, None]
            out += hgt * np.exp(-((t - c) ** 2) / self.width)
        return out

    def generate(self, n: int, seed: int, noise_var: float, n_tasks: int = 20) -> MultiTaskDataset:
        if n < 1:
            raise ValidationError("need at least one training record")
        tasks = self.tasks(n_tasks)
        X = _uniform(streams(seed)[0], self.bounds, n)
        Y = self(X, tasks.coords)
        nv = noise_var if noise_var > 0 else 1e-8
        if noise_var > 0:
            Y = Y + math.sqrt(noise_var) * streams(seed)[1].standard_normal((n, n_tasks))
        return make_multitask(IndexSpace(self.dim), tasks, X, Y, nv)

    def test_points(self, m: int, seed: int) -> np.ndarray:
        return _uniform(streams(seed)[2], self.bounds, m)


IR_DRIFT = DriftingPeaks()
