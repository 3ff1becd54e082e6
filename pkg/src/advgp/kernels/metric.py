"""Squared distances on the index set: isotropic, per-axis or full matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _backend
from ..errors import DimensionMismatch, ValidationError
from .params import Param, accumulate, names, resolve

__all__ = ["Metric", "Isotropic", "AxisLengths", "FullMetric"]


def _diff2(X1, X2, paired):
    if paired:
        d = X1 - X2
        return d * d
    return (X1[:, None, :] - X2[None, :, :]) ** 2


class Metric:
    """Maps two point sets to scaled squared distances r**2."""

    def sqdist(self, X1, X2, h, paired=False):
        raise NotImplementedError

    def sqdist_grad(self, X1, X2, h, paired=False) -> dict:
        return {}

    def params(self) -> frozenset[str]:
        return frozenset()


@dataclass(frozen=True)
class Isotropic(Metric):
    length: Param = 1.0

    def __post_init__(self):
        if not isinstance(self.length, str) and not self.length > 0:
            raise ValidationError("length scale must be positive")

    def sqdist(self, X1, X2, h, paired=False):
        l = resolve(self.length, h)
        if paired:
            d = X1 - X2
            return np.einsum("ij,ij->i", d, d) / (l * l)
        w = np.full(X1.shape[1], 1.0 / (l * l))
        return _backend.ops.sqdist_weighted(X1, X2, w)

    def sqdist_grad(self, X1, X2, h, paired=False):
        l = resolve(self.length, h)
        out = {}
        accumulate(out, self.length, -2.0 * self.sqdist(X1, X2, h, paired) / l)
        return out

    def params(self):
        return names(self.length)


@dataclass(frozen=True)
class AxisLengths(Metric):
    lengths: tuple[Param, ...]

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(self.lengths))
        if not self.lengths:
            raise ValidationError("need at least one axis length")
        for l in self.lengths:
            if not isinstance(l, str) and not l > 0:
                raise ValidationError("axis lengths must be positive")

    def _check(self, X1):
        if X1.shape[1] != len(self.lengths):
            raise DimensionMismatch(f"metric has {len(self.lengths)} axes, points have {X1.shape[1]}")

    def sqdist(self, X1, X2, h, paired=False):
        self._check(X1)
        w = np.array([1.0 / resolve(l, h) ** 2 for l in self.lengths])
        if paired:
            return (X1 - X2) ** 2 @ w
        return _backend.ops.sqdist_weighted(X1, X2, w)

    def sqdist_grad(self, X1, X2, h, paired=False):
        self._check(X1)
        d2 = _diff2(X1, X2, paired)
        out = {}
        for k, l in enumerate(self.lengths):
            if isinstance(l, str):
                lv = resolve(l, h)
                accumulate(out, l, -2.0 * d2[..., k] / lv**3)
        return out

    def params(self):
        return names(*self.lengths)


@dataclass(frozen=True, eq=False)
class FullMetric(Metric):
    """r**2 = (x1 - x2)^T M (x1 - x2) with a fixed SPD matrix M."""

    M: np.ndarray

    def __post_init__(self):
        M = np.array(self.M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValidationError("metric matrix must be square")
        if not np.all(np.isfinite(M)) or np.abs(M - M.T).max() > 1e-12 * max(1.0, np.abs(M).max()):
            raise ValidationError("metric matrix must be symmetric")
        if np.linalg.eigvalsh(M).min() <= 0:
            raise ValidationError("metric matrix must be positive definite")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    def sqdist(self, X1, X2, h, paired=False):
        if X1.shape[1] != self.M.shape[0]:
            raise DimensionMismatch(f"metric is {self.M.shape[0]}-D, points have {X1.shape[1]}")
        if paired:
            d = X1 - X2
            return np.einsum("ik,kl,il->i", d, self.M, d)
        return _backend.ops.sqdist_metric(X1, X2, self.M)

    def __eq__(self, other):
        return isinstance(other, FullMetric) and np.array_equal(self.M, other.M)

    __hash__ = object.__hash__
