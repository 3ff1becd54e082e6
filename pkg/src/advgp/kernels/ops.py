"""Kernel constructors, symmetry groups and the numerical PSD check."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import as_points
from ..errors import DimensionMismatch, NonPositivePeriod, ValidationError
from .expr import (
    Affine,
    AxisRestrict,
    Exponential,
    GroupAverage,
    Kernel,
    Matern,
    PaciorekRisser,
    Product,
    Scale,
    SqExp,
    Sum,
    Warp,
    nu_code,
)
from .fields import MatrixField, ScalarField
from .metric import AxisLengths, Isotropic, Metric
from .params import Param

__all__ = [
    "sqexp",
    "exponential",
    "matern",
    "additive_anisotropic",
    "multiplicative_anisotropic",
    "warp",
    "group_average",
    "axial_group",
    "rotation_group",
    "six_fold",
    "periodic_shift",
    "paciorek_risser",
    "PSDReport",
    "psd_check",
]


def _metric(length) -> Metric:
    if isinstance(length, Metric):
        return length
    if isinstance(length, (str, int, float)):
        return Isotropic(length)
    return AxisLengths(tuple(length))


def _scaled(k: Kernel, variance):
    return k if variance is None else Scale(variance, k)


def sqexp(length: Param | Sequence[Param] | Metric = 1.0, variance: Param | None = None) -> Kernel:
    return _scaled(SqExp(_metric(length)), variance)


def exponential(length: Param | Sequence[Param] | Metric = 1.0, variance: Param | None = None) -> Kernel:
    return _scaled(Exponential(_metric(length)), variance)


def matern(length: Param | Sequence[Param] | Metric = 1.0, nu: float = 1.5, variance: Param | None = None) -> Kernel:
    nu_code(nu)
    return _scaled(Matern(_metric(length), nu), variance)


def additive_anisotropic(lengths: Sequence[Param], base=exponential) -> Kernel:
    """sum_i k_i(x1[i], x2[i]), one length scale per axis."""
    return Sum(tuple(AxisRestrict((i,), base(l)) for i, l in enumerate(lengths)))


def multiplicative_anisotropic(lengths: Sequence[Param], base=exponential) -> Kernel:
    """prod_i k_i(x1[i], x2[i]), one length scale per axis."""
    return Product(tuple(AxisRestrict((i,), base(l)) for i, l in enumerate(lengths)))


def warp(field: ScalarField, child: Kernel) -> Kernel:
    return Warp(field, child)


def group_average(transforms, child: Kernel) -> Kernel:
    return GroupAverage(tuple(transforms), child)


def axial_group(dim: int = 2, axes: Sequence[int] | None = None) -> list[Affine]:
    """All sign flips of the chosen axes (default: every axis), identity first."""
    axes = list(range(dim)) if axes is None else list(axes)
    maps = []
    for mask in range(2 ** len(axes)):
        s = np.ones(dim)
        for bit, ax in enumerate(axes):
            if mask >> bit & 1:
                s[ax] = -1.0
        maps.append(Affine(np.diag(s)))
    return maps


def rotation_group(order: int) -> list[Affine]:
    """Planar rotations by 2*pi*p/order, p = 0..order-1."""
    if int(order) != order or order < 1:
        raise ValidationError(f"rotation order must be a positive integer, got {order}")
    maps = []
    for p in range(int(order)):
        if p == 0:
            maps.append(Affine(np.eye(2)))
            continue
        t = 2.0 * math.pi * p / order
        c, s = math.cos(t), math.sin(t)
        maps.append(Affine(np.array([[c, -s], [s, c]])))
    return maps


def six_fold(child: Kernel) -> Kernel:
    """Average of the child over the six rotations by multiples of pi/3."""
    return GroupAverage(tuple(rotation_group(6)), child)


def periodic_shift(axis: int, period: float, child: Kernel, dim: int = 2) -> Kernel:
    """Average over shifts {0, +p, -p} of one axis applied to either argument."""
    if not period > 0:
        raise NonPositivePeriod(f"period must be positive, got {period}")
    if not 0 <= axis < dim:
        raise DimensionMismatch(f"axis {axis} out of range for {dim}-D space")
    maps = []
    for s in (0.0, period, -period):
        b = np.zeros(dim)
        b[axis] = s
        maps.append(Affine(np.eye(dim), b))
    return GroupAverage(tuple(maps), child)


def paciorek_risser(amplitude: ScalarField, covariance: MatrixField, nu: float = 0.5) -> Kernel:
    return PaciorekRisser(amplitude, covariance, nu)


@dataclass(frozen=True)
class PSDReport:
    min_eig: float
    trace: float
    passed: bool

    def __bool__(self):
        return self.passed


def psd_check(k: Kernel, h, points, rtol: float = 1e-8) -> PSDReport:
    """Eigenvalue test of the symmetrized Gram matrix.

    Passes when the smallest eigenvalue is at least ``-rtol * max(1, trace)``.
    """
    X = as_points(points)
    if X.shape[0] < 2:
        raise ValidationError("psd_check needs at least two points")
    K = k.gram(X, X, h)
    K = 0.5 * (K + K.T)
    if not np.all(np.isfinite(K)):
        return PSDReport(float("nan"), float("nan"), False)
    ev = np.linalg.eigvalsh(K)
    tr = float(np.trace(K))
    lo = float(ev[0])
    return PSDReport(lo, tr, lo >= -rtol * max(1.0, tr))
