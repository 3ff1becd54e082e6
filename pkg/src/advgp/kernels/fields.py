"""Parametric scalar and matrix fields over the index set.

Fields feed the non-stationary kernels: ``Warp`` multiplies by f(x1) f(x2)
and ``PaciorekRisser`` reads a signal amplitude and an SPD anisotropy matrix
at every point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, NonSPDField, ValidationError
from .params import Param, accumulate, names, resolve

__all__ = [
    "ScalarField",
    "ConstantField",
    "LinearField",
    "RadialField",
    "BumpField",
    "MatrixField",
    "ConstantMatrixField",
    "FactorMatrixField",
    "SPD_FLOOR",
]

SPD_FLOOR = 1e-8


class ScalarField:
    def __call__(self, X, h) -> np.ndarray:
        raise NotImplementedError

    def grad(self, X, h) -> dict:
        """Derivative of the field values with respect to each referenced name."""
        return {}

    def params(self) -> frozenset[str]:
        return frozenset()


@dataclass(frozen=True)
class ConstantField(ScalarField):
    value: Param = 1.0

    def __call__(self, X, h):
        return np.full(X.shape[0], resolve(self.value, h))

    def grad(self, X, h):
        out = {}
        accumulate(out, self.value, np.ones(X.shape[0]))
        return out

    def params(self):
        return names(self.value)


@dataclass(frozen=True)
class LinearField(ScalarField):
    """f(x) = w . x + b."""

    weights: tuple[Param, ...]
    bias: Param = 0.0

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))

    def _check(self, X):
        if X.shape[1] != len(self.weights):
            raise DimensionMismatch(f"linear field has {len(self.weights)} weights, points have {X.shape[1]} coordinates")

    def __call__(self, X, h):
        self._check(X)
        w = np.array([resolve(p, h) for p in self.weights])
        return X @ w + resolve(self.bias, h)

    def grad(self, X, h):
        self._check(X)
        out = {}
        for k, p in enumerate(self.weights):
            accumulate(out, p, X[:, k].copy())
        accumulate(out, self.bias, np.ones(X.shape[0]))
        return out

    def params(self):
        return names(*self.weights, self.bias)


@dataclass(frozen=True)
class RadialField(ScalarField):
    """f(x) = slope * (radius - ||x[axes] - center||) + offset."""

    slope: Param = 1.0
    offset: Param = 0.0
    radius: Param = math.sqrt(50.0)
    center: tuple[float, ...] | None = None
    axes: tuple[int, ...] | None = None

    def _norm(self, X):
        Z = X if self.axes is None else X[:, list(self.axes)]
        if self.center is not None:
            Z = Z - np.asarray(self.center, dtype=np.float64)
        return np.sqrt(np.einsum("ij,ij->i", Z, Z))

    def __call__(self, X, h):
        return resolve(self.slope, h) * (resolve(self.radius, h) - self._norm(X)) + resolve(self.offset, h)

    def grad(self, X, h):
        out = {}
        accumulate(out, self.slope, resolve(self.radius, h) - self._norm(X))
        accumulate(out, self.offset, np.ones(X.shape[0]))
        accumulate(out, self.radius, np.full(X.shape[0], resolve(self.slope, h)))
        return out

    def params(self):
        return names(self.slope, self.offset, self.radius)


@dataclass(frozen=True)
class BumpField(ScalarField):
    """Sum of Gaussian bumps a_j * exp(-||x - c_j||^2 / width)."""

    centers: tuple[tuple[Param, ...], ...]
    amplitudes: tuple[Param, ...]
    width: Param = 1.0

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(tuple(c) for c in self.centers))
        object.__setattr__(self, "amplitudes", tuple(self.amplitudes))
        if len(self.centers) != len(self.amplitudes) or not self.centers:
            raise ValidationError("need one amplitude per bump center")

    def _terms(self, X, h):
        w = resolve(self.width, h)
        out = []
        for c, a in zip(self.centers, self.amplitudes):
            if len(c) != X.shape[1]:
                raise DimensionMismatch("bump center dimension does not match points")
            cv = np.array([resolve(p, h) for p in c])
            d = X - cv
            e = np.exp(-np.einsum("ij,ij->i", d, d) / w)
            out.append((resolve(a, h), d, e))
        return w, out

    def __call__(self, X, h):
        _, terms = self._terms(X, h)
        return sum(a * e for a, _, e in terms)

    def grad(self, X, h):
        w, terms = self._terms(X, h)
        out = {}
        for (a, d, e), c, aname in zip(terms, self.centers, self.amplitudes):
            accumulate(out, aname, e)
            accumulate(out, self.width, a * e * np.einsum("ij,ij->i", d, d) / (w * w))
            for k, p in enumerate(c):
                accumulate(out, p, 2.0 * a * e * d[:, k] / w)
        return out

    def params(self):
        ps = names(*self.amplitudes, self.width)
        for c in self.centers:
            ps |= names(*c)
        return ps


class MatrixField:
    """Symmetric positive-definite matrix at every point, shape ``(n, d, d)``."""

    def __call__(self, X, h) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> frozenset[str]:
        return frozenset()


def _check_spd(S):
    if not np.all(np.isfinite(S)):
        raise NonSPDField("matrix field produced non-finite entries")
    return S


@dataclass(frozen=True)
class ConstantMatrixField(MatrixField):
    """Sigma(x) = diag(l_k**2) + floor * I, independent of x."""

    lengths: tuple[Param, ...]

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(self.lengths))

    def __call__(self, X, h):
        d = len(self.lengths)
        if X.shape[1] != d:
            raise DimensionMismatch(f"matrix field is {d}-D, points have {X.shape[1]} coordinates")
        S = np.diag([resolve(l, h) ** 2 + SPD_FLOOR for l in self.lengths])
        return _check_spd(np.broadcast_to(S, (X.shape[0], d, d)).copy())

    def params(self):
        return names(*self.lengths)


@dataclass(frozen=True)
class FactorMatrixField(MatrixField):
    """Sigma(x) = L(x) L(x)^T + floor * I from a lower-triangular field factor.

    ``entries`` maps ``(row, col)`` with ``row >= col`` to a scalar field;
    missing entries are zero.
    """

    dim: int
    entries: tuple[tuple[tuple[int, int], ScalarField], ...] = field(default=())

    def __post_init__(self):
        ents = self.entries.items() if isinstance(self.entries, dict) else self.entries
        ents = tuple(((int(i), int(j)), f) for (i, j), f in ents)
        for (i, j), _ in ents:
            if not (0 <= j <= i < self.dim):
                raise ValidationError(f"factor entry ({i}, {j}) is not in the lower triangle")
        object.__setattr__(self, "entries", ents)

    def __call__(self, X, h):
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"matrix field is {self.dim}-D, points have {X.shape[1]} coordinates")
        L = np.zeros((X.shape[0], self.dim, self.dim))
        for (i, j), f in self.entries:
            L[:, i, j] = f(X, h)
        S = L @ np.swapaxes(L, 1, 2) + SPD_FLOOR * np.eye(self.dim)
        return _check_spd(S)

    def params(self):
        ps = frozenset()
        for _, f in self.entries:
            ps |= f.params()
        return ps
