"""Kernel expression tree.

Every node is an immutable dataclass.  Hyperparameter values are never
stored in the tree: they arrive as a mapping at each call, so one expression
serves every optimizer iterate.

Nodes implement ``_k(X1, X2, h, paired)`` (full Gram block, or row-wise
values when ``paired``) and ``_dk`` returning ``{name: dK/dname}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .. import _backend
from .._pykernels import MATERN12, MATERN32, MATERN52, SQEXP
from ..core import as_points
from ..errors import (
    AxisOutOfRange,
    DimensionMismatch,
    EmptyChildList,
    EmptyTransformList,
    UnsupportedNu,
    ValidationError,
)
from .fields import MatrixField, ScalarField
from .metric import Isotropic, Metric
from .params import Override, Param, accumulate, names, resolve

__all__ = [
    "Kernel",
    "SqExp",
    "Exponential",
    "Matern",
    "Constant",
    "Sum",
    "Product",
    "Scale",
    "AxisRestrict",
    "Warp",
    "Affine",
    "GroupAverage",
    "PaciorekRisser",
    "FD_STEP",
]

FD_STEP = 1e-6

_NU_CODES = {0.5: MATERN12, 1.5: MATERN32, 2.5: MATERN52}


def nu_code(nu) -> int:
    try:
        return _NU_CODES[float(nu)]
    except (KeyError, TypeError, ValueError):
        raise UnsupportedNu(f"nu must be one of 1/2, 3/2, 5/2, got {nu!r}") from None


def _dprofile_dsq(r, code):
    """d profile / d(r**2); finite everywhere except Matérn-1/2 at r = 0."""
    if code == SQEXP:
        return -0.5 * np.exp(-0.5 * r * r)
    if code == MATERN12:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.exp(-r) / (2.0 * r)
        # r = 0 only where d(r**2)/dtheta = 0 as well; the product's limit is 0
        return np.where(r > 0, out, 0.0)
    if code == MATERN32:
        return -1.5 * np.exp(-np.sqrt(3.0) * r)
    return -(5.0 / 6.0) * (1.0 + np.sqrt(5.0) * r) * np.exp(-np.sqrt(5.0) * r)


class Kernel:
    """Base class: a symmetric positive semi-definite function on the index set."""

    stationary = True

    # public surface -----------------------------------------------------

    def gram(self, X1, X2=None, h=None) -> np.ndarray:
        X1 = as_points(X1)
        X2 = X1 if X2 is None else as_points(X2, X1.shape[1])
        return self._k(X1, X2, {} if h is None else h, False)

    def pair(self, X1, X2, h=None) -> np.ndarray:
        """k(X1[i], X2[i]) for each row i."""
        X1 = as_points(X1)
        X2 = as_points(X2, X1.shape[1])
        if X1.shape[0] != X2.shape[0]:
            raise DimensionMismatch("paired evaluation needs equal row counts")
        return self._k(X1, X2, {} if h is None else h, True)

    def diag(self, X, h=None) -> np.ndarray:
        X = as_points(X)
        return self._k(X, X, {} if h is None else h, True)

    def eval(self, x1, x2, h=None) -> float:
        x1 = np.atleast_1d(np.asarray(x1, dtype=np.float64))
        x2 = np.atleast_1d(np.asarray(x2, dtype=np.float64))
        if x1.shape != x2.shape:
            raise DimensionMismatch(f"points have {x1.shape[0]} and {x2.shape[0]} coordinates")
        return float(self.pair(x1[None, :], x2[None, :], h)[0])

    def gram_grad(self, X1, X2=None, h=None) -> dict[str, np.ndarray]:
        X1 = as_points(X1)
        X2 = X1 if X2 is None else as_points(X2, X1.shape[1])
        return self._dk(X1, X2, {} if h is None else h, False)

    def params(self) -> frozenset[str]:
        return frozenset()

    # algebra --------------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Kernel):
            return Sum((self, other))
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Kernel):
            return Product((self, other))
        if isinstance(other, (int, float, str)):
            return Scale(other, self)
        return NotImplemented

    __rmul__ = __mul__

    # node implementation --------------------------------------------------

    def _k(self, X1, X2, h, paired):
        raise NotImplementedError

    def _dk(self, X1, X2, h, paired):
        return _fd_grad(self, X1, X2, h, paired)


def _fd_grad(kernel, X1, X2, h, paired):
    """Central finite differences, log-space for log-scale entries."""
    out = {}
    for name in sorted(kernel.params()):
        v = resolve(name, h)
        log_scale = hasattr(h, "entry") and h.entry(name).scale == "log" and v > 0
        if log_scale:
            up, dn = v * np.exp(FD_STEP), v * np.exp(-FD_STEP)
        else:
            step = FD_STEP * max(abs(v), 1.0)
            up, dn = v + step, v - step
        kp = kernel._k(X1, X2, Override(h, name, up), paired)
        km = kernel._k(X1, X2, Override(h, name, dn), paired)
        out[name] = (kp - km) / (up - dn)
    return out


@dataclass(frozen=True)
class _Radial(Kernel):
    metric: Metric = Isotropic(1.0)

    code = SQEXP

    def _k(self, X1, X2, h, paired):
        r = np.sqrt(self.metric.sqdist(X1, X2, h, paired))
        return _backend.ops.profile(r, self.code)

    def _dk(self, X1, X2, h, paired):
        dsq = self.metric.sqdist_grad(X1, X2, h, paired)
        if not dsq:
            return {}
        r = np.sqrt(self.metric.sqdist(X1, X2, h, paired))
        g = _dprofile_dsq(r, self.code)
        return {name: g * d for name, d in dsq.items()}

    def params(self):
        return self.metric.params()


@dataclass(frozen=True)
class SqExp(_Radial):
    """exp(-r**2 / 2)."""

    code = SQEXP


@dataclass(frozen=True)
class Exponential(_Radial):
    """exp(-r)."""

    code = MATERN12


@dataclass(frozen=True)
class Matern(_Radial):
    """Half-integer Matérn profile, nu in {1/2, 3/2, 5/2}."""

    nu: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "nu", float(self.nu) if isinstance(self.nu, (int, float)) else self.nu)
        nu_code(self.nu)

    @property
    def code(self):
        return nu_code(self.nu)


@dataclass(frozen=True)
class Constant(Kernel):
    value: Param = 1.0

    def __post_init__(self):
        if not isinstance(self.value, str) and not self.value >= 0:
            raise ValidationError("constant kernel value must be non-negative")

    def _shape(self, X1, X2, paired):
        return (X1.shape[0],) if paired else (X1.shape[0], X2.shape[0])

    def _k(self, X1, X2, h, paired):
        return np.full(self._shape(X1, X2, paired), resolve(self.value, h))

    def _dk(self, X1, X2, h, paired):
        out = {}
        accumulate(out, self.value, np.ones(self._shape(X1, X2, paired)))
        return out

    def params(self):
        return names(self.value)


def _children(children):
    ch = tuple(children)
    if len(ch) < 2:
        raise EmptyChildList(f"combinator needs at least two children, got {len(ch)}")
    for c in ch:
        if not isinstance(c, Kernel):
            raise ValidationError(f"child {c!r} is not a kernel")
    return ch


@dataclass(frozen=True)
class Sum(Kernel):
    children: tuple[Kernel, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _children(self.children))

    @property
    def stationary(self):
        return all(c.stationary for c in self.children)

    def _k(self, X1, X2, h, paired):
        return reduce(np.add, (c._k(X1, X2, h, paired) for c in self.children))

    def _dk(self, X1, X2, h, paired):
        out = {}
        for c in self.children:
            for name, d in c._dk(X1, X2, h, paired).items():
                accumulate(out, name, d)
        return out

    def params(self):
        return frozenset().union(*(c.params() for c in self.children))


@dataclass(frozen=True)
class Product(Kernel):
    children: tuple[Kernel, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _children(self.children))

    @property
    def stationary(self):
        return all(c.stationary for c in self.children)

    def _k(self, X1, X2, h, paired):
        return reduce(np.multiply, (c._k(X1, X2, h, paired) for c in self.children))

    def _dk(self, X1, X2, h, paired):
        vals = [c._k(X1, X2, h, paired) for c in self.children]
        out = {}
        for i, c in enumerate(self.children):
            grads = c._dk(X1, X2, h, paired)
            if not grads:
                continue
            others = reduce(np.multiply, (v for j, v in enumerate(vals) if j != i))
            for name, d in grads.items():
                accumulate(out, name, d * others)
        return out

    def params(self):
        return frozenset().union(*(c.params() for c in self.children))


@dataclass(frozen=True)
class Scale(Kernel):
    """Signal variance times a child kernel."""

    variance: Param
    child: Kernel

    def __post_init__(self):
        if not isinstance(self.variance, str) and not self.variance >= 0:
            raise ValidationError("signal variance must be non-negative")

    @property
    def stationary(self):
        return self.child.stationary

    def _k(self, X1, X2, h, paired):
        return resolve(self.variance, h) * self.child._k(X1, X2, h, paired)

    def _dk(self, X1, X2, h, paired):
        s = resolve(self.variance, h)
        out = {name: s * d for name, d in self.child._dk(X1, X2, h, paired).items()}
        if isinstance(self.variance, str):
            accumulate(out, self.variance, self.child._k(X1, X2, h, paired))
        return out

    def params(self):
        return names(self.variance) | self.child.params()


@dataclass(frozen=True)
class AxisRestrict(Kernel):
    """Child evaluated on a subset of coordinates (0-based axis indices)."""

    axes: tuple[int, ...]
    child: Kernel

    def __post_init__(self):
        axes = tuple(int(a) for a in self.axes)
        if not axes:
            raise ValidationError("axis subset must be non-empty")
        if min(axes) < 0:
            raise AxisOutOfRange(f"negative axis in {axes}")
        object.__setattr__(self, "axes", axes)

    @property
    def stationary(self):
        return self.child.stationary

    def _sub(self, X):
        if max(self.axes) >= X.shape[1]:
            raise AxisOutOfRange(f"axes {self.axes} out of range for {X.shape[1]}-D points")
        return X[:, list(self.axes)]

    def _k(self, X1, X2, h, paired):
        return self.child._k(self._sub(X1), self._sub(X2), h, paired)

    def _dk(self, X1, X2, h, paired):
        return self.child._dk(self._sub(X1), self._sub(X2), h, paired)

    def params(self):
        return self.child.params()


@dataclass(frozen=True)
class Warp(Kernel):
    """f(x1) f(x2) k(x1, x2); PSD for any real-valued f."""

    field: ScalarField
    child: Kernel

    stationary = False

    def _outer(self, a, b, paired):
        return a * b if paired else np.outer(a, b)

    def _k(self, X1, X2, h, paired):
        f1, f2 = self.field(X1, h), self.field(X2, h)
        return self._outer(f1, f2, paired) * self.child._k(X1, X2, h, paired)

    def _dk(self, X1, X2, h, paired):
        f1, f2 = self.field(X1, h), self.field(X2, h)
        ff = self._outer(f1, f2, paired)
        out = {name: ff * d for name, d in self.child._dk(X1, X2, h, paired).items()}
        g1, g2 = self.field.grad(X1, h), self.field.grad(X2, h)
        if g1:
            kv = self.child._k(X1, X2, h, paired)
            for name in g1:
                dff = self._outer(g1[name], f2, paired) + self._outer(f1, g2[name], paired)
                accumulate(out, name, dff * kv)
        return out

    def params(self):
        return self.field.params() | self.child.params()


@dataclass(frozen=True, eq=False)
class Affine:
    """x -> A x + b."""

    A: np.ndarray
    b: np.ndarray | None = None

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch("affine map must be square (dimension preserving)")
        b = np.zeros(A.shape[0]) if self.b is None else np.array(self.b, dtype=np.float64).ravel()
        if b.shape[0] != A.shape[0]:
            raise DimensionMismatch("affine offset does not match matrix size")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.A.shape[0]

    @property
    def is_translation(self):
        return np.array_equal(self.A, np.eye(self.dim))

    def __call__(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise DimensionMismatch(f"{self.dim}-D map applied to {X.shape[-1]}-D points")
        return X @ self.A.T + self.b

    def __eq__(self, other):
        return isinstance(other, Affine) and np.array_equal(self.A, other.A) and np.array_equal(self.b, other.b)

    __hash__ = object.__hash__


@dataclass(frozen=True)
class GroupAverage(Kernel):
    """(1/|G|**2) sum_g sum_h k(g x1, h x2) over a list of affine maps."""

    transforms: tuple[Affine, ...]
    child: Kernel

    def __post_init__(self):
        ts = tuple(t if isinstance(t, Affine) else Affine(t) for t in self.transforms)
        if not ts:
            raise EmptyTransformList("group average needs at least one transform")
        if len({t.dim for t in ts}) != 1:
            raise DimensionMismatch("transforms act on different dimensions")
        object.__setattr__(self, "transforms", ts)

    @property
    def stationary(self):
        return self.child.stationary and all(t.is_translation for t in self.transforms)

    def _images(self, X):
        return [t(X) for t in self.transforms]

    def _k(self, X1, X2, h, paired):
        im1, im2 = self._images(X1), self._images(X2)
        total = None
        for a in im1:
            for b in im2:
                v = self.child._k(a, b, h, paired)
                total = v if total is None else total + v
        return total / len(self.transforms) ** 2

    def _dk(self, X1, X2, h, paired):
        im1, im2 = self._images(X1), self._images(X2)
        out = {}
        for a in im1:
            for b in im2:
                for name, d in self.child._dk(a, b, h, paired).items():
                    accumulate(out, name, d)
        n2 = len(self.transforms) ** 2
        return {name: d / n2 for name, d in out.items()}

    def params(self):
        return self.child.params()


@dataclass(frozen=True)
class PaciorekRisser(Kernel):
    """Location-dependent Matérn kernel.

    k(x1, x2) = s(x1)^2 s(x2)^2 / sqrt(|S|) * M(sqrt(Q)), with
    S = (Sigma(x1) + Sigma(x2)) / 2 and Q = (x1 - x2)^T S^-1 (x1 - x2).
    The amplitude field enters squared.  Gradients use finite differences.
    """

    amplitude: ScalarField
    covariance: MatrixField
    nu: float = 0.5

    stationary = False

    def __post_init__(self):
        nu_code(self.nu)

    def _k(self, X1, X2, h, paired):
        code = nu_code(self.nu)
        a1 = self.amplitude(X1, h) ** 2
        a2 = self.amplitude(X2, h) ** 2
        S1, S2 = self.covariance(X1, h), self.covariance(X2, h)
        if not paired:
            return _backend.ops.paciorek_gram(X1, X2, S1, S2, a1, a2, code)
        return np.array([
            _backend.ops.paciorek_gram(X1[i:i + 1], X2[i:i + 1], S1[i:i + 1], S2[i:i + 1], a1[i:i + 1], a2[i:i + 1], code)[0, 0]
            for i in range(X1.shape[0])
        ])

    def params(self):
        return self.amplitude.params() | self.covariance.params()
