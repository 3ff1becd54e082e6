"""Domain types: index space, noise models, datasets and hyperparameter vectors.

Points are stored as ``(N, n)`` float64 arrays; a single index point is a
length-``n`` vector.  Every type here is immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    LengthMismatch,
    MissingHyperparameter,
    NoiseShapeMismatch,
    NonFiniteValue,
    ValidationError,
)

__all__ = [
    "IndexSpace",
    "NoiseModel",
    "Dataset",
    "Entry",
    "Hyperparameters",
    "as_points",
    "make_dataset",
    "clamp_and_pack",
    "unpack",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IndexSpace:
    """Product space of ``input_dim`` input axes and ``output_dim`` task axes."""

    input_dim: int
    output_dim: int = 0
    bounds: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if int(self.input_dim) != self.input_dim or self.input_dim < 1:
            raise ValidationError(f"input_dim must be a positive integer, got {self.input_dim}")
        if int(self.output_dim) != self.output_dim or self.output_dim < 0:
            raise ValidationError(f"output_dim must be >= 0, got {self.output_dim}")
        if self.bounds is not None:
            b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if len(b) != self.dim:
                raise DimensionMismatch(f"bounds given for {len(b)} axes, space has {self.dim}")
            for lo, hi in b:
                if not lo < hi:
                    raise ValidationError(f"empty axis interval [{lo}, {hi}]")
            object.__setattr__(self, "bounds", b)

    @property
    def dim(self) -> int:
        return self.input_dim + self.output_dim


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce ``points`` to a finite ``(N, dim)`` float64 array.

    A 1-D input is read as N scalar points when ``dim`` is 1 (or unknown) and
    as a single point otherwise.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x[:, None] if dim in (None, 1) else x[None, :]
    if x.ndim != 2:
        raise DimensionMismatch(f"points must be 2-D, got shape {x.shape}")
    if dim is not None and x.shape[1] != dim:
        raise DimensionMismatch(f"points have {x.shape[1]} coordinates, space has {dim}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("point coordinates must be finite")
    return x


@dataclass(frozen=True)
class NoiseModel:
    """Measurement noise covariance V.

    ``kind`` is one of ``"iid"``, ``"diagonal"``, ``"full"`` or ``"none"``
    (noise-free data; only factorization jitter remains).
    """

    kind: str
    variance: float = 0.0
    variances: np.ndarray | None = None
    matrix_: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "iid":
            if not (math.isfinite(self.variance) and self.variance > 0):
                raise ValidationError("iid noise variance must be positive")
        elif self.kind == "diagonal":
            v = np.asarray(self.variances, dtype=np.float64).ravel().copy()
            if not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise ValidationError("diagonal noise variances must be positive and finite")
            object.__setattr__(self, "variances", _frozen(v))
        elif self.kind == "full":
            m = np.array(self.matrix_, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise NoiseShapeMismatch("full noise matrix must be square")
            if not np.all(np.isfinite(m)):
                raise NonFiniteValue("noise matrix must be finite")
            scale = max(np.abs(m).max(), 1e-300)
            if np.abs(m - m.T).max() > 1e-12 * scale:
                raise ValidationError("full noise matrix must be symmetric")
            tr = np.trace(m)
            if np.linalg.eigvalsh(0.5 * (m + m.T)).min() < -1e-10 * max(tr, 0.0):
                raise ValidationError("full noise matrix must be positive semi-definite")
            object.__setattr__(self, "matrix_", _frozen(m))
        elif self.kind != "none":
            raise ValidationError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def iid(cls, variance: float) -> "NoiseModel":
        return cls("iid", variance=float(variance))

    @classmethod
    def diagonal(cls, variances) -> "NoiseModel":
        return cls("diagonal", variances=variances)

    @classmethod
    def full(cls, matrix) -> "NoiseModel":
        return cls("full", matrix_=matrix)

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls("none")

    def check_size(self, n: int) -> None:
        if self.kind == "diagonal" and self.variances.shape[0] != n:
            raise NoiseShapeMismatch(f"diagonal noise has {self.variances.shape[0]} entries, need {n}")
        if self.kind == "full" and self.matrix_.shape[0] != n:
            raise NoiseShapeMismatch(f"noise matrix is {self.matrix_.shape[0]}x{self.matrix_.shape[0]}, need {n}x{n}")

    def matrix(self, n: int) -> np.ndarray:
        """Dense ``(n, n)`` noise covariance."""
        self.check_size(n)
        if self.kind == "iid":
            return self.variance * np.eye(n)
        if self.kind == "diagonal":
            return np.diag(self.variances)
        if self.kind == "full":
            return np.array(self.matrix_)
        return np.zeros((n, n))

    def diag(self, n: int) -> np.ndarray:
        return np.diag(self.matrix(n)).copy()

    def __eq__(self, other):
        if not isinstance(other, NoiseModel) or other.kind != self.kind:
            return NotImplemented if not isinstance(other, NoiseModel) else False
        if self.kind == "iid":
            return self.variance == other.variance
        if self.kind == "diagonal":
            return np.array_equal(self.variances, other.variances)
        if self.kind == "full":
            return np.array_equal(self.matrix_, other.matrix_)
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    space: IndexSpace
    points: np.ndarray
    values: np.ndarray
    noise: NoiseModel

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.space == other.space
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.values, other.values)
            and self.noise == other.noise
        )

    __hash__ = None


def make_dataset(space: IndexSpace, points, values, noise: NoiseModel) -> Dataset:
    """Validate and freeze a dataset; points keep their input order."""
    x = as_points(points, space.dim)
    y = np.array(values, dtype=np.float64).ravel()
    if x.shape[0] < 1:
        raise ValidationError("dataset needs at least one point")
    if y.shape[0] != x.shape[0]:
        raise LengthMismatch(f"{x.shape[0]} points but {y.shape[0]} values")
    if not np.all(np.isfinite(y)):
        raise NonFiniteValue("values must be finite")
    noise.check_size(x.shape[0])
    return Dataset(space, _frozen(x.copy()), _frozen(y), noise)


@dataclass(frozen=True)
class Entry:
    name: str
    value: float
    low: float
    high: float
    scale: str = "linear"

    def __post_init__(self):
        if self.scale not in ("linear", "log"):
            raise ValidationError(f"{self.name}: scale must be 'linear' or 'log'")
        if not (math.isfinite(self.low) and math.isfinite(self.high)) or self.low > self.high:
            raise ValidationError(f"{self.name}: invalid bounds [{self.low}, {self.high}]")
        if self.scale == "log" and self.low <= 0:
            raise ValidationError(f"{self.name}: log-scale entries need a positive lower bound")
        if not self.low <= self.value <= self.high:
            raise ValidationError(f"{self.name}: value {self.value} outside [{self.low}, {self.high}]")

    @property
    def fixed(self) -> bool:
        return self.low == self.high


class Hyperparameters:
    """Ordered, named, bounded parameter vector."""

    __slots__ = ("_entries", "_index")

    def __init__(self, entries: Iterable[Entry | tuple]):
        es = tuple(e if isinstance(e, Entry) else Entry(*e) for e in entries)
        index = {}
        for i, e in enumerate(es):
            if e.name in index:
                raise ValidationError(f"duplicate hyperparameter name {e.name!r}")
            index[e.name] = i
        self._entries = es
        self._index = index

    @property
    def entries(self) -> tuple[Entry, ...]:
        return self._entries

    @property
    def names(self) -> list[str]:
        return [e.name for e in self._entries]

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self._entries], dtype=np.float64)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, name):
        return name in self._index

    def __getitem__(self, name: str) -> float:
        try:
            return self._entries[self._index[name]].value
        except KeyError:
            raise MissingHyperparameter(name) from None

    def entry(self, name: str) -> Entry:
        try:
            return self._entries[self._index[name]]
        except KeyError:
            raise MissingHyperparameter(name) from None

    def index(self, name: str) -> int:
        return self._index[name]

    def with_values(self, values: Sequence[float] | dict, clamp: bool = True) -> "Hyperparameters":
        if isinstance(values, dict):
            vals = [values.get(e.name, e.value) for e in self._entries]
        else:
            vals = list(values)
            if len(vals) != len(self._entries):
                raise LengthMismatch(f"expected {len(self._entries)} values, got {len(vals)}")
        out = []
        for e, v in zip(self._entries, vals):
            v = float(v)
            if clamp:
                v = min(max(v, e.low), e.high)
            out.append(Entry(e.name, v, e.low, e.high, e.scale))
        return Hyperparameters(out)

    def as_dict(self) -> dict[str, float]:
        return {e.name: e.value for e in self._entries}

    def __eq__(self, other):
        return isinstance(other, Hyperparameters) and self._entries == other._entries

    __hash__ = None

    def __repr__(self):
        inner = ", ".join(f"{e.name}={e.value:.6g}" for e in self._entries)
        return f"Hyperparameters({inner})"


def clamp_and_pack(h: Hyperparameters) -> np.ndarray:
    """Optimizer-space vector: log of log-scale entries, raw value otherwise."""
    out = np.empty(len(h))
    for i, e in enumerate(h.entries):
        v = min(max(e.value, e.low), e.high)
        out[i] = math.log(v) if e.scale == "log" else v
    return out


def unpack(template: Hyperparameters, v) -> Hyperparameters:
    """Inverse of :func:`clamp_and_pack`; out-of-bound values clamp to the bound."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.shape[0] != len(template):
        raise LengthMismatch(f"expected {len(template)} packed values, got {v.shape[0]}")
    vals = []
    for e, z in zip(template.entries, v):
        if not math.isfinite(z):
            raise NonFiniteValue(f"packed value for {e.name} is not finite")
        vals.append(math.exp(z) if e.scale == "log" else z)
    return template.with_values(vals, clamp=True)
