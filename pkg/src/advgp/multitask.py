"""Multi-output regression as single-output regression over inputs x tasks.

Each record (an input location with one value per task) is lifted to T
points ``[x, t_j]`` so any kernel on the product space applies.  Task
coordinates are physical values (e.g. wave numbers), not integer labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, IndexSpace, NoiseModel, as_points, make_dataset
from .engine import FittedState
from .errors import DimensionMismatch, NonFiniteValue, SchemaError, ValidationError
from .kernels.expr import AxisRestrict, Constant, Exponential, Kernel, Matern, Product, Scale, Sum, Warp
from .kernels.fields import ScalarField
from .kernels.metric import AxisLengths, Isotropic
from .kernels.params import Param, accumulate, names, resolve

__all__ = [
    "TaskGrid",
    "MultiTaskDataset",
    "make_multitask",
    "lift",
    "unlift",
    "DriftingBumps",
    "ir_stationary_kernel",
    "ir_nonstationary_kernel",
    "cross_task_covariance",
    "diagonal_deviation",
]


@dataclass(frozen=True, eq=False)
class TaskGrid:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64).ravel()
        if c.shape[0] < 1:
            raise ValidationError("task grid needs at least one task")
        if not np.all(np.isfinite(c)):
            raise NonFiniteValue("task coordinates must be finite")
        if np.any(np.diff(c) <= 0):
            raise ValidationError("task coordinates must be strictly increasing")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __len__(self):
        return self.coords.shape[0]

    def __eq__(self, other):
        return isinstance(other, TaskGrid) and np.array_equal(self.coords, other.coords)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MultiTaskDataset:
    base_space: IndexSpace
    tasks: TaskGrid
    inputs: np.ndarray
    values: np.ndarray
    noise: np.ndarray

    @property
    def n_records(self) -> int:
        return self.inputs.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, MultiTaskDataset)
            and self.base_space == other.base_space
            and self.tasks == other.tasks
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.noise, other.noise)
        )

    __hash__ = None


def make_multitask(base_space: IndexSpace, tasks: TaskGrid, inputs, values, noise) -> MultiTaskDataset:
    """Validated records; ``noise`` is a scalar, a per-task vector or an (N, T) array."""
    X = as_points(inputs, base_space.dim).copy()
    Y = np.array(values, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None, :] if X.shape[0] == 1 else Y[:, None]
    T = len(tasks)
    if Y.shape != (X.shape[0], T):
        raise SchemaError(f"values have shape {Y.shape}, expected ({X.shape[0]}, {T})")
    if not np.all(np.isfinite(Y)):
        raise NonFiniteValue("values must be finite")
    V = np.broadcast_to(np.asarray(noise, dtype=np.float64), Y.shape).copy()
    if not np.all(np.isfinite(V)) or np.any(V <= 0):
        raise ValidationError("per-task noise variances must be positive")
    for a in (X, Y, V):
        a.setflags(write=False)
    return MultiTaskDataset(base_space, tasks, X, Y, V)


def lift(mt: MultiTaskDataset) -> Dataset:
    """Flatten to N*T points [x_i, t_j]; flat index of (i, j) is i*T + j."""
    N, T = mt.values.shape
    X = np.repeat(mt.inputs, T, axis=0)
    t = np.tile(mt.tasks.coords, N)
    space = IndexSpace(mt.base_space.input_dim, 1)
    return make_dataset(space, np.column_stack([X, t]), mt.values.ravel(), NoiseModel.diagonal(mt.noise.ravel()))


def unlift(ds: Dataset, tasks: TaskGrid) -> MultiTaskDataset:
    T = len(tasks)
    if ds.n % T:
        raise SchemaError(f"{ds.n} lifted points do not split into {T} tasks")
    N = ds.n // T
    P = ds.points.reshape(N, T, -1)
    if not np.array_equal(P[:, :, -1], np.broadcast_to(tasks.coords, (N, T))):
        raise SchemaError("task column does not follow the record-major layout")
    inputs = P[:, 0, :-1]
    if not np.array_equal(P[:, :, :-1], np.broadcast_to(inputs[:, None, :], P[:, :, :-1].shape)):
        raise SchemaError("input coordinates vary within a record")
    noise = ds.noise.diag(ds.n).reshape(N, T)
    base = IndexSpace(ds.space.dim - 1)
    return make_multitask(base, tasks, inputs, ds.values.reshape(N, T), noise)


@dataclass(frozen=True)
class DriftingBumps(ScalarField):
    """Sum of Gaussian bumps along the task axis whose centers drift with the input.

    Bump j sits at ``c_j(x) = outer_j * (inner_j * x[0]) + slope_j * x[1]``
    and has value ``exp(-(x[task_axis] - c_j(x))**2 / width)``.  The
    ``outer * inner`` product is redundant but kept so the parameters map
    one to one onto the published form.
    """

    drifts: tuple[tuple[Param, Param, Param], ...]
    width: Param
    input_axes: tuple[int, int] = (0, 1)
    task_axis: int = 2

    def __post_init__(self):
        object.__setattr__(self, "drifts", tuple(tuple(d) for d in self.drifts))
        for d in self.drifts:
            if len(d) != 3:
                raise ValidationError("each drift is (outer, inner, slope)")

    def _parts(self, X, h):
        if X.shape[1] <= max(self.task_axis, *self.input_axes):
            raise DimensionMismatch("points lack the task or input axes of the bump field")
        w = resolve(self.width, h)
        x0, x1 = X[:, self.input_axes[0]], X[:, self.input_axes[1]]
        t = X[:, self.task_axis]
        parts = []
        for a, b, c in self.drifts:
            av, bv, cv = resolve(a, h), resolve(b, h), resolve(c, h)
            u = t - (av * (bv * x0) + cv * x1)
            parts.append((av, bv, u, np.exp(-u * u / w)))
        return w, x0, x1, parts

    def __call__(self, X, h):
        _, _, _, parts = self._parts(X, h)
        return sum(e for *_, e in parts)

    def grad(self, X, h):
        w, x0, x1, parts = self._parts(X, h)
        out = {}
        for (a, b, c), (av, bv, u, e) in zip(self.drifts, parts):
            accumulate(out, self.width, e * u * u / (w * w))
            dc = e * 2.0 * u / w  # d value / d center
            accumulate(out, a, dc * bv * x0)
            accumulate(out, b, dc * av * x0)
            accumulate(out, c, dc * x1)
        return out

    def params(self):
        ps = names(self.width)
        for d in self.drifts:
            ps |= names(*d)
        return ps


def _stationary_part(space_lengths, task_length, nu, input_axes, task_axis) -> Kernel:
    return Product((
        AxisRestrict(tuple(input_axes), Exponential(AxisLengths(tuple(space_lengths)))),
        AxisRestrict((task_axis,), Matern(Isotropic(task_length), nu)),
    ))


def ir_stationary_kernel(
    space_lengths=("l1", "l2"),
    task_length: Param = "l_task",
    nu: float = 1.5,
    variance: Param = "sigma2",
    input_axes=(0, 1),
    task_axis: int = 2,
) -> Kernel:
    """variance * exp(anisotropic input distance) * Matern(task gap)."""
    return Scale(variance, _stationary_part(space_lengths, task_length, nu, input_axes, task_axis))


def ir_nonstationary_kernel(
    phi=tuple(f"phi{i}" for i in range(10)),
    variance: Param = "sigma2",
    nu: float = 1.5,
    input_axes=(0, 1),
    task_axis: int = 2,
) -> Kernel:
    """Stationary product kernel plus a warp term A(x1) A(x2) of drifting bumps.

    ``phi[0:6]`` set the two bump drifts, ``phi[6]`` the bump width,
    ``phi[7:9]`` the input length scales and ``phi[9]`` the task length.
    """
    phi = tuple(phi)
    if len(phi) != 10:
        raise ValidationError("need ten phi parameters")
    bumps = DriftingBumps(((phi[0], phi[1], phi[2]), (phi[3], phi[4], phi[5])), phi[6], tuple(input_axes), task_axis)
    stat = _stationary_part((phi[7], phi[8]), phi[9], nu, input_axes, task_axis)
    return Scale(variance, Sum((stat, Warp(bumps, Constant(1.0)))))


def cross_task_covariance(state: FittedState, x, tasks: TaskGrid) -> np.ndarray:
    """Prior kernel between [x, t_j] and [x, t_k] for all task pairs."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape[0] + 1 != state.dataset.space.dim:
        raise DimensionMismatch(f"input has {x.shape[0]} coordinates, expected {state.dataset.space.dim - 1}")
    T = len(tasks)
    X = np.column_stack([np.broadcast_to(x, (T, x.shape[0])), tasks.coords])
    C = state.kernel.gram(X, X, state.hyperparameters)
    return 0.5 * (C + C.T)


def diagonal_deviation(C: np.ndarray) -> float:
    """Largest within-diagonal range; zero iff C is constant along every diagonal."""
    C = np.asarray(C)
    T = C.shape[0]
    dev = 0.0
    for off in range(-(T - 1), T):
        d = np.diagonal(C, off)
        dev = max(dev, float(d.max() - d.min()))
    return dev
