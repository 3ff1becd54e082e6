import itertools

import numpy as np
import pytest

from advgp.core import Entry, Hyperparameters, IndexSpace, NoiseModel, make_dataset
from advgp.engine import PriorMean, fit, posterior
from advgp.errors import DimensionMismatch, SchemaError, ValidationError
from advgp.kernels import psd_check
from advgp.kernels.expr import AxisRestrict, Exponential, Matern, Product
from advgp.kernels.metric import AxisLengths, Isotropic
from advgp.multitask import (
    TaskGrid,
    cross_task_covariance,
    diagonal_deviation,
    ir_nonstationary_kernel,
    ir_stationary_kernel,
    lift,
    make_multitask,
    unlift,
)


def _mt(rng, n, T, dim=2):
    grid = TaskGrid(np.sort(rng.uniform(0, 10, T)) + np.arange(T))
    return make_multitask(IndexSpace(dim), grid, rng.uniform(1, 2, (n, dim)), rng.normal(size=(n, T)), rng.uniform(0.01, 0.1, (n, T)))


def _stat_h(**over):
    vals = {"sigma2": 1.5, "l1": 0.4, "l2": 0.6, "l_task": 1.2}
    vals.update(over)
    return {k: float(v) for k, v in vals.items()}


def _nonstat_h(rng=None, **over):
    vals = {"sigma2": 1.0, "phi0": 1.0, "phi1": 1.0, "phi2": 0.5, "phi3": 1.0, "phi4": 2.0, "phi5": 2.0,
            "phi6": 1.0, "phi7": 0.5, "phi8": 0.7, "phi9": 1.5}
    if rng is not None:
        for i in (0, 1, 3, 4):
            vals[f"phi{i}"] = float(rng.uniform(0.1, 3))
        for i in (2, 5):
            vals[f"phi{i}"] = float(rng.uniform(-3, 3))
        for i in range(6, 10):
            vals[f"phi{i}"] = float(rng.uniform(0.2, 5))
        vals["sigma2"] = float(rng.uniform(0.2, 3))
    vals.update(over)
    return vals


def _lifted_points(rng, n, T):
    return lift(_mt(rng, n, T)).points


def test_task_grid_validation():
    with pytest.raises(ValidationError):
        TaskGrid([])
    with pytest.raises(ValidationError):
        TaskGrid([1.0, 1.0])
    with pytest.raises(ValidationError):
        TaskGrid([2.0, 1.0])


def test_lift_round_trip(rng):
    mt = _mt(rng, 2, 3)
    ds = lift(mt)
    assert ds.n == 6 and ds.space.dim == 3
    assert unlift(ds, mt.tasks) == mt


def test_lift_single_task(rng):
    mt = _mt(rng, 5, 1)
    ds = lift(mt)
    assert np.array_equal(ds.points[:, :2], mt.inputs)
    assert np.all(ds.points[:, 2] == mt.tasks.coords[0])
    assert np.array_equal(ds.values, mt.values[:, 0])


def test_lift_is_record_major(rng):
    for N, T in itertools.product(range(1, 5), range(1, 5)):
        mt = _mt(rng, N, T)
        ds = lift(mt)
        for i, j in itertools.product(range(N), range(T)):
            f = i * T + j
            assert np.array_equal(ds.points[f, :2], mt.inputs[i])
            assert ds.points[f, 2] == mt.tasks.coords[j]
            assert ds.values[f] == mt.values[i, j]
            assert ds.noise.diag(ds.n)[f] == mt.noise[i, j]


def test_make_multitask_errors(rng):
    grid = TaskGrid([1.0, 2.0, 3.0])
    with pytest.raises(SchemaError):
        make_multitask(IndexSpace(2), grid, rng.uniform(size=(3, 2)), rng.normal(size=(3, 4)), 0.1)
    with pytest.raises(ValidationError):
        make_multitask(IndexSpace(2), grid, rng.uniform(size=(3, 2)), rng.normal(size=(3, 3)), 0.0)
    ds = make_dataset(IndexSpace(2, 1), rng.uniform(size=(5, 3)), rng.normal(size=5), NoiseModel.iid(0.1))
    with pytest.raises(SchemaError):
        unlift(ds, grid)


# IR kernels -----------------------------------------------------------------


def test_ir_stationary_values():
    k = ir_stationary_kernel()
    h = _stat_h()
    x = [1.2, 1.7, 3.0]
    assert k.eval(x, x, h) == pytest.approx(1.5, rel=1e-15)
    gap = 0.8
    y = [1.2, 1.7, 3.0 + gap]
    r = np.sqrt(3.0) * gap / 1.2
    want = 1.5 * (1 + r) * np.exp(-r)
    assert k.eval(x, y, h) == pytest.approx(want, rel=1e-13)


def test_ir_stationary_psd(rng):
    assert psd_check(ir_stationary_kernel(), _stat_h(), _lifted_points(rng, 3, 5))


def test_ir_nonstationary_pinned_bumps(rng):
    k = ir_nonstationary_kernel()
    stat = ir_stationary_kernel(("phi7", "phi8"), "phi9")
    h = _nonstat_h(phi0=0.0, phi3=0.0, phi2=0.0, phi5=0.0, phi6=1.7)
    for _ in range(5):
        x = np.append(rng.uniform(1, 2, 2), rng.uniform(-3, 3))
        bump = k.eval(x, x, h) - stat.eval(x, x, h)
        assert bump == pytest.approx((2 * np.exp(-x[2] ** 2 / 1.7)) ** 2, rel=1e-12, abs=1e-15)


def test_ir_nonstationary_tail(rng):
    k = ir_nonstationary_kernel()
    stat = ir_stationary_kernel(("phi7", "phi8"), "phi9")
    h = _nonstat_h(phi6=0.3)
    X = rng.uniform(1, 2, (10, 2))
    # bump centers are at most phi0 phi1 x1 + |phi2| x2 <= 3 + 2 + 4 = 9 here
    far = 9 + 10 * np.sqrt(0.3)
    P = np.column_stack([X, np.full(10, far + 1.0)])
    diff = k.gram(P, P, h) - stat.gram(P, P, h)
    assert np.max(np.abs(diff)) <= 1e-20


def test_ir_nonstationary_psd(rng):
    assert psd_check(ir_nonstationary_kernel(), _nonstat_h(), _lifted_points(rng, 4, 8))
    for _ in range(20):
        h = _nonstat_h(rng)
        assert psd_check(ir_nonstationary_kernel(), h, _lifted_points(rng, 10, 5))


def test_ir_nonstationary_needs_ten_parameters():
    with pytest.raises(ValidationError):
        ir_nonstationary_kernel(("a", "b"))


# cross-task covariance ---------------------------------------------------------


def _state(kernel, h, rng, T=12):
    mt = _mt(rng, 4, T)
    return fit(lift(mt), kernel, PriorMean.zero(), h), TaskGrid(np.linspace(0, 10, T))


def test_cross_task_stationary_is_toeplitz(rng):
    state, grid = _state(ir_stationary_kernel(), _stat_h(), rng)
    C = cross_task_covariance(state, [1.5, 1.5], grid)
    assert np.array_equal(C, C.T)
    assert diagonal_deviation(C) <= 1e-12


def test_cross_task_nonstationary_is_not_toeplitz(rng):
    state, grid = _state(ir_nonstationary_kernel(), _nonstat_h(), rng)
    C = cross_task_covariance(state, [1.5, 1.5], grid)
    assert diagonal_deviation(C) > 1e-3


def test_cross_task_single_task(rng):
    h = _stat_h()
    state, _ = _state(ir_stationary_kernel(), h, rng)
    C = cross_task_covariance(state, [1.2, 1.9], TaskGrid([4.0]))
    assert C.shape == (1, 1)
    assert C[0, 0] == pytest.approx(ir_stationary_kernel().eval([1.2, 1.9, 4.0], [1.2, 1.9, 4.0], h), rel=1e-15)
    with pytest.raises(DimensionMismatch):
        cross_task_covariance(state, [1.0, 1.0, 1.0], TaskGrid([4.0]))


def test_diagonal_deviation():
    assert diagonal_deviation(np.array([[1.0, 2.0], [3.0, 1.0]])) == 0.0
    assert diagonal_deviation(np.array([[1.0, 2.0], [2.0, 1.5]])) == 0.5


# lifting fidelity ---------------------------------------------------------------


def test_lifting_matches_independent_tasks(rng):
    """With a vanishing task length the lifted GP splits into per-task GPs."""
    T, N = 3, 6
    mt = _mt(rng, N, T)
    space_k = Exponential(AxisLengths((0.5, 0.8)))
    task_k = Matern(Isotropic(1e-3), 0.5)
    k = Product((AxisRestrict((0, 1), space_k), AxisRestrict((2,), task_k)))
    ds = lift(mt)
    K = k.gram(ds.points)
    same = ds.points[:, 2][:, None] == ds.points[:, 2][None, :]
    assert np.max(np.abs(K[~same])) <= 1e-12
    lifted = fit(ds, k, PriorMean.zero(), {})
    Q = rng.uniform(1, 2, (5, 2))
    for j, t in enumerate(mt.tasks.coords):
        single = make_dataset(IndexSpace(2), mt.inputs, mt.values[:, j], NoiseModel.diagonal(mt.noise[:, j]))
        want = posterior(fit(single, space_k, PriorMean.zero(), {}), Q)
        got = posterior(lifted, np.column_stack([Q, np.full(5, t)]))
        assert np.allclose(got.mean, want.mean, atol=1e-10)
        assert np.allclose(got.variance, want.variance, atol=1e-10)


def test_ir_kernels_in_training_template():
    h = Hyperparameters([Entry(f"phi{i}", 1.0, 0.1, 3.0) for i in range(10)] + [Entry("sigma2", 1.0, 0.1, 3.0)])
    k = ir_nonstationary_kernel()
    assert k.params() == set(h.names)
