import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma, kv

from advgp.core import Entry, Hyperparameters
from advgp.errors import (
    AxisOutOfRange,
    DimensionMismatch,
    EmptyChildList,
    EmptyTransformList,
    MissingHyperparameter,
    NonPositivePeriod,
    UnsupportedNu,
    ValidationError,
)
from advgp.kernels import (
    Affine,
    AxisRestrict,
    Constant,
    ConstantMatrixField,
    FullMetric,
    GroupAverage,
    Kernel,
    LinearField,
    Product,
    RadialField,
    Scale,
    Sum,
    Warp,
    additive_anisotropic,
    axial_group,
    eval_kernel,
    exponential,
    group_average,
    matern,
    multiplicative_anisotropic,
    paciorek_risser,
    periodic_shift,
    psd_check,
    rotation_group,
    six_fold,
    sqexp,
)
from advgp.kernels.library import library_kernels

from helpers import axial_expansion, periodic_expansion, random_kernel

coords = st.floats(-3.0, 3.0, allow_nan=False)
point2 = st.tuples(coords, coords)


def _pairs(rng, n=100, dim=2, scale=2.0):
    return rng.uniform(-scale, scale, (n, dim)), rng.uniform(-scale, scale, (n, dim))


def _bessel_matern(r, nu):
    """General Matérn profile from the modified Bessel function."""
    r = np.asarray(r, dtype=float)
    z = math.sqrt(2.0 * nu) * r
    with np.errstate(invalid="ignore"):
        out = 2.0 ** (1.0 - nu) / gamma(nu) * z**nu * kv(nu, z)
    return np.where(r > 0, out, 1.0)


class Negative(Kernel):
    """k = -1 everywhere: symmetric but not positive semi-definite."""

    def _k(self, X1, X2, h, paired):
        return -np.ones(X1.shape[0] if paired else (X1.shape[0], X2.shape[0]))


# base kernels -------------------------------------------------------------


def test_sqexp_values():
    assert eval_kernel(sqexp(1.0), [0.3, 0.1], [0.3, 0.1]) == 1.0
    assert eval_kernel(sqexp(1.0), [0.0], [1.0]) == pytest.approx(0.6065306597, abs=1e-10)


def test_exponential_at_zero_distance():
    h = {"s2": 2.0, "l": 0.5}
    k = exponential("l", "s2")
    assert k.eval([0.4, -1.0], [0.4, -1.0], h) == pytest.approx(2.0, abs=1e-15)


def test_matern_closed_forms():
    assert eval_kernel(matern(1.0, 0.5), [0.0], [1.0]) == pytest.approx(0.3678794412, abs=1e-10)
    assert eval_kernel(matern(1.0, 1.5), [0.7], [0.7]) == 1.0
    with pytest.raises(UnsupportedNu):
        matern(1.0, 2.0)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
def test_matern_matches_bessel_form(nu):
    r = np.linspace(0.0, 6.0, 61)
    X1 = np.zeros((r.size, 1))
    X2 = r[:, None] * 0.8
    got = matern(0.8, nu).pair(X1, X2)
    assert np.allclose(got, _bessel_matern(r, nu), rtol=1e-10, atol=1e-14)


def test_matern_half_is_exponential(rng):
    X1, X2 = _pairs(rng)
    a = matern([0.4, 1.3], 0.5).gram(X1, X2)
    b = exponential([0.4, 1.3]).gram(X1, X2)
    assert np.max(np.abs(a - b)) <= 1e-14


def test_missing_hyperparameter():
    with pytest.raises(MissingHyperparameter):
        sqexp("l").eval([0.0], [1.0], {})


def test_eval_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        sqexp(1.0).eval([0.0, 1.0], [1.0])


# combinators ----------------------------------------------------------------


def test_additive_kernel_on_diagonal():
    k = additive_anisotropic([0.5, 0.5])
    assert k.eval([0.3, -0.2], [0.3, -0.2]) == 2.0


def test_sum_and_product_identities(rng):
    X1, X2 = _pairs(rng)
    k = matern([0.6, 1.1], 2.5)
    assert np.array_equal(Product((k, Constant(1.0))).pair(X1, X2), k.pair(X1, X2))
    assert np.array_equal(Sum((k, Constant(0.0))).pair(X1, X2), k.pair(X1, X2))
    assert np.array_equal((k + sqexp(1.0)).pair(X1, X2), k.pair(X1, X2) + sqexp(1.0).pair(X1, X2))


def test_combinator_errors():
    with pytest.raises(EmptyChildList):
        Sum((sqexp(1.0),))
    with pytest.raises(EmptyChildList):
        Product(())
    with pytest.raises(ValidationError):
        Constant(-1.0)


def test_axis_restrict():
    k = AxisRestrict((0,), exponential(0.5))
    assert k.eval([0.0, 5.0], [0.0, 9.0]) == 1.0
    with pytest.raises(AxisOutOfRange):
        AxisRestrict((2,), exponential(0.5)).eval([0.0, 1.0], [1.0, 0.0])


def test_full_axis_restrict_is_identity(rng):
    X1, X2 = _pairs(rng)
    child = sqexp([0.7, 1.4])
    assert np.array_equal(AxisRestrict((0, 1), child).pair(X1, X2), child.pair(X1, X2))


def test_multiplicative_equal_lengths_is_manhattan(rng):
    X1, X2 = _pairs(rng)
    got = multiplicative_anisotropic([0.8, 0.8]).pair(X1, X2)
    want = np.exp(-np.abs(X1 - X2).sum(axis=1) / 0.8)
    assert np.allclose(got, want, rtol=1e-13, atol=0)


def test_full_metric(rng):
    X1, X2 = _pairs(rng)
    assert np.allclose(sqexp(FullMetric(np.eye(2))).pair(X1, X2), sqexp(1.0).pair(X1, X2), rtol=1e-14)
    M = np.array([[2.0, 0.3], [0.3, 0.5]])
    d = X1 - X2
    want = np.exp(-0.5 * np.einsum("ik,kl,il->i", d, M, d))
    assert np.allclose(sqexp(FullMetric(M)).gram(X1, X2).diagonal(), want, rtol=1e-13)
    with pytest.raises(ValidationError):
        FullMetric([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        FullMetric([[1.0, 0.0], [0.0, -1.0]])


# warp ------------------------------------------------------------------------


def test_warp_examples():
    k = Warp(LinearField((1.0,), 0.0), matern(1.0, 0.5))
    for x2 in (-2.0, 0.0, 0.3, 5.0):
        assert k.eval([0.0], [x2]) == 0.0
    assert k.eval([1.0], [1.0]) == matern(1.0, 0.5).eval([1.0], [1.0])
    child = sqexp(1.0)
    radial = Warp(RadialField(1.0, 0.0), child)
    assert radial.eval([0.0, 0.0], [0.0, 0.0]) == pytest.approx(50.0 * child.eval([0.0, 0.0], [0.0, 0.0]), rel=1e-14)


def test_warp_factorization(rng):
    X1, X2 = _pairs(rng)
    f = RadialField(-0.3, 3.0)
    child = matern(0.9, 1.5)
    want = f(X1, {}) * f(X2, {}) * child.pair(X1, X2)
    assert np.allclose(Warp(f, child).pair(X1, X2), want, rtol=1e-14)


# group averages ----------------------------------------------------------------


def test_axial_matches_sixteen_terms(rng):
    child = sqexp([0.6, 1.3])
    k = group_average(axial_group(2), child)
    X1, X2 = _pairs(rng)
    got = k.pair(X1, X2)
    want = np.array([axial_expansion(child, a, b) for a, b in zip(X1, X2)])
    assert np.max(np.abs(got - want)) <= 1e-12


def test_periodic_matches_nine_terms(rng):
    child = matern([0.5, 0.9], 2.5)
    k = periodic_shift(1, 1.3, child)
    X1, X2 = _pairs(rng)
    got = k.pair(X1, X2)
    want = np.array([periodic_expansion(child, a, b, 1, 1.3) for a, b in zip(X1, X2)])
    assert np.max(np.abs(got - want)) <= 1e-12


def test_group_average_degenerate_cases(rng):
    X1, X2 = _pairs(rng)
    child = exponential(0.7)
    ident = GroupAverage((Affine(np.eye(2)),), child)
    assert np.array_equal(ident.pair(X1, X2), child.pair(X1, X2))
    axial = group_average(axial_group(2), child)
    assert axial.eval([0.0, 0.0], [0.0, 0.0]) == child.eval([0.0, 0.0], [0.0, 0.0])
    with pytest.raises(EmptyTransformList):
        GroupAverage((), child)
    with pytest.raises(DimensionMismatch):
        GroupAverage((Affine(np.eye(2)), Affine(np.eye(3))), child)
    with pytest.raises(DimensionMismatch):
        Affine(np.ones((2, 3)))


def test_six_fold_rotation_invariance(rng):
    k = six_fold(sqexp([0.5, 1.2]))
    R = rotation_group(6)[1]
    X1, X2 = _pairs(rng)
    assert np.max(np.abs(k.pair(R(X1), X2) - k.pair(X1, X2))) <= 1e-12
    assert np.max(np.abs(k.pair(X1, R(X2)) - k.pair(X1, X2))) <= 1e-12


def test_rotation_group():
    (g,) = rotation_group(1)
    assert np.array_equal(g.A, np.eye(2)) and not g.b.any()
    g6 = rotation_group(6)
    assert len(g6) == 6
    assert np.allclose(g6[1].A, [[0.5, -math.sqrt(3) / 2], [math.sqrt(3) / 2, 0.5]], atol=1e-15)
    with pytest.raises(ValidationError):
        rotation_group(0)


def test_six_fold_needs_planar_points():
    with pytest.raises(DimensionMismatch):
        six_fold(sqexp(1.0)).eval([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])


def test_six_fold_gram_psd(rng):
    X = rng.uniform(-2, 2, (30, 2))
    assert psd_check(six_fold(sqexp(0.8)), {}, X)


def test_periodic_shift_examples():
    k = periodic_shift(0, 2.0, Constant(0.7))
    assert k.eval([0.3, 0.1], [-1.0, 4.0]) == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(NonPositivePeriod):
        periodic_shift(0, 0.0, sqexp(1.0))
    with pytest.raises(NonPositivePeriod):
        periodic_shift(0, -1.0, sqexp(1.0))


# Paciorek–Risser --------------------------------------------------------------


def test_paciorek_risser_examples(rng):
    k = paciorek_risser(LinearField((0.0,), 1.0), ConstantMatrixField((1.0,)), 0.5)
    assert k.eval([0.0], [1.0]) == pytest.approx(math.exp(-1.0), abs=1e-8)
    assert k.eval([0.4], [0.4]) == pytest.approx(1.0, abs=1e-8)
    k2 = paciorek_risser(LinearField((0.0, 0.0), 1.3), ConstantMatrixField((0.7, 0.7)), 1.5)
    X1, X2 = _pairs(rng, 20)
    t = rng.normal(size=2) * 3
    assert np.allclose(k2.pair(X1 + t, X2 + t), k2.pair(X1, X2), rtol=1e-12)


def test_paciorek_risser_constant_fields_reduce_to_matern(rng):
    s, l = 1.3, 0.7
    k = paciorek_risser(LinearField((0.0, 0.0), s), ConstantMatrixField((l, l)), 2.5)
    X1, X2 = _pairs(rng, 30)
    want = s**4 / l**2 * matern(l, 2.5).gram(X1, X2)
    assert np.allclose(k.gram(X1, X2), want, rtol=1e-7)


def test_paciorek_risser_amplitude_enters_squared():
    base = paciorek_risser(LinearField((0.0,), 1.0), ConstantMatrixField((1.0,)), 1.5)
    doubled = paciorek_risser(LinearField((0.0,), 2.0), ConstantMatrixField((1.0,)), 1.5)
    assert doubled.eval([0.1], [0.9]) == pytest.approx(16.0 * base.eval([0.1], [0.9]), rel=1e-12)


# PSD ------------------------------------------------------------------------------


def test_psd_check_examples(rng):
    assert psd_check(sqexp(0.5), {}, rng.uniform(-2, 2, (50, 2)))
    x = rng.uniform(-2, 2, (50, 1))
    assert psd_check(Warp(LinearField((1.0,), 0.0), matern(0.5, 1.5)), {}, x)
    rep = psd_check(Negative(), {}, x)
    assert not rep and rep.min_eig < 0
    with pytest.raises(ValidationError):
        psd_check(sqexp(1.0), {}, x[:1])


@pytest.mark.parametrize("name", sorted(library_kernels()))
def test_library_kernels_psd(name, rng):
    k = library_kernels()[name]
    assert psd_check(k, {}, rng.uniform(-2, 2, (30, 2)))


@pytest.mark.parametrize("seed", range(50))
def test_random_compositions_psd(seed):
    rng = np.random.default_rng(seed)
    dim = 1 + seed % 3
    k = random_kernel(rng, 4, dim)
    rep = psd_check(k, {}, rng.uniform(-2, 2, (30, dim)))
    assert rep, (seed, rep)


# properties ------------------------------------------------------------------------


@given(st.integers(0, 2**32 - 1), point2, point2)
def test_symmetry(seed, a, b):
    k = random_kernel(np.random.default_rng(seed), 4, 2)
    ab = k.eval(a, b)
    ba = k.eval(b, a)
    tol = 0.0 if k.stationary else 1e-12 * max(1.0, abs(ab))
    assert abs(ab - ba) <= max(tol, 1e-12 * max(1.0, abs(ab)))


@given(st.integers(0, 2**32 - 1), point2, point2, point2)
def test_stationary_nodes_are_translation_invariant(seed, a, b, t):
    k = random_kernel(np.random.default_rng(seed), 3, 2)
    if not k.stationary:
        return
    a, b, t = map(np.array, (a, b, t))
    assert abs(k.eval(a + t, b + t) - k.eval(a, b)) <= 1e-12 * max(1.0, abs(k.eval(a, b)))


@given(st.integers(0, 2**32 - 1), point2)
def test_base_kernels_at_zero_distance_equal_variance(seed, x):
    rng = np.random.default_rng(seed)
    s2 = float(rng.uniform(0.1, 5.0))
    l = float(rng.uniform(0.1, 3.0))
    for k in (sqexp(l, s2), exponential(l, s2), matern(l, 1.5, s2), matern(l, 2.5, s2)):
        assert k.eval(x, x) == pytest.approx(s2, rel=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_rkhs_reproducing_property(seed):
    rng = np.random.default_rng(seed)
    k = random_kernel(rng, 3, 2)
    X = rng.uniform(-2, 2, (6, 2))
    alpha = rng.normal(size=6)
    x0 = rng.uniform(-2, 2, (1, 2))
    # <k(x0, .), f> with f = sum_i alpha_i k(x_i, .), via the span Gram matrix
    Z = np.vstack([x0, X])
    G = k.gram(Z)
    beta = np.concatenate([[1.0], np.zeros(6)])
    gamma_ = np.concatenate([[0.0], alpha])
    inner = beta @ G @ gamma_
    f_x0 = float(k.gram(X, x0)[:, 0] @ alpha)
    assert inner == pytest.approx(f_x0, rel=1e-12, abs=1e-12)


def test_stationarity_flags():
    assert sqexp(1.0).stationary
    assert group_average(axial_group(2), sqexp(1.0)).stationary is False
    # translations commute with a stationary child
    assert periodic_shift(0, 1.0, sqexp(1.0)).stationary is True
    assert Warp(LinearField((1.0,), 0.0), sqexp(1.0)).stationary is False


# gradients -------------------------------------------------------------------------


def _fd_gram(k, X, h, name, eps=1e-6):
    up = h.with_values({name: h[name] + eps})
    dn = h.with_values({name: h[name] - eps})
    return (k.gram(X, X, up) - k.gram(X, X, dn)) / (2 * eps)


GRAD_KERNELS = {
    "sqexp": lambda: sqexp(["l1", "l2"], "s2"),
    "matern32": lambda: matern("l1", 1.5, "s2"),
    "matern52": lambda: matern(["l1", "l2"], 2.5),
    "sum": lambda: Sum((sqexp("l1"), exponential("l2", "s2"))),
    "product": lambda: Product((sqexp("l1"), matern("l2", 1.5))) * "s2",
    "warp": lambda: Warp(LinearField(("w", 0.5), "b"), matern("l1", 2.5)),
    "radial": lambda: Warp(RadialField("w", "b", 3.0), sqexp("l1")),
    "axial": lambda: group_average(axial_group(2), sqexp(["l1", "l2"], "s2")),
    "constant": lambda: Constant("s2") + sqexp("l1"),
}


@pytest.mark.parametrize("name", sorted(GRAD_KERNELS))
def test_gram_grad_matches_finite_differences(name, rng):
    k = GRAD_KERNELS[name]()
    h = Hyperparameters([
        Entry("l1", 0.7, 0.01, 10.0), Entry("l2", 1.3, 0.01, 10.0), Entry("s2", 1.7, 0.01, 10.0),
        Entry("w", 0.4, -5.0, 5.0), Entry("b", 0.9, -5.0, 5.0),
    ])
    X = rng.uniform(-2, 2, (8, 2))
    grads = k.gram_grad(X, None, h)
    assert set(grads) == set(k.params())
    for p, g in grads.items():
        fd = _fd_gram(k, X, h, p)
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-8), p


def test_params_collected():
    k = Sum((sqexp("a", "s"), Warp(LinearField(("w",), "b"), exponential(["c"]))))
    assert k.params() == {"a", "s", "w", "b", "c"}
    assert Scale(2.0, Constant(1.0)).params() == frozenset()
