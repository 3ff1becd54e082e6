"""Shared test utilities: random kernel compositions and brute-force oracles."""

import numpy as np

from advgp.kernels import (
    AxisRestrict,
    Constant,
    LinearField,
    Product,
    RadialField,
    Scale,
    Sum,
    Warp,
    axial_group,
    exponential,
    group_average,
    matern,
    periodic_shift,
    six_fold,
    sqexp,
)


def random_leaf(rng, dim):
    kind = rng.integers(4)
    if rng.random() < 0.5:
        length = float(rng.uniform(0.3, 2.0))
    else:
        length = [float(v) for v in rng.uniform(0.3, 2.0, dim)]
    if kind == 0:
        return sqexp(length)
    if kind == 1:
        return exponential(length)
    if kind == 2:
        return matern(length, float(rng.choice([0.5, 1.5, 2.5])))
    return Constant(float(rng.uniform(0.1, 2.0)))


def random_kernel(rng, depth=4, dim=2):
    """Random expression of depth <= ``depth`` over a ``dim``-dimensional space."""
    if depth <= 1 or rng.random() < 0.25:
        return random_leaf(rng, dim)
    op = rng.integers(6)
    sub = lambda d=dim: random_kernel(rng, depth - 1, d)
    if op == 0:
        return Sum(tuple(sub() for _ in range(int(rng.integers(2, 4)))))
    if op == 1:
        return Product(tuple(sub() for _ in range(2)))
    if op == 2:
        return Scale(float(rng.uniform(0.2, 3.0)), sub())
    if op == 3:
        if dim == 2 and rng.random() < 0.5:
            field = RadialField(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)), 3.0)
        else:
            field = LinearField(tuple(float(v) for v in rng.normal(size=dim)), float(rng.normal()))
        return Warp(field, sub())
    if op == 4:
        g = rng.integers(3)
        if g == 0:
            return group_average(axial_group(dim), sub())
        if g == 1 and dim == 2:
            return six_fold(sub())
        return periodic_shift(int(rng.integers(dim)), float(rng.uniform(0.5, 2.0)), sub(), dim)
    k = int(rng.integers(1, dim + 1))
    axes = tuple(sorted(int(a) for a in rng.choice(dim, size=k, replace=False)))
    return AxisRestrict(axes, sub(len(axes)))


def condition_dense(K_all, y, n, mu=0.0):
    """Posterior mean/variance by explicit inversion of the joint Gaussian.

    ``K_all`` is the joint covariance of [train; query] with noise already on
    the training block; the first ``n`` rows are training points.
    """
    A = K_all[:n, :n]
    B = K_all[:n, n:]
    C = K_all[n:, n:]
    Ainv = np.linalg.inv(A)
    mean = mu + B.T @ Ainv @ (y - mu)
    cov = C - B.T @ Ainv @ B
    return mean, np.diag(cov)


def fd_gradient(f, h, rel_step=1e-6):
    """Central differences of ``f(h)`` in each entry's natural coordinate."""
    out = np.zeros(len(h))
    for i, e in enumerate(h.entries):
        step = rel_step * max(abs(e.value), 1.0)
        up = h.with_values({e.name: e.value + step}, clamp=False)
        dn = h.with_values({e.name: e.value - step}, clamp=False)
        out[i] = (f(up) - f(dn)) / (2 * step)
    return out


def gradient_rel_error(analytic, fd, floor=1e-3):
    """Per-component relative error, with ``floor`` guarding near-zero components."""
    return np.abs(analytic - fd) / np.maximum(np.abs(fd), floor)


def axial_expansion(child, x1, x2):
    """Explicit sixteen-term sign-flip expansion."""
    a, b = x1
    c, d = x2
    images1 = [(a, b), (-a, b), (a, -b), (-a, -b)]
    images2 = [(c, d), (-c, d), (c, -d), (-c, -d)]
    total = 0.0
    for u in images1:
        for v in images2:
            total += child.eval(u, v)
    return total / 16.0


def periodic_expansion(child, x1, x2, axis, p):
    """Explicit nine-term shift expansion along ``axis``."""
    total = 0.0
    for s1 in (0.0, p, -p):
        for s2 in (0.0, p, -p):
            u = np.array(x1, dtype=float)
            v = np.array(x2, dtype=float)
            u[axis] += s1
            v[axis] += s2
            total += child.eval(u, v)
    return total / 9.0
