"""Dense GP linear algebra: Gram assembly, factorization, likelihood, posterior."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import Dataset, Hyperparameters, NoiseModel, as_points
from .errors import DimensionMismatch, InconsistentPosterior, NotFactorizable, ValidationError
from .kernels.expr import Kernel
from .kernels.params import Param, names, resolve

__all__ = [
    "JITTER_LADDER",
    "PriorMean",
    "Factorization",
    "FittedState",
    "Posterior",
    "build_gram",
    "factorize",
    "log_marginal_likelihood",
    "log_marginal_likelihood_grad",
    "fit",
    "posterior",
]

JITTER_LADDER = (1e-10, 1e-8, 1e-6, 1e-4)
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PriorMean:
    """Zero or constant prior mean; a constant may reference a hyperparameter."""

    kind: str = "zero"
    value: Param = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant"):
            raise ValidationError(f"unknown prior mean kind {self.kind!r}")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, value: Param):
        return cls("constant", value)

    def level(self, h) -> float:
        return 0.0 if self.kind == "zero" else resolve(self.value, h)

    def __call__(self, n: int, h) -> np.ndarray:
        return np.full(n, self.level(h))

    def params(self):
        return frozenset() if self.kind == "zero" else names(self.value)


@dataclass(frozen=True, eq=False)
class Factorization:
    chol: np.ndarray
    jitter_used: float


@dataclass(frozen=True, eq=False)
class FittedState:
    dataset: Dataset
    kernel: Kernel
    mean: PriorMean
    hyperparameters: Hyperparameters
    chol: np.ndarray
    alpha: np.ndarray
    jitter_used: float


@dataclass(frozen=True, eq=False)
class Posterior:
    points: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    covariance: np.ndarray | None = None


def build_gram(k: Kernel, points, h) -> np.ndarray:
    X = as_points(points)
    K = k.gram(X, X, h)
    return 0.5 * (K + K.T)


def _cholesky(A):
    try:
        return linalg.cholesky(A, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None


def factorize(K, noise: NoiseModel) -> Factorization:
    """Cholesky of K + V, escalating diagonal jitter through ``JITTER_LADDER``.

    Jitter levels are relative to the mean diagonal of K + V.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    A = K + noise.matrix(n)
    if not np.all(np.isfinite(A)):
        raise NotFactorizable("matrix contains non-finite entries")
    L = _cholesky(A)
    if L is not None:
        return Factorization(L, 0.0)
    scale = float(np.mean(np.diag(A)))
    if not scale > 0:
        scale = 1.0
    for level in JITTER_LADDER:
        jitter = level * scale
        L = _cholesky(A + jitter * np.eye(n))
        if L is not None:
            return Factorization(L, jitter)
    raise NotFactorizable(f"Cholesky failed at jitter {JITTER_LADDER[-1]:g} x mean diagonal")


def _prepare(dataset: Dataset, k: Kernel, mean: PriorMean, h):
    K = build_gram(k, dataset.points, h)
    fac = factorize(K, dataset.noise)
    resid = dataset.values - mean(dataset.n, h)
    alpha = linalg.cho_solve((fac.chol, True), resid, check_finite=False)
    return fac, resid, alpha


def log_marginal_likelihood(dataset: Dataset, k: Kernel, mean: PriorMean, h) -> float:
    fac, resid, alpha = _prepare(dataset, k, mean, h)
    logdet = 2.0 * np.sum(np.log(np.diag(fac.chol)))
    return float(-0.5 * resid @ alpha - 0.5 * logdet - 0.5 * dataset.n * _LOG_2PI)


def log_marginal_likelihood_grad(dataset: Dataset, k: Kernel, mean: PriorMean, h: Hyperparameters) -> np.ndarray:
    """Gradient with respect to every entry of ``h`` (natural, unpacked values).

    Uses 0.5 * tr((alpha alpha^T - (K+V)^-1) dK); entries the model does not
    reference get 0.
    """
    fac, _, alpha = _prepare(dataset, k, mean, h)
    n = dataset.n
    Kinv = linalg.cho_solve((fac.chol, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - Kinv
    dK = k.gram_grad(dataset.points, dataset.points, h)
    grad = np.zeros(len(h))
    for name, d in dK.items():
        d = 0.5 * (d + d.T)
        grad[h.index(name)] += 0.5 * np.sum(W * d)
    if mean.kind == "constant" and isinstance(mean.value, str):
        grad[h.index(mean.value)] += float(np.sum(alpha))
    return grad


def fit(dataset: Dataset, k: Kernel, mean: PriorMean, h) -> FittedState:
    fac, _, alpha = _prepare(dataset, k, mean, h)
    alpha.setflags(write=False)
    return FittedState(dataset, k, mean, h, fac.chol, alpha, fac.jitter_used)


def posterior(state: FittedState, query, want_full_cov: bool = False) -> Posterior:
    """Posterior mean and variance (optionally the full covariance) at ``query``."""
    dim = state.dataset.space.dim
    Xq = as_points(query, dim)
    if Xq.shape[0] < 1:
        raise DimensionMismatch("query must contain at least one point")
    h, k = state.hyperparameters, state.kernel
    kappa = k.gram(state.dataset.points, Xq, h)
    mean = state.mean(Xq.shape[0], h) + kappa.T @ state.alpha
    v = linalg.solve_triangular(state.chol, kappa, lower=True, check_finite=False)
    prior = k.diag(Xq, h)
    var = prior - np.einsum("ij,ij->j", v, v)
    cov = None
    if want_full_cov:
        cov = k.gram(Xq, Xq, h) - v.T @ v
        cov = 0.5 * (cov + cov.T)
    floor = -1e-10 * np.maximum(1.0, np.abs(prior))
    if np.any(var < floor):
        i = int(np.argmin(var - floor))
        raise InconsistentPosterior(f"posterior variance {var[i]:.3e} at query {i} is negative beyond round-off")
    var = np.maximum(var, 0.0)
    if cov is not None:
        np.fill_diagonal(cov, var)
    return Posterior(Xq, mean, var, cov)
