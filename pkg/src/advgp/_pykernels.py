"""Pure-numpy implementations of the hot Gram kernels.

Mirrors ``_ckernels.pyx`` function for function; selected by ``_backend``
when the compiled module is missing or ``ADVGP_PURE_PYTHON`` is set.
"""

import numpy as np

from .errors import SingularAverageMatrix

SQEXP, MATERN12, MATERN32, MATERN52 = 0, 1, 3, 5

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


def sqdist_weighted(X1, X2, w):
    """``sum_k w[k] * (X1[i, k] - X2[j, k])**2`` for all pairs."""
    X1 = np.asarray(X1, dtype=np.float64)
    X2 = np.asarray(X2, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros((X1.shape[0], X2.shape[0]))
    for k in range(X1.shape[1]):
        d = X1[:, k, None] - X2[None, :, k]
        out += w[k] * (d * d)
    return out


def sqdist_metric(X1, X2, M):
    """Quadratic form ``(x1 - x2)^T M (x1 - x2)`` for all pairs."""
    X1 = np.asarray(X1, dtype=np.float64)
    X2 = np.asarray(X2, dtype=np.float64)
    D = X1[:, None, :] - X2[None, :, :]
    return np.einsum("ijk,kl,ijl->ij", D, np.asarray(M, dtype=np.float64), D)


def profile(r, code):
    """Unit-variance radial profile evaluated at scaled distance ``r``."""
    r = np.asarray(r, dtype=np.float64)
    if code == SQEXP:
        return np.exp(-0.5 * r * r)
    if code == MATERN12:
        return np.exp(-r)
    if code == MATERN32:
        a = _SQRT3 * r
        return (1.0 + a) * np.exp(-a)
    if code == MATERN52:
        a = _SQRT5 * r
        return (1.0 + a + a * a / 3.0) * np.exp(-a)
    raise ValueError(f"unknown profile code {code}")


def paciorek_gram(X1, X2, S1, S2, a1, a2, code):
    """Location-dependent Matérn Gram matrix.

    ``S1``/``S2`` hold one SPD matrix per point, ``a1``/``a2`` the signal
    variance at each point.
    """
    X1 = np.asarray(X1, dtype=np.float64)
    X2 = np.asarray(X2, dtype=np.float64)
    avg = 0.5 * (np.asarray(S1)[:, None, :, :] + np.asarray(S2)[None, :, :, :])
    try:
        L = np.linalg.cholesky(avg)
    except np.linalg.LinAlgError:
        raise SingularAverageMatrix("averaged anisotropy matrix is not positive definite") from None
    diag = np.diagonal(L, axis1=-2, axis2=-1)
    det = np.prod(diag, axis=-1) ** 2
    if np.any(det < 1e-300):
        raise SingularAverageMatrix("averaged anisotropy matrix is singular")
    D = X1[:, None, :] - X2[None, :, :]
    z = np.linalg.solve(L, D[..., None])[..., 0]
    q = np.einsum("ijk,ijk->ij", z, z)
    pref = np.asarray(a1)[:, None] * np.asarray(a2)[None, :] / np.sqrt(det)
    return pref * profile(np.sqrt(q), code)
