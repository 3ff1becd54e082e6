import os
import subprocess
import sys

import numpy as np
import pytest

from advgp import _backend
from advgp.core import IndexSpace, NoiseModel, make_dataset
from advgp.engine import PriorMean, fit, log_marginal_likelihood, posterior
from advgp.errors import SingularAverageMatrix
from advgp.kernels import library_kernels

needs_cython = pytest.mark.skipif("cython" not in _backend.available(), reason="extension not built")
CODES = (0, 1, 3, 5)


def _spd(rng, n, d):
    A = rng.normal(size=(n, d, d))
    return A @ A.transpose(0, 2, 1) + 0.5 * np.eye(d)


def test_python_backend_always_available():
    assert "python" in _backend.available()
    with _backend.use("python") as ops:
        assert _backend.name == "python" and ops is _backend.get("python")


def test_use_restores_previous_backend():
    before = _backend.name
    with pytest.raises(RuntimeError):
        with _backend.use("python"):
            raise RuntimeError
    assert _backend.name == before


def test_env_var_forces_fallback():
    env = dict(os.environ, ADVGP_PURE_PYTHON="1")
    r = subprocess.run([sys.executable, "-c", "from advgp import _backend; print(_backend.name)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"


@needs_cython
@pytest.mark.parametrize("seed", range(5))
def test_primitives_agree(seed):
    rng = np.random.default_rng(seed)
    n1, n2, d = rng.integers(1, 30, 2).tolist() + [int(rng.integers(1, 5))]
    X1, X2 = rng.normal(size=(n1, d)), rng.normal(size=(n2, d))
    cy, py = _backend.get("cython"), _backend.get("python")
    w = rng.uniform(0.1, 3, d)
    assert np.allclose(cy.sqdist_weighted(X1, X2, w), py.sqdist_weighted(X1, X2, w), rtol=1e-13, atol=1e-13)
    M = _spd(rng, 1, d)[0]
    assert np.allclose(cy.sqdist_metric(X1, X2, M), py.sqdist_metric(X1, X2, M), rtol=1e-12, atol=1e-12)
    r = rng.uniform(0, 5, (n1, n2))
    S1, S2 = _spd(rng, n1, d), _spd(rng, n2, d)
    a1, a2 = rng.uniform(0.5, 2, n1), rng.uniform(0.5, 2, n2)
    for code in CODES:
        assert np.allclose(cy.profile(r, code), py.profile(r, code), rtol=1e-14, atol=1e-15)
        assert np.allclose(cy.paciorek_gram(X1, X2, S1, S2, a1, a2, code),
                           py.paciorek_gram(X1, X2, S1, S2, a1, a2, code), rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("backend", _backend.available())
def test_singular_average_matrix(backend):
    ops = _backend.get(backend)
    X = np.zeros((2, 2))
    S = np.zeros((2, 2, 2))
    with pytest.raises(SingularAverageMatrix):
        ops.paciorek_gram(X, X, S, S, np.ones(2), np.ones(2), 3)


@pytest.mark.parametrize("backend", _backend.available())
def test_unknown_profile_code(backend):
    with pytest.raises(ValueError):
        _backend.get(backend).profile(np.zeros((2, 2)), 7)


@needs_cython
@pytest.mark.parametrize("name", sorted(library_kernels(2)))
def test_end_to_end_agreement(name, rng):
    k = library_kernels(2)[name]
    X = rng.uniform(-2, 2, (25, 2))
    ds = make_dataset(IndexSpace(2), X, np.sin(X[:, 0]) + X[:, 1], NoiseModel.iid(1e-2))
    Q = rng.uniform(-2, 2, (10, 2))
    out = {}
    for b in ("cython", "python"):
        with _backend.use(b):
            post = posterior(fit(ds, k, PriorMean.zero(), None), Q)
            out[b] = (log_marginal_likelihood(ds, k, PriorMean.zero(), None), post.mean, post.variance)
    assert out["cython"][0] == pytest.approx(out["python"][0], rel=1e-10, abs=1e-10)
    assert np.allclose(out["cython"][1], out["python"][1], rtol=1e-9, atol=1e-10)
    assert np.allclose(out["cython"][2], out["python"][2], rtol=1e-9, atol=1e-10)
