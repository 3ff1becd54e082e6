"""Pick the compiled Gram kernels when importable, else the numpy fallback.

Set ``ADVGP_PURE_PYTHON=1`` to force the fallback.
"""

import os
from contextlib import contextmanager

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("ADVGP_PURE_PYTHON") or _ckernels is None:
    name = "python"
else:
    name = "cython"

ops = _BACKENDS[name]


def available():
    return sorted(_BACKENDS)


def get(backend):
    return _BACKENDS[backend]


@contextmanager
def use(backend):
    """Temporarily route every Gram computation through ``backend``."""
    global ops, name
    saved = ops, name
    ops, name = _BACKENDS[backend], backend
    try:
        yield ops
    finally:
        ops, name = saved
