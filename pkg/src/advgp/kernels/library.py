"""One instance of every kernel family, used by PSD sweeps and the CLI."""

from __future__ import annotations

from . import ops
from .expr import Constant, Kernel, Product, Scale, Sum, Warp
from .fields import ConstantMatrixField, LinearField

__all__ = ["library_kernels"]


def library_kernels(dim: int = 2) -> dict[str, Kernel]:
    """Every kernel family at fixed parameters for ``dim``-dimensional points (dim >= 2).

    The six-fold kernel is planar and only included when ``dim == 2``.
    """
    se = ops.sqexp(0.7)
    ones = [1.0] * dim
    lib = {
        "sqexp": se,
        "exponential": ops.exponential(0.7),
        "matern12": ops.matern(0.7, 0.5),
        "matern32": ops.matern(0.7, 1.5),
        "matern52": ops.matern(0.7, 2.5),
        "anisotropic_sqexp": ops.sqexp([0.5 + 0.5 * i for i in range(dim)]),
        "constant": Constant(0.5),
        "sum": Sum((se, ops.matern(0.3, 1.5))),
        "product": Product((se, ops.exponential(1.2))),
        "scale": Scale(2.0, se),
        "additive": ops.additive_anisotropic([0.5 + 0.3 * i for i in range(dim)]),
        "multiplicative": ops.multiplicative_anisotropic([0.5 + 0.3 * i for i in range(dim)]),
        "warp": Warp(LinearField(tuple(0.5 - 0.8 * (i % 2) for i in range(dim)), 1.0), ops.matern(0.7, 1.5)),
        "axial": ops.group_average(ops.axial_group(dim), se),
        "periodic_shift": ops.periodic_shift(1, 1.0, se, dim),
        "paciorek_risser": ops.paciorek_risser(
            LinearField(tuple(0.2 - 0.1 * i for i in range(dim)), 1.0), ConstantMatrixField(tuple(0.6 * v for v in ones)), 1.5
        ),
    }
    if dim == 2:
        lib["six_fold"] = ops.six_fold(se)
    return lib
