"""Kernel-expression algebra."""

from .expr import (
    Affine,
    AxisRestrict,
    Constant,
    Exponential,
    GroupAverage,
    Kernel,
    Matern,
    PaciorekRisser,
    Product,
    Scale,
    SqExp,
    Sum,
    Warp,
)
from .fields import (
    BumpField,
    ConstantField,
    ConstantMatrixField,
    FactorMatrixField,
    LinearField,
    MatrixField,
    RadialField,
    ScalarField,
)
from .library import library_kernels
from .metric import AxisLengths, FullMetric, Isotropic, Metric
from .ops import (
    PSDReport,
    additive_anisotropic,
    axial_group,
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
    warp,
)
from .params import Param


def eval_kernel(k, x1, x2, h=None):
    """Single kernel value k(x1, x2)."""
    return k.eval(x1, x2, h)
