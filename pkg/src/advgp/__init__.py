"""Gaussian-process regression with a composable kernel-expression algebra."""

from . import kernels
from ._backend import name as backend
from .core import (
    Dataset,
    Entry,
    Hyperparameters,
    IndexSpace,
    NoiseModel,
    clamp_and_pack,
    make_dataset,
    unpack,
)
from .engine import (
    FittedState,
    Posterior,
    PriorMean,
    build_gram,
    factorize,
    fit,
    log_marginal_likelihood,
    log_marginal_likelihood_grad,
    posterior,
)
from .train import TrainConfig, TrainReport, objective_trace, train

__version__ = "0.1.0"
