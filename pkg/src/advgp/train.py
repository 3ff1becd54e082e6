"""Hyperparameter estimation by multi-start maximization of the marginal likelihood.

Each restart runs bounded L-BFGS in packed space (log for log-scale
entries).  Restarts are independent; with ``workers > 1`` they run on a
thread pool and are reduced in restart order, so the report is the same
either way.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .core import Dataset, Hyperparameters, clamp_and_pack, unpack
from .engine import PriorMean, log_marginal_likelihood, log_marginal_likelihood_grad
from .errors import AllRestartsFailed, NotFactorizable, ValidationError
from .kernels.expr import Kernel

__all__ = ["TrainConfig", "RestartRecord", "TrainReport", "train", "objective_trace"]

log = logging.getLogger(__name__)

_TIE = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings.

    ``init`` is ``"latin_hypercube"`` (all starts from a seeded LHS design
    over the packed bounds), ``"template"`` (first start at the template
    values, the rest from LHS) or an explicit list of starts, each a
    Hyperparameters, a name->value dict or a value vector.
    """

    restarts: int = 4
    max_iters: int = 200
    gradient_tolerance: float = 1e-6
    seed: int = 0
    init: str | Sequence = "latin_hypercube"
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if not self.gradient_tolerance > 0:
            raise ValidationError("gradient_tolerance must be positive")
        if self.max_iters < 0:
            raise ValidationError("max_iters must be >= 0")
        if isinstance(self.init, str) and self.init not in ("latin_hypercube", "template"):
            raise ValidationError(f"unknown init mode {self.init!r}")


@dataclass(frozen=True)
class RestartRecord:
    index: int
    start: Hyperparameters
    end: Hyperparameters | None
    objective: float
    iterations: int
    converged: bool
    message: str = ""
    path: tuple[Hyperparameters, ...] = field(default=(), repr=False)

    @property
    def failed(self) -> bool:
        return self.end is None


@dataclass(frozen=True)
class TrainReport:
    best: Hyperparameters
    best_objective: float
    per_restart: tuple[RestartRecord, ...]


def _starts(template: Hyperparameters, cfg: TrainConfig) -> list[Hyperparameters]:
    if not isinstance(cfg.init, str):
        out = []
        for s in cfg.init:
            if isinstance(s, Hyperparameters):
                out.append(template.with_values(s.as_dict()))
            else:
                out.append(template.with_values(s))
        if not out:
            raise ValidationError("explicit start list is empty")
        return out
    n_lhs = cfg.restarts - (1 if cfg.init == "template" else 0)
    free = [i for i, e in enumerate(template.entries) if not e.fixed]
    base = clamp_and_pack(template)
    out = [template] if cfg.init == "template" else []
    if n_lhs > 0:
        if free:
            lo = np.array([_packed_bound(template.entries[i], "low") for i in free])
            hi = np.array([_packed_bound(template.entries[i], "high") for i in free])
            u = qmc.LatinHypercube(d=len(free), seed=np.random.default_rng(cfg.seed)).random(n_lhs)
            for row in u:
                z = base.copy()
                z[free] = lo + row * (hi - lo)
                out.append(unpack(template, z))
        else:
            out.extend([template] * n_lhs)
    return out


def _packed_bound(e, which):
    v = getattr(e, which)
    return math.log(v) if e.scale == "log" else v


class _Objective:
    """Negative log marginal likelihood over the free packed coordinates."""

    def __init__(self, dataset, kernel, mean, template):
        self.dataset, self.kernel, self.mean, self.template = dataset, kernel, mean, template
        self.free = [i for i, e in enumerate(template.entries) if not e.fixed]
        self.log_mask = np.array([e.scale == "log" for e in template.entries])

    def hyper(self, zfree, base) -> Hyperparameters:
        z = base.copy()
        z[self.free] = zfree
        return unpack(self.template, z)

    def __call__(self, zfree, base):
        h = self.hyper(zfree, base)
        try:
            val = log_marginal_likelihood(self.dataset, self.kernel, self.mean, h)
            g = log_marginal_likelihood_grad(self.dataset, self.kernel, self.mean, h)
        except NotFactorizable:
            return math.inf, np.zeros(len(self.free))
        g = np.where(self.log_mask, g * h.values, g)
        return -val, -g[self.free]


def _run_restart(obj: _Objective, index: int, start: Hyperparameters, cfg: TrainConfig) -> RestartRecord:
    base = clamp_and_pack(start)
    z0 = base[obj.free]
    f0, g0 = obj(z0, base)
    if not math.isfinite(f0):
        return RestartRecord(index, start, None, -math.inf, 0, False, "start not factorizable")
    if not obj.free:
        return RestartRecord(index, start, start, -f0, 0, True, "no free hyperparameters", (start,))

    bounds = [
        (_packed_bound(start.entries[i], "low"), _packed_bound(start.entries[i], "high"))
        for i in obj.free
    ]
    path = [z0.copy()]
    best = [f0, z0.copy()]

    def fun(z):
        f, g = obj(z, base)
        if f < best[0]:
            best[0], best[1] = f, z.copy()
        return f, g

    def callback(intermediate_result):
        path.append(np.array(intermediate_result.x, copy=True))

    res = optimize.minimize(
        fun,
        z0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=callback,
        options={"maxiter": cfg.max_iters, "gtol": cfg.gradient_tolerance, "ftol": 1e-15, "maxcor": 20},
    )
    z_end = np.asarray(res.x, dtype=np.float64)
    f_end, g_end = obj(z_end, base)
    if not (math.isfinite(f_end) and f_end <= best[0]):
        z_end = best[1]
        f_end, g_end = obj(z_end, base)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    pg = z_end - np.clip(z_end - g_end, lo, hi)
    converged = bool(np.max(np.abs(pg)) <= cfg.gradient_tolerance)
    return RestartRecord(
        index,
        start,
        obj.hyper(z_end, base),
        -f_end,
        int(res.nit),
        converged,
        str(res.message),
        tuple(obj.hyper(z, base) for z in path),
    )


def train(dataset: Dataset, k: Kernel, mean: PriorMean, template: Hyperparameters, cfg: TrainConfig = TrainConfig()) -> TrainReport:
    """Best-of-restarts maximum-likelihood hyperparameters.

    Ties in the objective (within 1e-12) go to the lower restart index.
    """
    starts = _starts(template, cfg)
    obj = _Objective(dataset, k, mean, template)
    if cfg.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(lambda a: _run_restart(obj, a[0], a[1], cfg), enumerate(starts)))
    else:
        records = [_run_restart(obj, i, s, cfg) for i, s in enumerate(starts)]

    best = None
    for r in records:
        if r.failed:
            log.info("restart %d skipped: %s", r.index, r.message)
            continue
        if best is None or r.objective > best.objective + _TIE:
            best = r
    if best is None:
        raise AllRestartsFailed(f"all {len(records)} restarts failed to factorize")
    return TrainReport(best.end, best.objective, tuple(records))


def objective_trace(dataset: Dataset, k: Kernel, mean: PriorMean, path: Sequence[Hyperparameters]) -> list[float | None]:
    """Log marginal likelihood along ``path``; unfactorizable points give None."""
    out = []
    for h in path:
        try:
            out.append(log_marginal_likelihood(dataset, k, mean, h))
        except NotFactorizable:
            out.append(None)
    return out
