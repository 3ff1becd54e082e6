"""Benchmark runs: data, training, held-out metrics and plot-ready artifacts.

Every recipe in a config is trained and scored on the same seeded data, so
recipes form paired comparisons.  Artifacts land in ``<dir>/<recipe>/`` and
depend only on (config, seed) apart from ``runtime_seconds`` in
``metrics.json``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core import Dataset, NoiseModel, as_points, make_dataset
from ..engine import FittedState, fit, posterior
from ..errors import ConfigError, EmptyGrid, ValidationError
from ..multitask import MultiTaskDataset, cross_task_covariance, lift
from ..train import TrainConfig, TrainReport, train
from .config import Recipe, RunConfig
from .csvio import fmt, load_csv, save_csv, write_table
from .groundtruth import IR_DRIFT, generate, get_ground_truth, test_points

__all__ = [
    "MetricsReport",
    "Problem",
    "RecipeResult",
    "prepare",
    "evaluate",
    "run",
    "error_vs_n",
    "suggest_next",
    "metrics",
]

_Z95 = 1.96
_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    mean_abs_error: float
    nll: float
    coverage95: float
    runtime_seconds: float = 0.0
    calibration_error: float = 0.0
    mean_variance: float = 0.0


@dataclass(frozen=True, eq=False)
class Problem:
    """Training data plus held-out locations and the values they are scored against.

    ``test_noise`` is the noise variance contained in ``test_truth``: zero
    for synthetic truths (scored against the noise-free function), the
    measurement noise for held-out CSV rows.  ``obs_noise`` is the noise
    of a fresh measurement, added to the variance when scoring the
    predictive density.
    """

    train: Dataset
    test_points: np.ndarray
    test_truth: np.ndarray
    test_noise: float
    grid_points: np.ndarray | None = None
    grid_truth: np.ndarray | None = None
    multitask: MultiTaskDataset | None = None
    obs_noise: float = 0.0


@dataclass(frozen=True, eq=False)
class RecipeResult:
    recipe: Recipe
    report: TrainReport
    state: FittedState
    metrics: MetricsReport
    test_mean: np.ndarray
    test_variance: np.ndarray


def _grid(bounds, g):
    axes = [np.linspace(lo, hi, g) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _split_rows(n_rows, n_train, n_test, seed):
    if n_test + 1 > n_rows:
        raise ConfigError(f"data.n_test = {n_test} leaves no training rows out of {n_rows}")
    perm = np.random.default_rng(seed).permutation(n_rows)
    return perm[n_test:n_test + n_train], perm[:n_test]


def _lift_points(X, tasks):
    T = len(tasks)
    return np.column_stack([np.repeat(X, T, axis=0), np.tile(tasks.coords, X.shape[0])])


def prepare(cfg: RunConfig, n_train: int | None = None) -> Problem:
    """Seeded data for one run; ``n_train`` overrides the configured size."""
    d = cfg.data
    n = d.n_train if n_train is None else int(n_train)
    seed = cfg.seed
    if d.ground_truth == "ir_drift":
        mt = IR_DRIFT.generate(n, seed, d.noise_var, d.n_tasks)
        Xt = IR_DRIFT.test_points(d.n_test, seed)
        return Problem(
            lift(mt), _lift_points(Xt, mt.tasks), IR_DRIFT(Xt, mt.tasks.coords).ravel(), 0.0, multitask=mt, obs_noise=d.noise_var
        )
    if d.ground_truth is not None:
        gt = get_ground_truth(d.ground_truth)
        ds = generate(gt, n, seed, d.noise_var)
        Xt = test_points(gt, d.n_test, seed)
        gp = gtv = None
        g = cfg.output.grid
        if g > 0 and gt.dim <= 2:
            gp = _grid(gt.bounds, g)
            gtv = gt(gp)
        return Problem(ds, Xt, gt(Xt), 0.0, gp, gtv, obs_noise=d.noise_var)

    path = Path(cfg.base_dir) / d.csv
    data = load_csv(path, d.layout, d.noise_var if d.noise_var > 0 else None)
    if isinstance(data, MultiTaskDataset):
        tr, te = _split_rows(data.n_records, n, d.n_test, seed)
        sub = MultiTaskDataset(data.base_space, data.tasks, data.inputs[tr], data.values[tr], data.noise[tr])
        test_noise = float(np.mean(data.noise[te])) if len(te) else 0.0
        return Problem(
            lift(sub), _lift_points(data.inputs[te], data.tasks), data.values[te].ravel(), test_noise, multitask=sub,
            obs_noise=test_noise,
        )
    tr, te = _split_rows(data.n, n, d.n_test, seed)
    noise_diag = data.noise.diag(data.n)
    if data.noise.kind == "diagonal":
        noise = NoiseModel.diagonal(noise_diag[tr])
    else:
        noise = data.noise
    ds = make_dataset(data.space, data.points[tr], data.values[tr], noise)
    test_noise = float(np.mean(noise_diag[te])) if len(te) else 0.0
    return Problem(ds, data.points[te], data.values[te], test_noise, obs_noise=test_noise)


def _check_disjoint(problem: Problem):
    if problem.test_points.shape[0] == 0:
        return
    train_rows = {tuple(r) for r in problem.train.points.tolist()}
    clash = sum(tuple(r) in train_rows for r in problem.test_points.tolist())
    if clash:
        raise ValidationError(f"{clash} held-out points coincide with training points")


def metrics(truth, mean, variance, test_noise=0.0, points=None, bins=1, runtime=0.0, obs_noise=None) -> MetricsReport:
    """Held-out error, predictive density and interval coverage.

    Coverage uses the variance plus ``test_noise``; the negative log
    predictive density uses the variance plus ``obs_noise`` (default
    ``test_noise``).

    ``calibration_error`` is the mean of |coverage95 - 0.95| over ``bins``
    equal-count groups ordered by distance of the point from the origin;
    with one bin it is simply |coverage95 - 0.95|.
    """
    truth, mean, variance = (np.asarray(a, dtype=np.float64) for a in (truth, mean, variance))
    err = truth - mean
    s2 = np.maximum(variance + test_noise, _VAR_FLOOR)
    hit = np.abs(err) <= _Z95 * np.sqrt(s2)
    s2_obs = np.maximum(variance + (test_noise if obs_noise is None else obs_noise), _VAR_FLOOR)
    if bins > 1 and points is not None:
        order = np.argsort(np.linalg.norm(np.asarray(points), axis=1), kind="stable")
        groups = [g for g in np.array_split(order, bins) if g.size]
    else:
        groups = [np.arange(truth.shape[0])]
    calib = float(np.mean([abs(np.mean(hit[g]) - 0.95) for g in groups]))
    return MetricsReport(
        rmse=float(np.sqrt(np.mean(err * err))),
        mean_abs_error=float(np.mean(np.abs(err))),
        nll=float(np.mean(0.5 * np.log(2.0 * math.pi * s2_obs) + 0.5 * err * err / s2_obs)),
        coverage95=float(np.mean(hit)),
        runtime_seconds=float(runtime),
        calibration_error=calib,
        mean_variance=float(np.mean(variance)),
    )


def evaluate(problem: Problem, recipe: Recipe, train_cfg: TrainConfig, bins: int = 1) -> RecipeResult:
    t0 = time.perf_counter()
    rep = train(problem.train, recipe.kernel, recipe.mean, recipe.hyperparameters, train_cfg)
    state = fit(problem.train, recipe.kernel, recipe.mean, rep.best)
    if problem.test_points.shape[0]:
        post = posterior(state, problem.test_points)
        m, v = post.mean, post.variance
    else:
        m = v = np.zeros(0)
    elapsed = time.perf_counter() - t0
    if m.size:
        base_dim = problem.test_points.shape[1] - (1 if problem.multitask is not None else 0)
        rep_m = metrics(problem.test_truth, m, v, problem.test_noise, problem.test_points[:, :base_dim], bins, elapsed,
                        problem.obs_noise)
    else:
        rep_m = MetricsReport(math.nan, math.nan, math.nan, math.nan, elapsed, math.nan, math.nan)
    return RecipeResult(recipe, rep, state, rep_m, m, v)


def _write_recipe(out: Path, cfg: RunConfig, problem: Problem, res: RecipeResult):
    out.mkdir(parents=True, exist_ok=True)
    sel = {k: getattr(res.metrics, k) for k in cfg.output.metrics}
    doc = {"recipe": res.recipe.name, "seed": cfg.seed, "n_train": problem.train.n, "n_test": int(res.test_mean.size)}
    doc.update(sel)
    doc["runtime_seconds"] = res.metrics.runtime_seconds
    (out / "metrics.json").write_text(json.dumps(doc, indent=2) + "\n")

    lines = ["name,value,low,high,scale"]
    for e in res.state.hyperparameters.entries:
        lines.append(",".join([e.name, fmt(e.value), fmt(e.low), fmt(e.high), e.scale]))
    (out / "hyperparameters.csv").write_text("\n".join(lines) + "\n")

    rows = []
    for r in res.report.per_restart:
        rows.append([r.index, r.objective, r.iterations, int(r.converged), int(r.failed)])
    write_table(out / "train.csv", ["restart", "log_marginal_likelihood", "iterations", "converged", "failed"], rows)

    d = problem.test_points.shape[1]
    xcols = [f"x{i + 1}" for i in range(d)]
    if res.test_mean.size:
        tab = np.column_stack([problem.test_points, problem.test_truth, res.test_mean, res.test_variance])
        write_table(out / "predictions.csv", xcols + ["truth", "mean", "variance"], tab.tolist())

    if problem.grid_points is not None:
        post = posterior(res.state, problem.grid_points)
        tab = np.column_stack(
            [problem.grid_points, post.mean, post.variance, problem.grid_truth, np.abs(post.mean - problem.grid_truth)]
        )
        write_table(out / "grid.csv", xcols + ["mean", "variance", "truth", "abs_diff"], tab.tolist())

    if problem.multitask is not None:
        lo = problem.multitask.inputs.min(axis=0)
        hi = problem.multitask.inputs.max(axis=0)
        C = cross_task_covariance(res.state, 0.5 * (lo + hi), problem.multitask.tasks)
        T = C.shape[0]
        write_table(out / "cross_task_covariance.csv", [f"t{j + 1}" for j in range(T)], C.tolist(),
                    ["# tasks: " + ",".join(fmt(t) for t in problem.multitask.tasks.coords)])


def run(cfg: RunConfig, write: bool = True) -> dict[str, RecipeResult]:
    """Train, predict and score every recipe on one seeded dataset."""
    problem = prepare(cfg)
    _check_disjoint(problem)
    results = {}
    for recipe in cfg.recipes:
        results[recipe.name] = evaluate(problem, recipe, cfg.train, cfg.output.calibration_bins)
    if write:
        out = Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        save_csv(out / "train_data.csv", problem.multitask if problem.multitask is not None else problem.train)
        for name, res in results.items():
            _write_recipe(out / name, cfg, problem, res)
        cols = list(cfg.output.metrics)
        rows = [[name] + [fmt(getattr(r.metrics, c)) for c in cols] for name, r in results.items()]
        _write_lines(out / "summary.csv", ["recipe"] + cols, rows)
    return results


def _write_lines(path, header, rows):
    text = ",".join(header) + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows)
    Path(path).write_text(text)


def error_vs_n(cfg: RunConfig, n_schedule: Sequence[int], write: bool = True) -> list[dict]:
    """Held-out metrics per recipe on nested training sets of growing size."""
    sched = [int(n) for n in n_schedule]
    if not sched:
        raise ConfigError("empty N schedule")
    if any(n < 1 for n in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ConfigError(f"N schedule must be positive and strictly increasing, got {sched}")
    table = []
    for n in sched:
        problem = prepare(cfg, n)
        _check_disjoint(problem)
        for recipe in cfg.recipes:
            res = evaluate(problem, recipe, cfg.train, cfg.output.calibration_bins)
            row = {"n": n, "recipe": recipe.name}
            row.update({k: getattr(res.metrics, k) for k in cfg.output.metrics})
            table.append(row)
    if write:
        out = Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["n", "recipe"] + list(cfg.output.metrics)
        _write_lines(out / "error_curve.csv", cols, [[r["n"], r["recipe"]] + [fmt(r[c]) for c in cols[2:]] for r in table])
    return table


def suggest_next(state: FittedState, candidates) -> tuple[int, np.ndarray]:
    """Candidate with the largest posterior variance; ties go to the lowest index."""
    C = np.asarray(candidates, dtype=np.float64)
    if C.size == 0:
        raise EmptyGrid("candidate grid is empty")
    C = as_points(C, state.dataset.space.dim)
    var = posterior(state, C).variance
    i = int(np.argmax(var))
    return i, C[i].copy()
