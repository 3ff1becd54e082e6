"""Command line interface.

    advgp [--config PATH] [--seed N] [--out DIR] VERB [options]

Verbs: fit, predict, benchmark, error-curve, psd-check, suggest.  The
global flags may also follow the verb.  Exit codes: 0 success, 2 bad
configuration or arguments, 3 numerical failure, 4 I/O or data-file error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..core import as_points
from ..engine import fit, posterior
from ..errors import (
    AdvGPError,
    ConfigError,
    NumericalError,
    ParseError,
    SchemaError,
    SingularAverageMatrix,
    ValidationError,
)
from ..kernels import ops
from ..kernels.library import library_kernels
from ..train import train
from .config import PRESETS, RunConfig, load_config, preset
from .csvio import _read_rows, fmt, write_table
from .groundtruth import IR_DRIFT, get_ground_truth
from .run import _grid, _lift_points, error_vs_n, prepare, run, suggest_next

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("advgp")


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer, got {v}")
    return v


def _add_globals(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="run configuration (TOML)")
    p.add_argument("--seed", type=_u64, default=d, help="override the configured seed")
    p.add_argument("--out", default=d, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="advgp", description="Gaussian-process regression with constrained kernels.")
    _add_globals(p, suppress=False)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")

    def verb(name, help_):
        s = sub.add_parser(name, help=help_)
        _add_globals(s, suppress=True)
        return s

    s = verb("fit", "train every recipe and write hyperparameters")
    s.add_argument("--ground-truth", choices=PRESETS, help="use a built-in benchmark config")
    s.add_argument("--recipe", help="only this recipe")

    s = verb("predict", "posterior mean and variance at given points")
    s.add_argument("--ground-truth", choices=PRESETS)
    s.add_argument("--recipe", help="only this recipe")
    s.add_argument("--points", required=True, help="CSV of query points (header line, one point per row)")

    s = verb("benchmark", "train, predict and score every recipe")
    s.add_argument("--ground-truth", choices=PRESETS, help="use a built-in benchmark config")

    s = verb("error-curve", "held-out metrics against training-set size")
    s.add_argument("--ground-truth", choices=PRESETS)
    s.add_argument("--schedule", required=True, help="comma-separated increasing training sizes")

    s = verb("psd-check", "eigenvalue test of kernel Gram matrices")
    s.add_argument("--ground-truth", choices=PRESETS)
    s.add_argument("--points", type=int, default=30, help="number of random points (default 30)")
    s.add_argument("--rtol", type=float, default=1e-8)

    s = verb("suggest", "next measurement: the candidate of largest posterior variance")
    s.add_argument("--ground-truth", choices=PRESETS)
    s.add_argument("--recipe", help="recipe to use (default: the last one)")
    s.add_argument("--candidates", help="CSV of candidate points (default: the plot grid)")
    return p


def _config(args) -> RunConfig | None:
    gt = getattr(args, "ground_truth", None)
    if args.config and gt:
        raise ConfigError("give --config or --ground-truth, not both")
    if args.config:
        cfg = load_config(args.config)
    elif gt:
        cfg = preset(gt)
    else:
        return None
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = cfg.with_output_dir(args.out)
    return cfg


def _need_config(args) -> RunConfig:
    cfg = _config(args)
    if cfg is None:
        raise ConfigError("this verb needs --config or --ground-truth")
    return cfg


def _recipes(cfg, name):
    return [cfg.recipe(name)] if name else list(cfg.recipes)


def _read_points(path, dim):
    _, _, _, rows = _read_rows(path)
    if not rows:
        raise SchemaError(f"{path}: no points")
    try:
        return as_points(np.array(rows, dtype=np.float64), dim)
    except ValidationError as e:
        raise SchemaError(f"{path}: {e}") from e


def _write_hyper(path, h):
    lines = ["name,value,low,high,scale"]
    for e in h.entries:
        lines.append(",".join([e.name, fmt(e.value), fmt(e.low), fmt(e.high), e.scale]))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def cmd_fit(args):
    cfg = _need_config(args)
    problem = prepare(cfg)
    out = Path(cfg.output.dir)
    for r in _recipes(cfg, args.recipe):
        rep = train(problem.train, r.kernel, r.mean, r.hyperparameters, cfg.train)
        _write_hyper(out / r.name / "hyperparameters.csv", rep.best)
        print(f"{r.name}: log marginal likelihood {rep.best_objective:.6g}  {rep.best!r}")
    return EXIT_OK


def cmd_predict(args):
    cfg = _need_config(args)
    problem = prepare(cfg)
    Q = _read_points(args.points, problem.train.space.dim)
    out = Path(cfg.output.dir)
    for r in _recipes(cfg, args.recipe):
        rep = train(problem.train, r.kernel, r.mean, r.hyperparameters, cfg.train)
        post = posterior(fit(problem.train, r.kernel, r.mean, rep.best), Q)
        cols = [f"x{i + 1}" for i in range(Q.shape[1])] + ["mean", "variance"]
        write_table(out / r.name / "predictions.csv", cols, np.column_stack([Q, post.mean, post.variance]).tolist())
        print(f"{r.name}: {Q.shape[0]} predictions -> {out / r.name / 'predictions.csv'}")
    return EXIT_OK


def cmd_benchmark(args):
    cfg = _need_config(args)
    results = run(cfg)
    for name, res in results.items():
        m = res.metrics
        print(f"{name}: rmse={m.rmse:.6g} mae={m.mean_abs_error:.6g} nll={m.nll:.6g} coverage95={m.coverage95:.4f}")
    print(f"artifacts in {cfg.output.dir}")
    return EXIT_OK


def cmd_error_curve(args):
    cfg = _need_config(args)
    try:
        sched = [int(s) for s in args.schedule.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--schedule must be comma-separated integers, got {args.schedule!r}") from None
    for row in error_vs_n(cfg, sched):
        print(f"n={row['n']} {row['recipe']}: " + " ".join(f"{k}={row[k]:.6g}" for k in row if k not in ("n", "recipe")))
    return EXIT_OK


def cmd_psd_check(args):
    cfg = _config(args)
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    if cfg is None:
        X = rng.uniform(-2.0, 2.0, (args.points, 2))
        items = [(name, k, None) for name, k in library_kernels(2).items()]
        out = Path(args.out or "out")
    else:
        if cfg.data.ground_truth == "ir_drift":
            lo = [b[0] for b in IR_DRIFT.bounds] + [IR_DRIFT.task_range[0]]
            hi = [b[1] for b in IR_DRIFT.bounds] + [IR_DRIFT.task_range[1]]
            X = rng.uniform(lo, hi, (args.points, 3))
        elif cfg.data.ground_truth is not None:
            b = get_ground_truth(cfg.data.ground_truth).bounds
            X = rng.uniform([x[0] for x in b], [x[1] for x in b], (args.points, len(b)))
        else:
            P = prepare(cfg).train.points
            X = P[rng.permutation(P.shape[0])[: args.points]]
        items = [(r.name, r.kernel, r.hyperparameters) for r in cfg.recipes]
        out = Path(cfg.output.dir)
    for name, k, h in items:
        rep = ops.psd_check(k, h, X, args.rtol)
        ok &= rep.passed
        rows.append([name, fmt(rep.min_eig), fmt(rep.trace), "pass" if rep.passed else "FAIL"])
        print(f"{name}: min_eig={rep.min_eig:.3e} trace={rep.trace:.3e} {'pass' if rep.passed else 'FAIL'}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "psd_check.csv").write_text(
        "kernel,min_eig,trace,result\n" + "".join(",".join(r) + "\n" for r in rows)
    )
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_suggest(args):
    cfg = _need_config(args)
    problem = prepare(cfg)
    r = cfg.recipe(args.recipe) if args.recipe else cfg.recipes[-1]
    dim = problem.train.space.dim
    if args.candidates:
        C = _read_points(args.candidates, dim)
    elif problem.grid_points is not None:
        C = problem.grid_points
    elif cfg.data.ground_truth == "ir_drift":
        C = _lift_points(_grid(IR_DRIFT.bounds, 11), problem.multitask.tasks)
    else:
        raise ConfigError("no default candidate grid for this data source; pass --candidates")
    rep = train(problem.train, r.kernel, r.mean, r.hyperparameters, cfg.train)
    state = fit(problem.train, r.kernel, r.mean, rep.best)
    i, x = suggest_next(state, C)
    var = float(posterior(state, x[None, :]).variance[0])
    out = Path(cfg.output.dir)
    cols = ["index"] + [f"x{j + 1}" for j in range(dim)] + ["variance"]
    write_table(out / r.name / "suggestion.csv", cols, [[i, *x.tolist(), var]])
    print(f"{r.name}: next point index {i} at ({', '.join(fmt(v) for v in x)}), variance {var:.6g}")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "benchmark": cmd_benchmark,
    "error-curve": cmd_error_curve,
    "psd-check": cmd_psd_check,
    "suggest": cmd_suggest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except (NumericalError, SingularAverageMatrix) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ParseError, SchemaError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValidationError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AdvGPError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
