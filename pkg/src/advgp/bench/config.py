"""Run configuration: a strict TOML schema and the declarative kernel recipes.

Layout (every key not listed here is rejected)::

    seed = 0

    [data]
    ground_truth = "ackley_symmetric"   # or: csv = "path.csv", layout = "single_task"
    n_train = 100
    n_test = 400
    noise_var = 1e-4
    n_tasks = 20                        # drifting-peak data only

    [train]                             # TrainConfig fields
    restarts = 3
    max_iters = 200
    gradient_tolerance = 1e-6
    init = "template"                   # or "latin_hypercube"
    workers = 1

    [output]
    dir = "out"
    grid = 41                           # per-axis plot grid resolution, 0 = none
    calibration_bins = 5
    metrics = ["rmse", "mean_abs_error", "nll", "coverage95"]

    [recipes.standard]
    mean = 0.0                          # number, or a hyperparameter name
    [recipes.standard.kernel]
    type = "sqexp"
    length = "l"
    variance = "s2"
    [recipes.standard.hyperparameters.l]
    value = 0.5
    bounds = [0.05, 5.0]
    scale = "log"

Kernel node types and their keys:

* ``sqexp``, ``exponential``: length (name, number or list), variance
* ``matern``: length, nu, variance
* ``constant``: value
* ``sum``, ``product``: children (list of nodes)
* ``scale``: variance, child
* ``restrict``: axes (0-based), child
* ``additive``, ``multiplicative``: lengths, base ("exponential", "sqexp", "matern32", "matern52")
* ``warp``: field, child
* ``group_average``: group ("axial", "six_fold", "rotation", "periodic"), axes, order, axis, period, child
* ``paciorek_risser``: amplitude (field), covariance (matrix field), nu
* ``ir_stationary``: space_lengths, task_length, nu, variance
* ``ir_nonstationary``: phi (ten names), variance, nu

Scalar fields: ``constant`` (value), ``linear`` (weights, bias), ``radial``
(slope, offset, radius, center, axes), ``bump`` (centers, amplitudes, width).
Matrix fields: ``constant`` (lengths), ``factor`` (dim, entries = list of
{row, col, field}).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..core import Entry, Hyperparameters
from ..engine import PriorMean
from ..errors import AdvGPError, ConfigError
from ..kernels import ops
from ..kernels.expr import Affine, AxisRestrict, Constant, GroupAverage, Kernel, Product, Scale, Sum
from ..kernels.fields import (
    BumpField,
    ConstantField,
    ConstantMatrixField,
    FactorMatrixField,
    LinearField,
    RadialField,
)
from ..multitask import ir_nonstationary_kernel, ir_stationary_kernel
from ..train import TrainConfig

__all__ = [
    "DataConfig",
    "OutputConfig",
    "Recipe",
    "RunConfig",
    "METRICS",
    "PRESETS",
    "parse_config",
    "load_config",
    "preset",
    "preset_text",
    "build_kernel",
]

METRICS = ("rmse", "mean_abs_error", "nll", "coverage95", "calibration_error", "mean_variance")
PRESETS = (
    "additive2d",
    "ackley_symmetric",
    "periodic2d",
    "sixfold2d",
    "nonstat1d",
    "nonstat2d",
    "ir_drift",
)


@dataclass(frozen=True)
class DataConfig:
    ground_truth: str | None = None
    csv: str | None = None
    layout: str = "single_task"
    n_train: int = 50
    n_test: int = 400
    noise_var: float = 0.0
    n_tasks: int = 20


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    grid: int = 41
    calibration_bins: int = 1
    metrics: tuple[str, ...] = ("rmse", "mean_abs_error", "nll", "coverage95")


@dataclass(frozen=True)
class Recipe:
    name: str
    kernel: Kernel
    hyperparameters: Hyperparameters
    mean: PriorMean = PriorMean()


@dataclass(frozen=True)
class RunConfig:
    seed: int
    data: DataConfig
    train: TrainConfig
    output: OutputConfig
    recipes: tuple[Recipe, ...]
    base_dir: str = "."

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=int(seed), train=replace(self.train, seed=int(seed)))

    def with_output_dir(self, path) -> "RunConfig":
        return replace(self, output=replace(self.output, dir=str(path)))

    def recipe(self, name: str) -> Recipe:
        for r in self.recipes:
            if r.name == name:
                return r
        raise ConfigError(f"no recipe named {name!r}; have {[r.name for r in self.recipes]}")


# ---------------------------------------------------------------- validation


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table, got {type(table).__name__}")
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {extra}; allowed {sorted(allowed)}")


def _req(table, key, where):
    if key not in table:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return table[key]


def _int(v, where, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{where}: must be >= {lo}, got {v}")
    return v


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _param(v, where):
    """A hyperparameter reference (string) or a fixed number."""
    if isinstance(v, str):
        if not v:
            raise ConfigError(f"{where}: empty hyperparameter name")
        return v
    return _num(v, where)


def _params(v, where):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}: expected a non-empty list")
    return tuple(_param(x, f"{where}[{i}]") for i, x in enumerate(v))


def _length(v, where):
    return _params(v, where) if isinstance(v, list) else _param(v, where)


# ------------------------------------------------------------------- fields


def _scalar_field(t, where):
    kind = _req(t, "type", where)
    if kind == "constant":
        _check_keys(t, {"type", "value"}, where)
        return ConstantField(_param(t.get("value", 1.0), where + ".value"))
    if kind == "linear":
        _check_keys(t, {"type", "weights", "bias"}, where)
        return LinearField(_params(_req(t, "weights", where), where + ".weights"), _param(t.get("bias", 0.0), where + ".bias"))
    if kind == "radial":
        _check_keys(t, {"type", "slope", "offset", "radius", "center", "axes"}, where)
        center = t.get("center")
        axes = t.get("axes")
        return RadialField(
            _param(t.get("slope", 1.0), where + ".slope"),
            _param(t.get("offset", 0.0), where + ".offset"),
            _param(t.get("radius", math.sqrt(50.0)), where + ".radius"),
            None if center is None else tuple(_num(c, where + ".center") for c in center),
            None if axes is None else tuple(_int(a, where + ".axes", 0) for a in axes),
        )
    if kind == "bump":
        _check_keys(t, {"type", "centers", "amplitudes", "width"}, where)
        centers = _req(t, "centers", where)
        if not isinstance(centers, list) or not centers:
            raise ConfigError(f"{where}.centers: expected a non-empty list of points")
        return BumpField(
            tuple(_params(c, f"{where}.centers[{i}]") for i, c in enumerate(centers)),
            _params(_req(t, "amplitudes", where), where + ".amplitudes"),
            _param(t.get("width", 1.0), where + ".width"),
        )
    raise ConfigError(f"{where}: unknown field type {kind!r}")


def _matrix_field(t, where):
    kind = _req(t, "type", where)
    if kind == "constant":
        _check_keys(t, {"type", "lengths"}, where)
        return ConstantMatrixField(_params(_req(t, "lengths", where), where + ".lengths"))
    if kind == "factor":
        _check_keys(t, {"type", "dim", "entries"}, where)
        entries = []
        for i, e in enumerate(t.get("entries", [])):
            w = f"{where}.entries[{i}]"
            _check_keys(e, {"row", "col", "field"}, w)
            rc = (_int(_req(e, "row", w), w + ".row", 0), _int(_req(e, "col", w), w + ".col", 0))
            entries.append((rc, _scalar_field(_req(e, "field", w), w + ".field")))
        return FactorMatrixField(_int(_req(t, "dim", where), where + ".dim", 1), tuple(entries))
    raise ConfigError(f"{where}: unknown matrix field type {kind!r}")


# ------------------------------------------------------------------ kernels

_BASES = {
    "exponential": lambda l: ops.exponential(l),
    "sqexp": lambda l: ops.sqexp(l),
    "matern32": lambda l: ops.matern(l, 1.5),
    "matern52": lambda l: ops.matern(l, 2.5),
}


def _group(t, where, dim):
    g = _req(t, "group", where)
    if g == "axial":
        axes = t.get("axes")
        return ops.axial_group(dim, None if axes is None else [_int(a, where + ".axes", 0) for a in axes])
    if g == "six_fold":
        return ops.rotation_group(6)
    if g == "rotation":
        return ops.rotation_group(_int(_req(t, "order", where), where + ".order", 1))
    if g == "periodic":
        axis = _int(_req(t, "axis", where), where + ".axis", 0)
        period = _num(_req(t, "period", where), where + ".period")
        return list(ops.periodic_shift(axis, period, Constant(1.0), dim).transforms)
    if g == "explicit":
        maps = []
        for i, m in enumerate(_req(t, "transforms", where)):
            w = f"{where}.transforms[{i}]"
            _check_keys(m, {"A", "b"}, w)
            maps.append(Affine(_req(m, "A", w), m.get("b")))
        return maps
    raise ConfigError(f"{where}: unknown group {g!r}")


def build_kernel(t, dim: int, where: str = "kernel") -> Kernel:
    """Kernel expression from a parsed recipe table; ``dim`` is the index-space dimension."""
    if not isinstance(t, dict):
        raise ConfigError(f"{where}: expected a table")
    kind = _req(t, "type", where)

    def child(key="child"):
        return build_kernel(_req(t, key, where), dim, f"{where}.{key}")

    def var(k):
        v = t.get("variance")
        return k if v is None else Scale(_param(v, where + ".variance"), k)

    try:
        if kind in ("sqexp", "exponential"):
            _check_keys(t, {"type", "length", "variance"}, where)
            f = ops.sqexp if kind == "sqexp" else ops.exponential
            return var(f(_length(t.get("length", 1.0), where + ".length")))
        if kind == "matern":
            _check_keys(t, {"type", "length", "nu", "variance"}, where)
            return var(ops.matern(_length(t.get("length", 1.0), where + ".length"), _num(t.get("nu", 1.5), where + ".nu")))
        if kind == "constant":
            _check_keys(t, {"type", "value"}, where)
            return Constant(_param(t.get("value", 1.0), where + ".value"))
        if kind in ("sum", "product"):
            _check_keys(t, {"type", "children"}, where)
            kids = _req(t, "children", where)
            if not isinstance(kids, list):
                raise ConfigError(f"{where}.children: expected a list of tables")
            nodes = tuple(build_kernel(c, dim, f"{where}.children[{i}]") for i, c in enumerate(kids))
            return Sum(nodes) if kind == "sum" else Product(nodes)
        if kind == "scale":
            _check_keys(t, {"type", "variance", "child"}, where)
            return Scale(_param(_req(t, "variance", where), where + ".variance"), child())
        if kind == "restrict":
            _check_keys(t, {"type", "axes", "child"}, where)
            axes = tuple(_int(a, where + ".axes", 0) for a in _req(t, "axes", where))
            return AxisRestrict(axes, build_kernel(_req(t, "child", where), len(axes), where + ".child"))
        if kind in ("additive", "multiplicative"):
            _check_keys(t, {"type", "lengths", "base", "variance"}, where)
            base = t.get("base", "exponential")
            if base not in _BASES:
                raise ConfigError(f"{where}.base: unknown base {base!r}; choose from {sorted(_BASES)}")
            f = ops.additive_anisotropic if kind == "additive" else ops.multiplicative_anisotropic
            return var(f(_params(_req(t, "lengths", where), where + ".lengths"), _BASES[base]))
        if kind == "warp":
            _check_keys(t, {"type", "field", "child"}, where)
            return ops.warp(_scalar_field(_req(t, "field", where), where + ".field"), child())
        if kind == "group_average":
            _check_keys(t, {"type", "group", "axes", "order", "axis", "period", "transforms", "child"}, where)
            return GroupAverage(tuple(_group(t, where, dim)), child())
        if kind == "paciorek_risser":
            _check_keys(t, {"type", "amplitude", "covariance", "nu"}, where)
            return ops.paciorek_risser(
                _scalar_field(_req(t, "amplitude", where), where + ".amplitude"),
                _matrix_field(_req(t, "covariance", where), where + ".covariance"),
                _num(t.get("nu", 0.5), where + ".nu"),
            )
        if kind == "ir_stationary":
            _check_keys(t, {"type", "space_lengths", "task_length", "nu", "variance"}, where)
            return ir_stationary_kernel(
                _params(t.get("space_lengths", ["l1", "l2"]), where + ".space_lengths"),
                _param(t.get("task_length", "l_task"), where + ".task_length"),
                _num(t.get("nu", 1.5), where + ".nu"),
                _param(t.get("variance", "sigma2"), where + ".variance"),
            )
        if kind == "ir_nonstationary":
            _check_keys(t, {"type", "phi", "variance", "nu"}, where)
            phi = _params(t.get("phi", [f"phi{i}" for i in range(10)]), where + ".phi")
            return ir_nonstationary_kernel(
                phi, _param(t.get("variance", "sigma2"), where + ".variance"), _num(t.get("nu", 1.5), where + ".nu")
            )
    except ConfigError:
        raise
    except AdvGPError as e:
        raise ConfigError(f"{where}: {e}") from e
    raise ConfigError(f"{where}: unknown kernel type {kind!r}")


# ----------------------------------------------------------------- sections


def _hyperparameters(t, where) -> Hyperparameters:
    if not isinstance(t, dict):
        raise ConfigError(f"{where}: expected a table of hyperparameters")
    entries = []
    for name, e in t.items():
        w = f"{where}.{name}"
        _check_keys(e, {"value", "bounds", "scale"}, w)
        value = _num(_req(e, "value", w), w + ".value")
        b = _req(e, "bounds", w)
        if not isinstance(b, list) or len(b) != 2:
            raise ConfigError(f"{w}.bounds: expected [low, high]")
        scale = e.get("scale", "linear")
        try:
            entries.append(Entry(name, value, _num(b[0], w + ".bounds"), _num(b[1], w + ".bounds"), scale))
        except AdvGPError as err:
            raise ConfigError(f"{w}: {err}") from err
    return Hyperparameters(entries)


def _mean(v, where) -> PriorMean:
    if v is None:
        return PriorMean.zero()
    p = _param(v, where)
    return PriorMean.constant(p)


def _data(t) -> DataConfig:
    _check_keys(t, {"ground_truth", "csv", "layout", "n_train", "n_test", "noise_var", "n_tasks"}, "data")
    gt, csv = t.get("ground_truth"), t.get("csv")
    if (gt is None) == (csv is None):
        raise ConfigError("data: give exactly one of 'ground_truth' or 'csv'")
    layout = t.get("layout", "single_task")
    if layout not in ("single_task", "multi_task"):
        raise ConfigError(f"data.layout: unknown layout {layout!r}")
    if gt is not None and gt not in PRESETS:
        raise ConfigError(f"data.ground_truth: unknown ground truth {gt!r}; choose from {list(PRESETS)}")
    noise = _num(t.get("noise_var", 0.0), "data.noise_var")
    if noise < 0:
        raise ConfigError("data.noise_var: must be >= 0")
    return DataConfig(
        gt,
        csv,
        layout,
        _int(t.get("n_train", 50), "data.n_train", 1),
        _int(t.get("n_test", 400), "data.n_test", 0 if csv is not None else 1),
        noise,
        _int(t.get("n_tasks", 20), "data.n_tasks", 1),
    )


def _train(t, seed) -> TrainConfig:
    _check_keys(t, {"restarts", "max_iters", "gradient_tolerance", "init", "workers"}, "train")
    init = t.get("init", "template")
    if init not in ("template", "latin_hypercube"):
        raise ConfigError(f"train.init: expected 'template' or 'latin_hypercube', got {init!r}")
    try:
        return TrainConfig(
            restarts=_int(t.get("restarts", 3), "train.restarts", 1),
            max_iters=_int(t.get("max_iters", 200), "train.max_iters", 0),
            gradient_tolerance=_num(t.get("gradient_tolerance", 1e-6), "train.gradient_tolerance"),
            seed=seed,
            init=init,
            workers=_int(t.get("workers", 1), "train.workers", 1),
        )
    except AdvGPError as e:
        raise ConfigError(f"train: {e}") from e


def _output(t) -> OutputConfig:
    _check_keys(t, {"dir", "grid", "calibration_bins", "metrics"}, "output")
    metrics = t.get("metrics", list(OutputConfig.metrics))
    if not isinstance(metrics, list) or any(m not in METRICS for m in metrics):
        raise ConfigError(f"output.metrics: expected a list drawn from {list(METRICS)}")
    d = t.get("dir", "out")
    if not isinstance(d, str) or not d:
        raise ConfigError("output.dir: expected a non-empty string")
    return OutputConfig(
        d,
        _int(t.get("grid", 41), "output.grid", 0),
        _int(t.get("calibration_bins", 1), "output.calibration_bins", 1),
        tuple(metrics),
    )


def _space_dim(data: DataConfig, base_dir) -> int:
    if data.ground_truth == "ir_drift":
        return 3
    if data.ground_truth is not None:
        from .groundtruth import get_ground_truth

        return get_ground_truth(data.ground_truth).dim
    from .csvio import _input_columns, _read_rows

    _, header, line, _ = _read_rows(Path(base_dir) / data.csv)
    n_in = _input_columns(header, line)
    return n_in + (1 if data.layout == "multi_task" else 0)


def parse_config(doc: dict, base_dir=".") -> RunConfig:
    """Validate a parsed TOML document into a RunConfig."""
    _check_keys(doc, {"seed", "data", "train", "output", "recipes"}, "config")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    data = _data(_req(doc, "data", "config"))
    train = _train(doc.get("train", {}), seed)
    output = _output(doc.get("output", {}))
    recipes_t = _req(doc, "recipes", "config")
    if not isinstance(recipes_t, dict) or not recipes_t:
        raise ConfigError("recipes: need at least one [recipes.<name>] table")
    dim = _space_dim(data, base_dir)
    recipes = []
    for name, r in recipes_t.items():
        w = f"recipes.{name}"
        _check_keys(r, {"kernel", "hyperparameters", "mean"}, w)
        k = build_kernel(_req(r, "kernel", w), dim, w + ".kernel")
        h = _hyperparameters(r.get("hyperparameters", {}), w + ".hyperparameters")
        mean = _mean(r.get("mean"), w + ".mean")
        missing = sorted((k.params() | mean.params()) - set(h.names))
        if missing:
            raise ConfigError(f"{w}: hyperparameter(s) {missing} are referenced but not declared")
        recipes.append(Recipe(name, k, h, mean))
    return RunConfig(seed, data, train, output, tuple(recipes), str(base_dir))


def _loads(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source}: {e}") from e


def load_config(path) -> RunConfig:
    """Parse a config file; OSError propagates for missing or unreadable files."""
    p = Path(path)
    text = p.read_text()
    return parse_config(_loads(text, str(p)), p.parent)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown ground truth {name!r}; choose from {list(PRESETS)}")
    return resources.files("advgp.bench").joinpath("presets", f"{name}.toml").read_text()


def preset(name: str) -> RunConfig:
    """Built-in paired-kernel benchmark for a ground truth."""
    return parse_config(_loads(preset_text(name), f"preset {name}"), ".")
