"""CSV ingestion and emission.

single_task layout::

    x1,x2,y[,noise_var]
    0.1,0.2,1.5[,0.01]

multi_task layout (one record per row, one value column per task)::

    # tasks: 1.0,2.0,3.0
    x1,x2,y1,y2,y3
    0.1,0.2,0.5,0.7,0.4

Input columns are those whose header starts with ``x``.  Numbers are
written with ``repr`` (shortest decimal that round-trips exactly).
"""

from __future__ import annotations

import csv
import io
import os
from typing import Sequence

import numpy as np

from ..core import Dataset, IndexSpace, NoiseModel, make_dataset
from ..errors import ParseError, SchemaError
from ..multitask import MultiTaskDataset, TaskGrid, make_multitask

__all__ = ["LAYOUTS", "load_csv", "save_csv", "write_table", "fmt"]

LAYOUTS = ("single_task", "multi_task")
_TASKS_TAG = "# tasks:"


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _number(text: str, line: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text.strip()!r}", line, col) from None


def _read_rows(path):
    """(tasks line or None, header, numeric rows, first data line number)."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    tasks = None
    header = None
    header_line = 0
    body = []
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s:
            continue
        if s.startswith("#"):
            if s.lower().startswith(_TASKS_TAG):
                if header is not None:
                    raise ParseError("tasks line must precede the header", i, 1)
                tasks = (i, s[len(_TASKS_TAG):])
            continue
        if header is None:
            header = [c.strip() for c in next(csv.reader([s]))]
            header_line = i
            continue
        body.append((i, s))
    if header is None:
        raise ParseError("missing header line", len(lines) + 1, 1)
    rows = []
    for i, s in body:
        fields = next(csv.reader([s]))
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(fields)}", i, min(len(fields), len(header)) + 1)
        rows.append([_number(f, i, j + 1) for j, f in enumerate(fields)])
    return tasks, header, header_line, rows


def _input_columns(header, line):
    n_in = 0
    for name in header:
        if name.lower().startswith("x"):
            n_in += 1
        else:
            break
    if n_in == 0:
        raise SchemaError(f"header on line {line} has no x input columns")
    if any(name.lower().startswith("x") for name in header[n_in:]):
        raise SchemaError("input columns must come first")
    return n_in


def load_csv(path, layout: str = "single_task", noise_var: float | None = None):
    """Load a Dataset (single_task) or MultiTaskDataset (multi_task).

    ``noise_var`` applies when the file carries no noise column; for
    single_task data None means noise-free, for multi_task it defaults to 1e-6.
    """
    if layout not in LAYOUTS:
        raise SchemaError(f"unknown layout {layout!r}; choose from {LAYOUTS}")
    tasks, header, hline, rows = _read_rows(path)
    if not rows:
        raise SchemaError("file has a header but no data rows")
    A = np.array(rows, dtype=np.float64)
    n_in = _input_columns(header, hline)

    if layout == "single_task":
        if tasks is not None:
            raise SchemaError("single_task files must not carry a tasks line")
        rest = [h.lower() for h in header[n_in:]]
        if rest not in (["y"], ["y", "noise_var"]):
            raise SchemaError(f"expected columns y[,noise_var] after inputs, found {header[n_in:]}")
        X, y = A[:, :n_in], A[:, n_in]
        if len(rest) == 2:
            noise = NoiseModel.diagonal(A[:, n_in + 1])
        elif noise_var:
            noise = NoiseModel.iid(noise_var)
        else:
            noise = NoiseModel.none()
        return make_dataset(IndexSpace(n_in), X, y, noise)

    if tasks is None:
        raise SchemaError("multi_task files need a '# tasks: t1,...,tT' line")
    tline, ttext = tasks
    coords = [_number(t, tline, j + 1) for j, t in enumerate(ttext.split(","))]
    grid = TaskGrid(coords)
    n_val = len(header) - n_in
    if n_val != len(grid):
        raise SchemaError(f"tasks line lists {len(grid)} tasks but the header has {n_val} value columns")
    nv = 1e-6 if noise_var is None else noise_var
    return make_multitask(IndexSpace(n_in), grid, A[:, :n_in], A[:, n_in:], nv)


def _write(path, text: str):
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_table(path, header: Sequence[str], rows, comments: Sequence[str] = ()):
    buf = io.StringIO()
    for c in comments:
        buf.write(c + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    _write(path, buf.getvalue())


def save_csv(path, data: Dataset | MultiTaskDataset):
    if isinstance(data, MultiTaskDataset):
        n_in, T = data.inputs.shape[1], len(data.tasks)
        header = [f"x{i + 1}" for i in range(n_in)] + [f"y{j + 1}" for j in range(T)]
        comment = _TASKS_TAG + " " + ",".join(fmt(t) for t in data.tasks.coords)
        rows = np.column_stack([data.inputs, data.values])
        write_table(path, header, rows.tolist(), [comment])
        return
    n_in = data.points.shape[1]
    header = [f"x{i + 1}" for i in range(n_in)] + ["y"]
    cols = [data.points, data.values[:, None]]
    if data.noise.kind != "none":
        header.append("noise_var")
        cols.append(data.noise.diag(data.n)[:, None])
    write_table(path, header, np.hstack(cols).tolist())
