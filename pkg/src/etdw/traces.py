"""Trace and summary serialization.

Trace CSV columns, one row per sampling instant (vectors are split into
numbered columns):

    k, x*, y*, gamma, gamma_rx, ybar*, d*, ybar_plus*, a*, y_rx*, r*, u*,
    trace_psi, stat1, th1, stat2, th2, xi1, xi2, alarm, safe, attack_power

``d`` has the output dimension for ``etdw``/``plain`` and the input
dimension for the CDW modes. Floats use 17 significant digits, flags 0/1.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .simulation import Trace

__all__ = [
    "trace_columns",
    "write_trace_csv",
    "read_trace_csv",
    "write_summary",
    "figure_series",
    "write_figure_series",
    "format_float",
]

_VECTORS = ("x", "y", "ybar", "d", "ybar_plus", "a", "y_rx", "r", "u")
_FLAGS = ("gamma", "gamma_rx", "xi1", "xi2", "alarm", "safe")


def format_float(v: float) -> str:
    return "%.17g" % v


def trace_columns(trace: Trace) -> dict:
    cols = {"k": trace.k}
    for name in ("x", "y"):
        arr = getattr(trace, name)
        cols.update({f"{name}{j}": arr[:, j] for j in range(arr.shape[1])})
    cols["gamma"] = trace.gamma
    cols["gamma_rx"] = trace.gamma_rx
    for name in _VECTORS[2:]:
        arr = getattr(trace, name)
        cols.update({f"{name}{j}": arr[:, j] for j in range(arr.shape[1])})
    cols["trace_psi"] = np.trace(trace.psi, axis1=1, axis2=2)
    for name in ("stat1", "th1", "stat2", "th2", "xi1", "xi2", "alarm", "safe", "attack_power"):
        cols[name] = getattr(trace, name)
    return cols


def _cell(name: str, value) -> str:
    if name in _FLAGS or name in ("k", "i"):
        return str(int(value))
    return format_float(float(value))


def _write_columns(cols: dict, path: Path) -> None:
    names = list(cols)
    n = len(cols[names[0]])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for j in range(n):
            writer.writerow([_cell(name, cols[name][j]) for name in names])


def write_trace_csv(trace: Trace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_columns(trace_columns(trace), path)
    return path


def read_trace_csv(path) -> dict:
    """Return the columns of a trace file as float arrays keyed by header name."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    data = data.reshape(-1, len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_summary(summary: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def figure_series(cols: dict) -> dict:
    """Plot-ready column groups, one per figure panel."""
    k = cols["k"]
    i = k + 1
    states = {"k": k, **{n: v for n, v in cols.items() if n.startswith("x") and n[1:].isdigit()}}
    return {
        "states": states,
        "attack_power": {"k": k, "attack_power": cols["attack_power"], "trace_psi": cols["trace_psi"]},
        "triggering": {"k": k, "gamma": cols["gamma"], "gamma_rx": cols["gamma_rx"]},
        "cross_test": {"i": i, "stat1": cols["stat1"], "th1": cols["th1"], "xi1": cols["xi1"]},
        "auto_test": {"i": i, "stat2": cols["stat2"], "th2": cols["th2"], "xi2": cols["xi2"]},
    }


def write_figure_series(cols: dict, out_dir, prefix: str = "") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, group in figure_series(cols).items():
        path = out_dir / f"{prefix}{name}.csv"
        _write_columns(group, path)
        written.append(path)
    return written
