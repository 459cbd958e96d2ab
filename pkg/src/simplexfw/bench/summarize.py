"""Summary tables and plot-ready series from a directory of trace files."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..solvers import TRACE_COLUMNS, ConvergenceTrace

__all__ = ["load_traces", "summarize", "format_table", "plot_series", "write_plot_series"]

PLOT_FIELDS = ("solver", "file", "k", "time_s", "gap", "f_minus_B")


def _is_trace(path: Path) -> bool:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    return header is not None and tuple(header) == TRACE_COLUMNS


def solver_of(path: Path) -> str:
    """Trace files are named ``<solver>_rep<r>.csv``."""
    stem = path.stem
    head, sep, tail = stem.rpartition("_rep")
    return head if sep and tail.isdigit() else stem


def load_traces(directory) -> list[tuple[str, Path, ConvergenceTrace]]:
    paths = sorted(p for p in Path(directory).glob("*.csv") if _is_trace(p))
    return [(solver_of(p), p, ConvergenceTrace.from_csv(p, solver_of(p))) for p in paths]


def summarize(directory, tol: float = 1e-6) -> list[dict]:
    """One row per trace, grouped by solver name then file name."""
    rows = []
    for solver, path, tr in load_traces(directory):
        row = {"solver": solver, "file": path.name, "rows": len(tr), "final_gap": "",
               "iters_to_tol": "", "time_to_tol_s": ""}
        if len(tr):
            row["final_gap"] = tr.rows[-1][2]
            k = tr.iterations_to(tol)
            if k is not None:
                row["iters_to_tol"] = k
                row["time_to_tol_s"] = tr.rows[k][5] / 1e9
        rows.append(row)
    rows.sort(key=lambda r: (r["solver"], r["file"]))
    return rows


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def format_table(rows: list[dict]) -> str:
    cols = ("solver", "file", "rows", "final_gap", "iters_to_tol", "time_to_tol_s")
    if not rows:
        return "  ".join(cols) + "\n(no traces)"
    cells = [[_cell(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _downsample(num: int, max_points: int) -> np.ndarray:
    if num <= max_points:
        return np.arange(num)
    idx = np.unique(np.geomspace(1, num, max_points).astype(int) - 1)
    return np.union1d(idx, [0, num - 1])


def plot_series(directory, max_points: int = 200) -> list[dict]:
    """Gap against iteration and time, log-spaced down to ``max_points`` per trace."""
    out = []
    for solver, path, tr in load_traces(directory):
        if not len(tr):
            continue
        k, t, gap = tr.column("k"), tr.column("time_ns"), tr.column("gap")
        excess = tr.column("f") - tr.column("B")
        for i in _downsample(len(tr), max_points):
            out.append({"solver": solver, "file": path.name, "k": int(k[i]),
                        "time_s": t[i] / 1e9, "gap": gap[i], "f_minus_B": excess[i]})
    return out


def write_plot_series(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=PLOT_FIELDS)
        w.writeheader()
        w.writerows(rows)
