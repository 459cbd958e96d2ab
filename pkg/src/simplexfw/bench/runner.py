"""Experiment suites: one problem, several solver configurations, repeated seeds."""

from __future__ import annotations

import csv
import json
import re
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..problems import ProblemInstance, make_instance
from ..solvers import (
    Stop,
    StepRule,
    WarmStart,
    envelope_violations,
    solve_afw,
    solve_fw,
    solve_pfw,
    solve_rsfw,
    solve_rsfw_p,
    solve_sfw,
    solve_sfw_p,
)
from ..polytopes import Simplex

__all__ = ["ExperimentSpec", "run_solver", "run_experiment", "SUMMARY_FIELDS", "SOLVERS"]

SOLVERS = ("fw", "afw", "pfw", "sfw", "sfw_p", "rsfw", "rsfw_p")
SUMMARY_FIELDS = ("solver", "rep", "seed", "status", "iterations", "iters_to_tol",
                  "time_to_tol_s", "final_f", "final_gap", "envelope_violations", "trace", "error")


@dataclass
class ExperimentSpec:
    """Problem config, solver configs, repetitions and output directory.

    Solver configs are dicts with keys ``solver``, ``step_rule``, ``rho``,
    ``rho_prime``, ``B0`` (``"lmo"``, ``"fstar"`` or a number), ``tol``,
    ``max_iter``, ``inner_cap``, ``warm_start``, ``accel``, ``measure``,
    ``max_time``, ``inject_fstar`` and an optional display ``name``.
    """

    problem: dict
    solvers: list
    repetitions: int = 1
    seed: int = 0
    out: str | None = None
    tol: float = 1e-6

    def __post_init__(self):
        if "kind" not in self.problem:
            raise ValueError("problem config needs a 'kind'")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        names = [cell_name(c) for c in self.solvers]
        if len(set(names)) != len(names):
            raise ValueError(f"solver names must be unique, got {names}")
        for cfg in self.solvers:
            if cfg.get("solver") not in SOLVERS:
                raise ValueError(f"unknown solver {cfg.get('solver')!r}")
            if cfg["solver"] in ("sfw", "rsfw") and self.problem["kind"] != "simplex_least_squares":
                raise ValueError(f"{cfg['solver']} only runs on the unit simplex")

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            cfg = json.load(fh)
        return cls(**cfg)


def cell_name(cfg: dict) -> str:
    if "name" in cfg:
        return str(cfg["name"])
    parts = [cfg.get("solver", "?")]
    if cfg.get("accel", "none") != "none":
        parts.append(cfg["accel"])
    if "step_rule" in cfg:
        parts.append(cfg["step_rule"])
    return re.sub(r"[^A-Za-z0-9_.-]", "_", "_".join(parts))


def _initial_bound(cfg, inst: ProblemInstance):
    policy = cfg.get("B0", "lmo")
    if policy == "lmo" or policy is None:
        return None
    if policy == "fstar":
        if inst.known_fstar is None:
            raise ValueError("B0='fstar' needs a problem with a known optimum")
        return inst.known_fstar
    return float(policy)


def run_solver(cfg: dict, inst: ProblemInstance):
    """Run one solver configuration on an instance; returns ``(x, trace)``."""
    obj, P, x0 = inst.objective, inst.polytope, inst.x0
    solver = cfg["solver"]
    rule = StepRule(cfg.get("step_rule", "line_search"),
                    cfg.get("tau1", 2.0), cfg.get("tau2", 0.9))
    stop = Stop(cfg.get("tol", 1e-6), int(cfg.get("max_iter", 1000)), cfg.get("measure"),
                cfg.get("max_time"))
    fstar = inst.known_fstar if cfg.get("inject_fstar") else None
    B0 = _initial_bound(cfg, inst)
    warm = WarmStart(cfg.get("warm_start"), cfg.get("rho_prime", 2.0))
    rho = cfg.get("rho", 2.0)
    accel = cfg.get("accel", "none")
    cap = cfg.get("inner_cap")
    if solver == "fw":
        return solve_fw(obj, P, x0, rule, stop, fstar=fstar)
    if solver == "afw":
        return solve_afw(obj, P, x0, stop, rule, fstar=fstar)
    if solver == "pfw":
        return solve_pfw(obj, P, x0, stop, rule, fstar=fstar)
    if solver == "sfw":
        return solve_sfw(obj, x0, B0, rule, stop, fstar=fstar)
    if solver == "sfw_p":
        return solve_sfw_p(obj, P, x0, B0, rule, stop, fstar=fstar)
    if solver == "rsfw":
        if not isinstance(P, Simplex):
            raise ValueError("rsfw only runs on the unit simplex")
        return solve_rsfw(obj, P.n, rho, B0, rule, stop, accel, warm, inner_cap=cap, fstar=fstar)
    if solver == "rsfw_p":
        return solve_rsfw_p(obj, P, x0, rho, B0, rule, stop, warm, accel, inner_cap=cap,
                            fstar=fstar)
    raise ValueError(f"unknown solver {solver!r}")


@dataclass
class _Cell:
    problem: dict
    solver: dict
    rep: int
    seed: int
    out: str | None
    tol: float
    name: str = field(init=False)

    def __post_init__(self):
        self.name = cell_name(self.solver)


def _run_cell(cell: _Cell) -> dict:
    row = {"solver": cell.name, "rep": cell.rep, "seed": cell.seed, "status": "error",
           "iterations": 0, "iters_to_tol": "", "time_to_tol_s": "", "final_f": "",
           "final_gap": "", "envelope_violations": "", "trace": "", "error": ""}
    try:
        inst = make_instance(cell.problem, cell.seed)
        _, trace = run_solver(cell.solver, inst)
    except Exception as exc:  # recorded per row; the suite keeps going
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["traceback"] = traceback.format_exc()
        return row
    if cell.out is not None:
        path = Path(cell.out) / f"{cell.name}_rep{cell.rep}.csv"
        trace.to_csv(path)
        row["trace"] = path.name
    row["status"] = trace.status
    row["iterations"] = len(trace)
    if len(trace):
        row["final_f"] = trace.rows[-1][1]
        row["final_gap"] = trace.rows[-1][2]
        k = trace.iterations_to(cell.tol)
        if k is not None:
            row["iters_to_tol"] = k
            row["time_to_tol_s"] = trace.rows[k][5] / 1e9
    viol = envelope_violations(trace)
    row["envelope_violations"] = "" if viol is None else viol
    return row


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Run every (solver, repetition) cell; writes traces and ``summary.csv`` to ``spec.out``.

    Repetition ``r`` uses problem seed ``spec.seed + r``.  Rows come back
    sorted by solver name and repetition whatever the execution order.
    """
    if spec.out is not None:
        Path(spec.out).mkdir(parents=True, exist_ok=True)
    cells = [_Cell(spec.problem, cfg, r, spec.seed + r, spec.out, spec.tol)
             for cfg in spec.solvers for r in range(spec.repetitions)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    rows.sort(key=lambda r: (r["solver"], r["rep"]))
    if spec.out is not None:
        write_summary(rows, Path(spec.out) / "summary.csv")
    return rows


def write_summary(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in SUMMARY_FIELDS})


def _fmt(v):
    if isinstance(v, float) and np.isfinite(v):
        return repr(v)
    return v


def experiment_ok(rows: list[dict]) -> bool:
    """All cells finished and no SFW-family trace broke its envelope."""
    for r in rows:
        if r["status"] == "error":
            return False
        if r["envelope_violations"] not in ("", 0):
            return False
    return True
