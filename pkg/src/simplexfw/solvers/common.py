"""Step-size rules, stopping criteria, traces and convergence envelopes."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..polytopes import Polytope

__all__ = [
    "SolverError",
    "InvalidBoundError",
    "NumericalFailureError",
    "StepRule",
    "Stop",
    "StepSizer",
    "ConvergenceTrace",
    "TRACE_COLUMNS",
    "backtracking_routine",
    "golden_section",
    "default_lower_bound",
    "envelope_bounds",
    "envelope_violations",
    "estimate_smoothness",
    "Recorder",
]

STEP_KINDS = ("simple", "line_search", "short", "constant_sfw", "constant_sfwp", "backtracking")
TRACE_COLUMNS = ("k", "f", "gap", "B", "d", "time_ns", "lmo", "slmo2", "inner")


class SolverError(ValueError):
    pass


class InvalidBoundError(SolverError):
    pass


class NumericalFailureError(RuntimeError):
    pass


@dataclass(frozen=True)
class StepRule:
    """Step-size policy.

    ``simple`` is ``2/(k+1)``; ``short`` is the smoothness-based step
    ``min(1, <-g, dir> / (L ||dir||^2))``; ``constant_sfw`` and
    ``constant_sfwp`` are the fixed steps ``mu/(2 L n^2)`` and
    ``mu/(2 L (n+1)^2 eta^2)``; ``backtracking`` adapts ``L`` and ``mu``.
    """

    kind: str = "line_search"
    tau1: float = 2.0
    tau2: float = 0.9

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise SolverError(f"unknown step rule {self.kind!r}; choose from {STEP_KINDS}")
        if self.kind == "backtracking" and not (self.tau1 > 1 and 0 < self.tau2 <= 1):
            raise SolverError("backtracking needs tau1 > 1 and 0 < tau2 <= 1")


@dataclass(frozen=True)
class Stop:
    """Stopping rule.

    ``measure`` is ``"gap"`` (Frank-Wolfe gap over the whole polytope),
    ``"bound"`` (``f(x_k) - B_k``) or ``None`` for the solver's default.
    """

    tol: float = 1e-6
    max_iter: int = 1000
    measure: str | None = None
    max_time: float | None = None

    def __post_init__(self):
        if self.measure not in (None, "gap", "bound"):
            raise SolverError(f"unknown stop measure {self.measure!r}")
        if self.max_iter < 0:
            raise SolverError("max_iter must be nonnegative")


def golden_section(phi, lo: float, hi: float, tol: float = 1e-10, max_evals: int = 100) -> float:
    """Minimise a unimodal scalar function on ``[lo, hi]``."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = phi(c), phi(d)
    evals = 2
    while b - a > tol and evals < max_evals:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = phi(d)
        evals += 1
    t = 0.5 * (a + b)
    # endpoints are not sampled by the bracket
    cands = [(phi(t), t), (phi(lo), lo), (phi(hi), hi)]
    return min(cands)[1]


def backtracking_routine(obj, x, direction, L_prev: float, mu_prev: float, max_step: float,
                         tau1: float = 2.0, tau2: float = 0.9, max_iter: int = 60,
                         fx: float | None = None, grad=None):
    """Adaptive step with local estimates of ``L`` and ``mu``.

    Returns ``(delta, L_new, mu_new)``.  The accepted step satisfies
    ``f(x + delta*dir) <= f(x) + delta*<g, dir> + delta^2 L_new/2 ||dir||^2``.
    A non-descent direction returns ``delta = 0`` with the estimates unchanged.
    """
    if not (tau1 > 1 and tau2 <= 1 and L_prev > 0 and mu_prev > 0):
        raise SolverError("backtracking needs tau1 > 1, tau2 <= 1 and positive estimates")
    if fx is None:
        fx = obj.value(x)
    if grad is None:
        grad = obj.gradient(x)
    slope = float(grad @ direction)
    nd2 = float(direction @ direction)
    if slope >= 0 or nd2 == 0:
        return 0.0, L_prev, mu_prev
    L = tau2 * L_prev
    mu = mu_prev / tau2
    delta = min(-slope / (L * nd2), max_step)
    for _ in range(max_iter):
        f_new = obj.value(x + delta * direction)
        if not f_new > fx + delta * slope + 0.5 * delta**2 * L * nd2:
            return delta, L, mu
        L *= tau1
        mu = min(2.0 * (f_new - fx - delta * slope) / (delta**2 * nd2), mu)
        delta = min(-slope / (L * nd2), max_step)
    raise NumericalFailureError("backtracking exceeded its iteration cap")


def estimate_smoothness(obj, x, direction, eps: float = 1e-3) -> float:
    """Secant estimate ``||g(x + eps*dir) - g(x)|| / (eps ||dir||)``."""
    nd = float(np.linalg.norm(direction))
    if nd == 0:
        return 1.0
    dg = obj.gradient(x + eps * direction) - obj.gradient(x)
    est = float(np.linalg.norm(dg) / (eps * nd))
    return est if est > 0 else 1.0


class StepSizer:
    """Evaluates a :class:`StepRule`; keeps the backtracking estimates between calls."""

    def __init__(self, rule: StepRule, obj, *, L=None, mu=None, n=None, eta=None):
        self.rule = rule
        self.obj = obj
        self.L = L
        self.mu = mu
        self.n = n
        self.eta = eta
        self.history = []
        if rule.kind in ("short", "constant_sfw", "constant_sfwp") and not L:
            raise SolverError(f"step rule {rule.kind!r} needs the smoothness constant L")
        if rule.kind in ("constant_sfw", "constant_sfwp") and not mu:
            raise SolverError(f"step rule {rule.kind!r} needs the strong convexity constant mu")
        if rule.kind == "constant_sfwp" and not eta:
            raise SolverError("constant_sfwp needs eta")

    def __call__(self, x, direction, grad, k: int, max_step: float = 1.0, fx=None) -> float:
        kind = self.rule.kind
        if kind == "simple":
            return min(max_step, 2.0 / (k + 1))
        if kind == "line_search":
            t = self.obj.exact_linesearch(x, direction, max_step, grad)
            if t is None:
                t = golden_section(lambda s: self.obj.value(x + s * direction), 0.0, max_step)
            return float(min(max(t, 0.0), max_step))
        if kind == "short":
            slope = -float(grad @ direction)
            nd2 = float(direction @ direction)
            if slope <= 0 or nd2 == 0:
                return 0.0
            return min(max_step, slope / (self.L * nd2))
        if kind == "constant_sfw":
            return min(max_step, self.mu / (2 * self.L * self.n**2))
        if kind == "constant_sfwp":
            return min(max_step, self.mu / (2 * self.L * (self.n + 1) ** 2 * self.eta**2))
        # backtracking
        if fx is None:
            fx = self.obj.value(x)
        delta, L, mu = backtracking_routine(self.obj, x, direction, self.L, self.mu, max_step,
                                            self.rule.tau1, self.rule.tau2, fx=fx, grad=grad)
        # mu is an estimate of the smallest curvature; keep it below the largest
        self.L, self.mu = L, min(mu, L)
        if delta > 0:
            self.history.append({
                "delta": delta, "L": L, "f_x": fx,
                "f_new": self.obj.value(x + delta * direction),
                "slope": float(grad @ direction),
                "dir_norm2": float(direction @ direction),
            })
        return delta


def default_lower_bound(fx: float, grad, x, P: Polytope) -> float:
    """``f(x) + <g, lmo(g) - x>``, valid for any convex ``f``."""
    return float(fx + grad @ (P.lmo(grad) - x))


@dataclass
class ConvergenceTrace:
    """Per-iteration records with columns :data:`TRACE_COLUMNS`.

    ``meta`` holds the constants needed to evaluate the theoretical envelope.
    ``inner_capped[i]`` is true when row ``i``'s inner loop stopped at its cap
    rather than at its break test.
    """

    solver: str
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    inner_capped: list = field(default_factory=list)
    slmo1: list = field(default_factory=list)
    status: str = "running"

    def append(self, k, f, gap, B, d, time_ns, lmo, slmo2, inner, capped=False, slmo1=0):
        self.rows.append((int(k), float(f), float(gap), float(B), float(d), int(time_ns),
                          int(lmo), int(slmo2), int(inner)))
        self.inner_capped.append(bool(capped))
        self.slmo1.append(int(slmo1))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = TRACE_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def __getattr__(self, name):
        if name in TRACE_COLUMNS:
            return self.column(name)
        raise AttributeError(name)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for r in self.rows:
                w.writerow([r[0], repr(r[1]), repr(r[2]), repr(r[3]), repr(r[4]), *r[5:]])

    @classmethod
    def from_csv(cls, path, solver: str | None = None) -> "ConvergenceTrace":
        tr = cls(solver or Path(path).stem)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != TRACE_COLUMNS:
                raise ValueError(f"{path}: not a trace file")
            for r in reader:
                tr.append(int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4]),
                          int(r[5]), int(r[6]), int(r[7]), int(r[8]))
        return tr

    def iterations_to(self, tol: float, column: str = "gap") -> int | None:
        i = TRACE_COLUMNS.index(column)
        for r in self.rows:
            if r[i] <= tol:
                return r[0]
        return None


def envelope_bounds(trace: ConvergenceTrace) -> np.ndarray | None:
    """Theoretical upper bounds on ``f(x_k) - B_k`` for each trace row."""
    m = trace.meta
    kind = m.get("envelope")
    if kind is None or not len(trace):
        return None
    k = trace.column("k")
    if kind == "sfw":
        rate = m["mu"] / (4 * m["L"] * m["n"] ** 2)
        return 0.5 * m["mu"] * m["d0"] ** 2 * np.exp(-rate * k)
    if kind == "sfw_p":
        rate = m["mu"] / (4 * m["L"] * m["eta"] ** 2 * (m["n"] + 1) ** 2)
        return 0.5 * m["mu"] * m["d0"] ** 2 * np.exp(-rate * k)
    if kind == "rsfw":
        with np.errstate(over="ignore"):
            bound = m["mu"] / (2 * m["n"] ** 2 * m["rho"] ** (2 * k))
        # the guarantee starts at k = 1
        bound[k < 1] = np.inf
        return bound
    if kind == "rsfw_p":
        return m["gap0"] * m["rho"] ** (-2 * k)
    raise ValueError(f"unknown envelope {kind!r}")


def envelope_violations(trace: ConvergenceTrace, rtol: float = 1e-9, atol: float = 1e-12) -> int | None:
    bound = envelope_bounds(trace)
    if bound is None:
        return None
    excess = trace.column("f") - trace.column("B")
    return int(np.sum(excess > bound * (1 + rtol) + atol))


class Clock:
    """Monotonic stopwatch that can exclude monitoring work."""

    def __init__(self):
        self.start = time.perf_counter_ns()
        self.excluded = 0

    def elapsed(self) -> int:
        return time.perf_counter_ns() - self.start - self.excluded

    def exclude(self):
        return _Excluded(self)


class _Excluded:
    def __init__(self, clock):
        self.clock = clock

    def __enter__(self):
        self.t = time.perf_counter_ns()

    def __exit__(self, *exc):
        self.clock.excluded += time.perf_counter_ns() - self.t


class Recorder:
    """Shared bookkeeping for a solver run.

    Computes the monitored Frank-Wolfe gap ``<g, x - lmo(g)>`` outside the
    timed region, appends trace rows and evaluates the stopping rule.
    """

    def __init__(self, solver: str, P: Polytope, stop: Stop, default_measure: str,
                 fstar: float | None = None, callback=None):
        self.trace = ConvergenceTrace(solver)
        self.P = P
        self.stop = stop
        self.measure = stop.measure or default_measure
        self.fstar = fstar
        self.callback = callback
        self.clock = Clock()
        self.lmo = 0
        self.slmo1 = 0
        self.slmo2 = 0
        self.inner = 0

    def fw_gap(self, x, g) -> float:
        with self.clock.exclude():
            return float(g @ (x - self.P.lmo(g)))

    def inject(self, B: float) -> float:
        return B if self.fstar is None else max(B, self.fstar)

    def attach(self, step: StepSizer):
        """Expose the accepted backtracking steps as ``trace.meta["step_history"]``."""
        self.trace.meta["step_history"] = step.history

    def record(self, k, x, fx, g, B, d, capped=False) -> bool:
        """Append a row for iterate ``x`` and return True when the run should stop."""
        if self.stop.max_iter == 0:
            self.trace.status = "max_iter"
            return True
        gap = self.fw_gap(x, g)
        self.trace.append(k, fx, gap, B, d, self.clock.elapsed(), self.lmo, self.slmo2,
                          self.inner, capped, self.slmo1)
        value = gap if self.measure == "gap" else fx - B
        if value <= self.stop.tol:
            self.trace.status = "converged"
            return True
        if k >= self.stop.max_iter:
            self.trace.status = "max_iter"
            return True
        if self.stop.max_time is not None and self.clock.elapsed() > self.stop.max_time * 1e9:
            self.trace.status = "max_time"
            return True
        return False

    def notify(self, **info):
        if self.callback is not None:
            with self.clock.exclude():
                self.callback(info)
