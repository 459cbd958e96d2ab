"""Classical Frank-Wolfe and its away-step and pairwise variants."""

from __future__ import annotations

import numpy as np

from ..polytopes import CaratheodoryRep, InfeasiblePointError, Polytope
from .common import Recorder, StepRule, StepSizer, Stop, estimate_smoothness

__all__ = ["ActiveSet", "solve_fw", "solve_afw", "solve_pfw"]

DROP_TOL = 1e-12


class ActiveSet:
    """Convex combination of polytope vertices keyed by their coordinates.

    Atoms whose weight falls to ``DROP_TOL`` or below are removed.
    """

    def __init__(self, n: int):
        self.n = n
        self._atoms: dict[bytes, np.ndarray] = {}
        self._weights: dict[bytes, float] = {}

    @staticmethod
    def key(v) -> bytes:
        return np.ascontiguousarray(v, dtype=float).tobytes()

    @classmethod
    def from_rep(cls, rep: CaratheodoryRep) -> "ActiveSet":
        act = cls(rep.ambient_dim)
        for v, w in zip(rep.vertices, rep.weights):
            k = act.key(v)
            act._atoms[k] = np.array(v, dtype=float)
            act._weights[k] = act._weights.get(k, 0.0) + float(w)
        return act

    def __len__(self):
        return len(self._atoms)

    def weights(self) -> np.ndarray:
        return np.array(list(self._weights.values()))

    def vertices(self) -> np.ndarray:
        return np.array(list(self._atoms.values())).reshape(len(self), self.n)

    def point(self) -> np.ndarray:
        return self.weights() @ self.vertices()

    def away_atom(self, g) -> tuple[bytes, np.ndarray, float]:
        """Active atom with the largest ``<g, v>``."""
        keys = list(self._atoms)
        scores = self.vertices() @ g
        k = keys[int(np.argmax(scores))]
        return k, self._atoms[k], self._weights[k]

    def fw_update(self, s, gamma: float):
        """Move ``gamma`` of the mass onto vertex ``s``."""
        if gamma >= 1.0:
            self._atoms.clear()
            self._weights.clear()
        else:
            for k in self._weights:
                self._weights[k] *= 1.0 - gamma
        self._add(s, gamma if gamma < 1.0 else 1.0)
        self._prune()

    def away_update(self, key: bytes, gamma: float, drop: bool):
        for k in self._weights:
            self._weights[k] *= 1.0 + gamma
        self._weights[key] -= gamma
        if drop:
            self._weights[key] = 0.0
        self._prune()

    def pairwise_update(self, s, key: bytes, gamma: float, drop: bool):
        self._add(s, gamma)
        self._weights[key] -= gamma
        if drop:
            self._weights[key] = 0.0
        self._prune()

    def _add(self, v, w: float):
        k = self.key(v)
        if k not in self._atoms:
            self._atoms[k] = np.array(v, dtype=float)
            self._weights[k] = 0.0
        self._weights[k] += w

    def _prune(self):
        for k in [k for k, w in self._weights.items() if w <= DROP_TOL]:
            del self._weights[k]
            del self._atoms[k]
        total = sum(self._weights.values())
        for k in self._weights:
            self._weights[k] /= total


def _check_start(P: Polytope, x0):
    x = np.array(x0, dtype=float)
    if not P.contains(x):
        raise InfeasiblePointError("x0 must lie in the polytope")
    return x


def solve_fw(obj, P: Polytope, x0, rule: StepRule = StepRule("line_search"),
             stop: Stop = Stop(), *, L=None, fstar=None, callback=None):
    """Frank-Wolfe with a plain LMO; stops on the FW gap by default.

    The ``B`` column holds the best FW lower bound ``max_k f(x_k) - gap_k``.
    """
    x = _check_start(P, x0)
    rec = Recorder("fw", P, stop, "gap", fstar, callback)
    L = L if L is not None else obj.smoothness_L
    mu = obj.strong_convexity_mu
    if rule.kind == "backtracking":
        if L is None:
            L = estimate_smoothness(obj, x, P.lmo(obj.gradient(x)) - x)
        mu = min(mu or L, L)
    step = StepSizer(rule, obj, L=L, mu=mu, n=P.n)
    rec.attach(step)
    fx, g = obj.value_and_gradient(x)
    B = rec.inject(fx - rec.fw_gap(x, g))
    k = 0
    if rec.record(k, x, fx, g, B, np.nan):
        return x, rec.trace
    while True:
        k += 1
        s = P.lmo(g)
        rec.lmo += 1
        direction = s - x
        delta = step(x, direction, g, k, 1.0, fx)
        x = x + delta * direction
        fx, g = obj.value_and_gradient(x)
        B = rec.inject(max(B, fx - rec.fw_gap(x, g)))
        rec.notify(k=k, x=x, delta=delta)
        if rec.record(k, x, fx, g, B, np.nan):
            break
    return x, rec.trace


def _corrective(name, obj, P, x0, rule, stop, fstar, callback, active):
    x = _check_start(P, x0)
    if active is None:
        active = ActiveSet.from_rep(P.caratheodory(x))
    x = active.point()
    rec = Recorder(name, P, stop, "gap", fstar, callback)
    L = obj.smoothness_L
    mu = obj.strong_convexity_mu
    if rule.kind == "backtracking":
        if L is None:
            L = estimate_smoothness(obj, x, P.lmo(obj.gradient(x)) - x)
        mu = min(mu or L, L)
    step = StepSizer(rule, obj, L=L, mu=mu, n=P.n)
    rec.attach(step)
    fx, g = obj.value_and_gradient(x)
    B = rec.inject(fx - rec.fw_gap(x, g))
    k = 0
    if rec.record(k, x, fx, g, B, np.nan):
        return x, rec.trace
    while True:
        k += 1
        s = P.lmo(g)
        rec.lmo += 1
        key, v, alpha = active.away_atom(g)
        fw_dir = s - x
        if name == "afw":
            away_dir = x - v
            if float(g @ away_dir) < float(g @ fw_dir) and alpha < 1:
                max_step = alpha / (1.0 - alpha)
                delta = step(x, away_dir, g, k, max_step, fx)
                active.away_update(key, delta, drop=delta >= max_step)
                kind = "drop" if delta >= max_step else "away"
            else:
                delta = step(x, fw_dir, g, k, 1.0, fx)
                active.fw_update(s, delta)
                kind = "fw"
        else:
            direction = s - v
            delta = step(x, direction, g, k, alpha, fx)
            active.pairwise_update(s, key, delta, drop=delta >= alpha)
            kind = "drop" if delta >= alpha else "pairwise"
        x = active.point()
        fx, g = obj.value_and_gradient(x)
        B = rec.inject(max(B, fx - rec.fw_gap(x, g)))
        rec.notify(k=k, x=x, active=active, kind=kind, delta=delta)
        if rec.record(k, x, fx, g, B, np.nan):
            break
    return x, rec.trace


def solve_afw(obj, P: Polytope, x0, stop: Stop = Stop(), rule: StepRule = StepRule("line_search"),
              *, active: ActiveSet | None = None, fstar=None, callback=None):
    """Away-step Frank-Wolfe.

    The active set starts from ``active`` or from a Carathéodory
    representation of ``x0``.  Away steps are clipped at
    ``alpha_v / (1 - alpha_v)``; reaching the clip drops the atom.
    """
    return _corrective("afw", obj, P, x0, rule, stop, fstar, callback, active)


def solve_pfw(obj, P: Polytope, x0, stop: Stop = Stop(), rule: StepRule = StepRule("line_search"),
              *, active: ActiveSet | None = None, fstar=None, callback=None):
    """Pairwise Frank-Wolfe: moves mass from the away atom to the FW vertex.

    Steps are clipped at the away atom's weight ``alpha_v``.
    """
    return _corrective("pfw", obj, P, x0, rule, stop, fstar, callback, active)
