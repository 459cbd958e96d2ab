"""Refined Simplex Frank-Wolfe: many cheap oracle solves per ball construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..oracles import (
    PolytopeRestrictedBall,
    SimplexRestrictedBall,
    slmo_p_prepare,
    slmo_solve,
)
from ..polytopes import CaratheodoryRep, InfeasiblePointError, Polytope, Simplex
from ..simplex_ball import SimplexBall, SimplexBallError, barycentric, intersect, intersect_with_unit_simplex
from .common import Recorder, SolverError, StepRule, StepSizer, Stop
from .fw import ActiveSet
from .sfw import _initial_bound, _radius, initial_constants

__all__ = ["WarmStart", "solve_rsfw", "solve_rsfw_p", "ACCELERATIONS"]

ACCELERATIONS = ("none", "away", "pairwise")
DROP_TOL = 1e-12


@dataclass(frozen=True)
class WarmStart:
    """Where the inner-loop counter starts after the first outer iteration.

    ``mode=None`` restarts at ``j = 1``; ``"ratio"`` starts at
    ``J_prev / rho_prime``; ``"sqrt"`` at ``sqrt(dbar_k / dbar_{k-1}) J_prev``.
    The counter only matters for the ``simple`` step rule.
    """

    mode: str | None = "ratio"
    rho_prime: float = 2.0

    def __post_init__(self):
        if self.mode not in (None, "ratio", "sqrt"):
            raise SolverError(f"unknown warm start {self.mode!r}")
        if not self.rho_prime > 1:
            raise SolverError("rho_prime must exceed 1")

    def first_index(self, j_prev: int | None, ratio: float = 1.0) -> int:
        if self.mode is None or j_prev is None:
            return 1
        if self.mode == "ratio":
            return max(1, int(j_prev / self.rho_prime))
        return max(1, int(math.sqrt(ratio) * j_prev))


def _theory_J(value: float) -> int:
    return int(math.ceil(value)) if math.isfinite(value) else 2**62


class _BallWeights:
    """Barycentric weights of the inner iterate over the current ball's vertices.

    The active set is the support of ``lam``; the iterate is always
    rebuilt from the weights so the two never drift apart.
    """

    def __init__(self, rb: SimplexRestrictedBall, p):
        lam = np.maximum(barycentric(rb.hat_ball, p), 0.0)
        self.rb = rb
        self.lam = lam / lam.sum()

    def point(self) -> np.ndarray:
        return self.rb.base + self.rb.step * self.lam

    def away_vertex(self, g) -> int:
        active = np.flatnonzero(self.lam > 0)
        return int(active[np.argmax(g[active])])

    def vertex(self, i: int) -> np.ndarray:
        v = self.rb.base.copy()
        v[i] += self.rb.step
        return v

    def clean(self):
        self.lam[self.lam <= DROP_TOL] = 0.0
        self.lam /= self.lam.sum()


def _inner_step(accel, weights, step, p, fp, g, y, s, j):
    """One inner-loop update; returns the new inner iterate."""
    if accel == "none":
        direction = y - p
        delta = step(p, direction, g, j, 1.0, fp)
        return p + delta * direction
    lam = weights.lam
    v = weights.away_vertex(g)
    alpha = lam[v]
    if accel == "away":
        fw_dir = y - p
        away_dir = p - weights.vertex(v)
        # away step when it promises more decrease than the FW step
        if float(g @ away_dir) > float(g @ fw_dir) and alpha < 1:
            scale = alpha / (1.0 - alpha)
            delta = step(p, scale * away_dir, g, j, 1.0, fp)
            gamma = delta * scale
            lam *= 1.0 + gamma
            lam[v] -= gamma
            if delta >= 1.0:
                lam[v] = 0.0
        else:
            delta = step(p, fw_dir, g, j, 1.0, fp)
            lam *= 1.0 - delta
            lam[s] += delta
    else:
        direction = alpha * (y - weights.vertex(v))
        delta = step(p, direction, g, j, 1.0, fp)
        lam[s] += delta * alpha
        lam[v] -= delta * alpha
        if delta >= 1.0 and v != s:
            lam[v] = 0.0
    weights.clean()
    return weights.point()


def solve_rsfw(obj, n: int, rho: float = 2.0, B0=None, inner_rule: StepRule = StepRule("line_search"),
               stop: Stop = Stop(), accel: str = "none", warm: WarmStart = WarmStart(None), *,
               inner_cap: int | None = None, L=None, mu=None, fstar=None, callback=None):
    """Refined Simplex Frank-Wolfe over the unit simplex.

    Starts at the barycentre with radius ``1/n``.  Each outer iteration
    builds one restricted ball and runs a Frank-Wolfe inner loop on it,
    breaking once ``f(p) - C <= mu dhat^2 / (2 rho^2)``.  The inner loop
    may use away (``accel="away"``) or pairwise (``"pairwise"``) corrections.

    Parameters
    ----------
    obj : Objective
    n : int
        Dimension of the simplex.
    rho : float
        Radius contraction ratio, ``> 1``.
    B0 : float, optional
        Lower bound on the optimum.
    inner_rule : StepRule
    stop : Stop
        ``max_iter`` counts outer iterations.
    accel : {"none", "away", "pairwise"}
    warm : WarmStart
    inner_cap : int, optional
        Cap on inner iterations per outer iteration; default ``10 n``.

    Returns
    -------
    x : ndarray
    trace : ConvergenceTrace
        ``inner`` holds the inner-loop length of each outer iteration.
    """
    if not rho > 1:
        raise SolverError("rho must exceed 1")
    if accel not in ACCELERATIONS:
        raise SolverError(f"unknown acceleration {accel!r}")
    P = Simplex(n)
    x = np.full(n, 1.0 / n)
    rec = Recorder(f"rsfw_{accel}", P, stop, "bound", fstar, callback)
    fx, g = obj.value_and_gradient(x)
    L, mu = initial_constants(obj, inner_rule, x, g, P, L, mu)
    B = rec.inject(_initial_bound(fx, g, x, P, B0))
    step = StepSizer(inner_rule, obj, L=L, mu=mu, n=n)
    rec.attach(step)
    J = _theory_J(8 * rho**2 * n**2 * L / mu)
    cap = min(J, inner_cap if inner_cap is not None else 10 * n)
    d = 1.0 / n
    hat = SimplexBall(x, d)
    bar_prev_radius = d
    rec.trace.meta.update(envelope=None if inner_rule.kind == "backtracking" else "rsfw",
                          mu=mu, L=L, n=n, rho=rho, J=J, inner_cap=cap, f0=fx, B0=B)
    k = 0
    if rec.record(k, x, fx, g, B, d):
        return x, rec.trace
    if n == 1:
        rec.trace.status = "converged"
        return x, rec.trace
    j_prev = None
    ratio = 1.0
    while True:
        k += 1
        rb = SimplexRestrictedBall.from_ball(hat)
        rec.slmo1 += 1
        p, fp, gp, C = x, fx, g, B
        weights = _BallWeights(rb, p) if accel != "none" else None
        if weights is not None:
            p = weights.point()
            fp, gp = obj.value_and_gradient(p)
        j0 = warm.first_index(j_prev, ratio)
        count = 0
        capped = True
        j = j0
        while count < cap:
            count += 1
            s = int(np.argmin(gp))
            y = slmo_solve(rb, gp)
            rec.slmo2 += 1
            rec.lmo += 1
            C = rec.inject(max(C, fp + float(gp @ (y - p))))
            threshold = step.mu / (2 * rho**2) * hat.radius**2
            if fp - C <= threshold:
                capped = False
                break
            p = _inner_step(accel, weights, step, p, fp, gp, y, s, j)
            fp, gp = obj.value_and_gradient(p)
            rec.notify(k=k, j=j, p=p, C=C, hat=hat,
                       lam=None if weights is None else weights.lam.copy())
            j += 1
        j_prev = j
        x, fx, g, B = p, fp, gp, C
        d = hat.radius / rho
        rec.inner = count
        try:
            bar = intersect(SimplexBall(x, d), hat, tol=0.0)
            hat = intersect_with_unit_simplex(bar, tol=1e-8)
        except SimplexBallError:
            # only reachable after capped inner loops pushed the optimum out of the ball
            rec.record(k, x, fx, g, B, d, capped)
            rec.trace.status = "ball_collapsed"
            break
        ratio = bar.radius / bar_prev_radius
        bar_prev_radius = bar.radius
        rec.notify(k=k, x=x, B=B, d=d, hat=hat, outer=True)
        if rec.record(k, x, fx, g, B, d, capped):
            break
    return x, rec.trace


def _restricted_active_set(rb: PolytopeRestrictedBall) -> ActiveSet:
    """Active set over P's vertices with ``p = base + scale * point()``."""
    rep = rb.source_rep
    cut = np.minimum(rep.weights, rb.radius_d)
    keep = cut > 0
    return ActiveSet.from_rep(CaratheodoryRep(rep.vertices[keep], cut[keep] / cut[keep].sum()))


def _polytope_inner_step(accel, active, rb, step, p, fp, g, s, j):
    base, scale = rb.base_point, rb.scale
    if accel == "none":
        direction = base + scale * s - p
        delta = step(p, direction, g, j, 1.0, fp)
        return p + delta * direction
    key, a, alpha = active.away_atom(g)
    if accel == "away":
        q = active.point()
        fw_dir = scale * (s - q)
        away_dir = scale * (q - a)
        if float(g @ away_dir) < float(g @ fw_dir) and alpha < 1:
            max_step = alpha / (1.0 - alpha)
            delta = step(p, away_dir, g, j, max_step, fp)
            active.away_update(key, delta, drop=delta >= max_step)
        else:
            delta = step(p, fw_dir, g, j, 1.0, fp)
            active.fw_update(s, delta)
    else:
        delta = step(p, scale * (s - a), g, j, alpha, fp)
        active.pairwise_update(s, key, delta, drop=delta >= alpha)
    return base + scale * active.point()


def solve_rsfw_p(obj, P: Polytope, x0, rho: float = 2.0, B0=None,
                 inner_rule: StepRule = StepRule("line_search"), stop: Stop = Stop(),
                 warm: WarmStart = WarmStart(None), accel: str = "none", *,
                 inner_cap: int | None = None, L=None, mu=None, fstar=None, callback=None):
    """Refined Simplex Frank-Wolfe over a general polytope.

    One oracle preparation per outer iteration from the Carathéodory
    representation of ``x_{k-1}``; the inner loop only calls the cheap
    solve phase (one LMO plus a vector update).  With ``accel`` the inner
    loop keeps an active set of polytope vertices inside the restricted
    ball and takes away or pairwise steps.  See :func:`solve_rsfw`.
    """
    if not rho > 1:
        raise SolverError("rho must exceed 1")
    if accel not in ACCELERATIONS:
        raise SolverError(f"unknown acceleration {accel!r}")
    x = np.array(x0, dtype=float)
    if not P.contains(x):
        raise InfeasiblePointError("x0 must lie in the polytope")
    geo = P.geometry()
    n, D, eta = P.n, geo.diameter_D, geo.eta
    rec = Recorder("rsfw_p" if accel == "none" else f"rsfw_p_{accel}", P, stop, "bound",
                   fstar, callback)
    fx, g = obj.value_and_gradient(x)
    L, mu = initial_constants(obj, inner_rule, x, g, P, L, mu)
    B = rec.inject(_initial_bound(fx, g, x, P, B0))
    step = StepSizer(inner_rule, obj, L=L, mu=mu, n=n, eta=eta)
    rec.attach(step)
    J = _theory_J(4 * rho**2 * (n + 1) ** 2 * eta**2 * L / mu)
    cap = min(J, inner_cap if inner_cap is not None else 10 * n)
    d = eta / D * _radius(fx, B, mu)
    rec.trace.meta.update(envelope=None if inner_rule.kind == "backtracking" else "rsfw_p",
                          mu=mu, L=L, n=n, eta=eta, D=D, rho=rho, J=J, inner_cap=cap,
                          f0=fx, B0=B, gap0=fx - B, d0=d)
    k = 0
    if rec.record(k, x, fx, g, B, d):
        return x, rec.trace
    j_prev = None
    while True:
        k += 1
        if d <= 0:
            rec.trace.status = "converged"
            break
        rep = P.caratheodory(x)
        rb = slmo_p_prepare(rep, d)
        rec.slmo1 += 1
        p, fp, gp, C = x, fx, g, B
        active = _restricted_active_set(rb) if accel != "none" else None
        j = warm.first_index(j_prev, 1.0 / rho)
        count = 0
        capped = True
        while count < cap:
            count += 1
            # solve phase inlined to keep the LMO vertex for the update
            s = P.lmo(gp)
            y = rb.base_point + rb.scale * s
            rec.slmo2 += 1
            rec.lmo += 1
            C = rec.inject(max(C, fp + float(gp @ (y - p))))
            threshold = step.mu / (2 * rho**2 * eta**2) * d**2 * D**2
            if fp - C <= threshold:
                capped = False
                break
            p = _polytope_inner_step(accel, active, rb, step, p, fp, gp, s, j)
            fp, gp = obj.value_and_gradient(p)
            rec.notify(k=k, j=j, p=p, C=C, active=active, rb=rb)
            j += 1
        j_prev = j
        x, fx, g, B = p, fp, gp, C
        d = d / rho
        rec.inner = count
        rec.notify(k=k, x=x, B=B, d=d, outer=True)
        if rec.record(k, x, fx, g, B, d, capped):
            break
    return x, rec.trace
