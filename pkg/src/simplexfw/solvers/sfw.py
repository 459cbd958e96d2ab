"""Simplex Frank-Wolfe on the unit simplex and on general polytopes."""

from __future__ import annotations

import math

import numpy as np

from ..oracles import slmo_p_prepare, slmo_p_solve, slmo_prepare, slmo_solve
from ..polytopes import InfeasiblePointError, Polytope, Simplex
from .common import (
    InvalidBoundError,
    Recorder,
    SolverError,
    StepRule,
    StepSizer,
    Stop,
    default_lower_bound,
    estimate_smoothness,
)

__all__ = ["solve_sfw", "solve_sfw_p", "initial_constants"]

BOUND_SLACK = 1e-12


def initial_constants(obj, rule: StepRule, x0, g0, P: Polytope, L=None, mu=None):
    """Resolve ``(L, mu)`` from arguments, the objective, or a secant guess.

    Only the backtracking rule may start from guesses; every other rule
    needs declared constants.
    """
    L = L if L is not None else obj.smoothness_L
    mu = mu if mu is not None else obj.strong_convexity_mu
    if rule.kind == "backtracking":
        if L is None or mu is None:
            guess = estimate_smoothness(obj, x0, P.lmo(g0) - x0)
            L = guess if L is None else L
            mu = L if mu is None else mu
        return float(L), float(min(mu, L))
    if mu is None or not mu > 0:
        raise SolverError("strong convexity constant mu must be positive (or use backtracking)")
    if L is None:
        raise SolverError("smoothness constant L is unknown (or use backtracking)")
    return float(L), float(mu)


def _initial_bound(fx, g, x, P, B0):
    B = default_lower_bound(fx, g, x, P) if B0 is None else float(B0)
    if B > fx + BOUND_SLACK * max(1.0, abs(fx)):
        raise InvalidBoundError(f"initial bound {B!r} exceeds f(x0) = {fx!r}")
    return B


def _radius(fx, B, mu):
    return math.sqrt(2.0 * max(fx - B, 0.0) / mu)


def solve_sfw(obj, x0, B0=None, rule: StepRule = StepRule("line_search"),
              stop: Stop = Stop(), *, L=None, mu=None, fstar=None, callback=None):
    """Simplex Frank-Wolfe over the unit simplex.

    Each iteration calls the simplex-ball oracle at the current iterate
    with radius ``d = sqrt(2 (f - B) / mu)``, where ``B`` is the best lower
    bound so far.  Stops when ``f - B <= stop.tol`` unless ``stop.measure``
    says otherwise.

    Parameters
    ----------
    obj : Objective
    x0 : array_like
        Start point in the unit simplex.
    B0 : float, optional
        Lower bound on the optimum; defaults to the one-LMO bound at ``x0``.
    rule : StepRule
    stop : Stop
    L, mu : float, optional
        Override the objective's declared constants.
    fstar : float, optional
        Known optimum, injected into the bound when given.
    callback : callable, optional
        Called with a dict after each iteration.

    Returns
    -------
    x : ndarray
    trace : ConvergenceTrace
    """
    x = np.array(x0, dtype=float)
    n = x.size
    P = Simplex(n)
    if not P.contains(x):
        raise InfeasiblePointError("x0 must lie in the unit simplex")
    rec = Recorder("sfw", P, stop, "bound", fstar, callback)
    fx, g = obj.value_and_gradient(x)
    L, mu = initial_constants(obj, rule, x, g, P, L, mu)
    B = rec.inject(_initial_bound(fx, g, x, P, B0))
    d = _radius(fx, B, mu)
    step = StepSizer(rule, obj, L=L, mu=mu, n=n)
    rec.attach(step)
    rec.trace.meta.update(envelope=None if rule.kind == "backtracking" else "sfw",
                          mu=mu, L=L, n=n, d0=d, f0=fx, B0=B)
    k = 0
    if rec.record(k, x, fx, g, B, d):
        return x, rec.trace
    while True:
        k += 1
        if d <= 0:
            rec.trace.status = "converged"
            break
        rb = slmo_prepare(x, d)
        y = slmo_solve(rb, g)
        rec.slmo1 += 1
        rec.slmo2 += 1
        rec.lmo += 1
        B = rec.inject(max(B, fx + float(g @ (y - x))))
        direction = y - x
        delta = step(x, direction, g, k, 1.0, fx)
        x = x + delta * direction
        fx, g = obj.value_and_gradient(x)
        if rule.kind == "backtracking":
            mu = step.mu
        d = _radius(fx, B, mu)
        rec.notify(k=k, x=x, B=B, d=d, y=y, delta=delta)
        if rec.record(k, x, fx, g, B, d):
            break
    return x, rec.trace


def solve_sfw_p(obj, P: Polytope, x0, B0=None, rule: StepRule = StepRule("line_search"),
                stop: Stop = Stop(), *, L=None, mu=None, fstar=None, callback=None):
    """Simplex Frank-Wolfe over a general polytope.

    The iterate is carried as a Carathéodory representation, recomputed
    every iteration; the oracle shrinks its weights by ``(eta/D) d``.
    See :func:`solve_sfw` for the parameters.
    """
    x = np.array(x0, dtype=float)
    if not P.contains(x):
        raise InfeasiblePointError("x0 must lie in the polytope")
    geo = P.geometry()
    n, D, eta = P.n, geo.diameter_D, geo.eta
    rec = Recorder("sfw_p", P, stop, "bound", fstar, callback)
    fx, g = obj.value_and_gradient(x)
    L, mu = initial_constants(obj, rule, x, g, P, L, mu)
    B = rec.inject(_initial_bound(fx, g, x, P, B0))
    d = _radius(fx, B, mu)
    step = StepSizer(rule, obj, L=L, mu=mu, n=n, eta=eta)
    rec.attach(step)
    rec.trace.meta.update(envelope=None if rule.kind == "backtracking" else "sfw_p",
                          mu=mu, L=L, n=n, eta=eta, D=D, d0=d, f0=fx, B0=B)
    rep = P.caratheodory(x)
    k = 0
    if rec.record(k, x, fx, g, B, d):
        return x, rec.trace
    while True:
        k += 1
        if d <= 0:
            rec.trace.status = "converged"
            break
        rb = slmo_p_prepare(rep, eta / D * d)
        y = slmo_p_solve(rb, P, g)
        rec.slmo1 += 1
        rec.slmo2 += 1
        rec.lmo += 1
        B = rec.inject(max(B, fx + float(g @ (y - x))))
        direction = y - x
        delta = step(x, direction, g, k, 1.0, fx)
        x = x + delta * direction
        fx, g = obj.value_and_gradient(x)
        if rule.kind == "backtracking":
            mu = step.mu
        d = _radius(fx, B, mu)
        rep = P.caratheodory(x)
        rec.notify(k=k, x=x, B=B, d=d, y=y, delta=delta, rep=rep)
        if rec.record(k, x, fx, g, B, d):
            break
    return x, rec.trace
