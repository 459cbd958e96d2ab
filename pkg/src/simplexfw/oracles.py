"""Simplex-ball linear minimization oracles and projection baselines.

Both oracles come in two phases.  ``*_prepare`` builds the restricted ball
once (the expensive part); ``*_solve`` then answers linear queries over it
with one plain LMO call and one vector addition, so it can be repeated many
times against the same ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polytopes import (
    CaratheodoryRep,
    FlowPolytope,
    Hypercube,
    L1Ball,
    Polytope,
    PolytopeError,
    Simplex,
)
from .simplex_ball import (
    DEFAULT_TOL,
    SimplexBall,
    SimplexBallError,
    in_unit_simplex,
    intersect_with_unit_simplex,
)

__all__ = [
    "SimplexRestrictedBall",
    "PolytopeRestrictedBall",
    "UnsupportedOperationError",
    "slmo_prepare",
    "slmo_solve",
    "slmo",
    "slmo_p_prepare",
    "slmo_p_solve",
    "slmo_p",
    "project",
    "project_simplex",
]


class UnsupportedOperationError(NotImplementedError):
    pass


@dataclass(frozen=True)
class SimplexRestrictedBall:
    """``S(x, d) ∩ S_n`` as the simplex ball ``hat_ball``.

    ``base`` is ``hat_center - hat_radius``, the offset added to every answer.
    """

    hat_ball: SimplexBall
    base: np.ndarray
    step: float

    @classmethod
    def from_ball(cls, hat: SimplexBall) -> "SimplexRestrictedBall":
        base = hat.center - hat.radius
        base.setflags(write=False)
        return cls(hat, base, hat.n * hat.radius)

    @property
    def n(self) -> int:
        return self.hat_ball.n


@dataclass(frozen=True)
class PolytopeRestrictedBall:
    """Restricted ball of a polytope point given by its Carathéodory representation.

    Answers have the form ``base_point + scale * v`` with ``v`` an LMO vertex.
    """

    base_point: np.ndarray
    scale: float
    source_rep: CaratheodoryRep
    radius_d: float

    @property
    def n(self) -> int:
        return self.base_point.size


def slmo_prepare(x, d: float, tol: float = DEFAULT_TOL) -> SimplexRestrictedBall:
    """Intersect ``S(x, d)`` with the unit simplex."""
    x = np.asarray(x, dtype=float)
    if not in_unit_simplex(x, tol):
        raise SimplexBallError("slmo needs a point of the unit simplex")
    if not d > 0:
        raise SimplexBallError(f"radius must be positive, got {d!r}")
    return SimplexRestrictedBall.from_ball(intersect_with_unit_simplex(SimplexBall(x, d), tol))


def slmo_solve(rb: SimplexRestrictedBall, c) -> np.ndarray:
    """Minimise ``<c, y>`` over the restricted ball: one argmin, one vector add."""
    i = np.argmin(c)
    y = rb.base.copy()
    y[i] += rb.step
    return y


def slmo(x, d: float, c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    if c.shape != x.shape:
        raise SimplexBallError(f"dimension mismatch: {c.shape} vs {x.shape}")
    return slmo_solve(slmo_prepare(x, d), c)


def slmo_p_prepare(rep: CaratheodoryRep, d: float) -> PolytopeRestrictedBall:
    """Shrink every weight by ``min(weight, d)``; the removed mass is ``scale``."""
    if len(rep) == 0:
        raise PolytopeError("empty representation")
    if not d > 0:
        raise PolytopeError(f"radius must be positive, got {d!r}")
    w = rep.weights
    cut = np.minimum(w, d)
    base = rep.combine(w - cut)
    base.setflags(write=False)
    return PolytopeRestrictedBall(base, float(cut.sum()), rep, float(d))


def slmo_p_solve(rb: PolytopeRestrictedBall, P: Polytope, c) -> np.ndarray:
    v = P.lmo(c)
    return rb.base_point + rb.scale * v


def slmo_p(P: Polytope, rep: CaratheodoryRep, d: float, c) -> np.ndarray:
    return slmo_p_solve(slmo_p_prepare(rep, d), P, c)


def project_simplex(z, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{y >= 0, sum(y) = radius}`` by sort and threshold."""
    z = np.asarray(z, dtype=float)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - radius
    ks = np.arange(1, z.size + 1)
    rho = np.flatnonzero(u - css / ks > 0)[-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(z - theta, 0.0)


def project(P: Polytope, z) -> np.ndarray:
    """Euclidean projection onto ``P`` (simplex, hypercube and l1-ball only)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (P.n,):
        raise PolytopeError(f"expected vector of length {P.n}, got shape {z.shape}")
    if isinstance(P, Hypercube):
        return np.clip(z, 0.0, 1.0)
    if isinstance(P, Simplex):
        return project_simplex(z)
    if isinstance(P, L1Ball):
        if np.abs(z).sum() <= 1.0:
            return z.copy()
        return np.sign(z) * project_simplex(np.abs(z))
    if isinstance(P, FlowPolytope):
        raise UnsupportedOperationError("projection onto the flow polytope is not provided")
    raise UnsupportedOperationError(f"no projection for {type(P).__name__}")
