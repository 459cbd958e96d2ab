"""Simplex balls: translated and scaled copies of the centred unit simplex.

A simplex ball ``S(x, d)`` with centre ``x`` and radius ``d`` in ``R^n`` is the
set ``{(x - d*1) + n*d*lam : lam in S_n}``.  Its vertices are
``x + d*(n*e_i - 1)`` and every point in it has the same coordinate sum as
``x``.  Intersections of simplex balls (and with the unit simplex) are again
simplex balls, which is what makes them cheap to work with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9

__all__ = [
    "DEFAULT_TOL",
    "SimplexBall",
    "SimplexBallError",
    "InvalidDimensionError",
    "DegenerateBallError",
    "EmptyIntersectionError",
    "unit_simplex_ball",
    "contains",
    "barycentric",
    "intersect_with_unit_simplex",
    "intersect",
    "argmin_linear",
    "diameter",
    "in_unit_simplex",
]


class SimplexBallError(ValueError):
    """Base class for simplex-ball errors."""


class InvalidDimensionError(SimplexBallError):
    pass


class DegenerateBallError(SimplexBallError):
    pass


class EmptyIntersectionError(SimplexBallError):
    pass


@dataclass(frozen=True)
class SimplexBall:
    """Simplex ball ``S(center, radius)``.

    The centre is stored as a read-only float array.
    """

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.array(self.center, dtype=float).ravel()
        if center.size == 0:
            raise InvalidDimensionError("simplex ball needs dimension >= 1")
        radius = float(self.radius)
        if not radius > 0 or not np.isfinite(radius):
            raise DegenerateBallError(f"radius must be positive, got {radius!r}")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def n(self) -> int:
        return self.center.size

    def vertex(self, index: int) -> np.ndarray:
        """Vertex ``center + radius*(n*e_index - 1)``."""
        if not 0 <= index < self.n:
            raise IndexError(f"vertex index {index} out of range for n={self.n}")
        v = self.center - self.radius
        v[index] += self.n * self.radius
        return v

    def vertices(self) -> np.ndarray:
        """All ``n`` vertices as rows of an ``(n, n)`` array."""
        n = self.n
        return (self.center - self.radius)[None, :] + n * self.radius * np.eye(n)

    def point(self, lam) -> np.ndarray:
        """Map barycentric weights ``lam`` (in ``S_n``) to a point of the ball."""
        lam = np.asarray(lam, dtype=float)
        return self.center - self.radius + self.n * self.radius * lam


def unit_simplex_ball(n: int) -> SimplexBall:
    """The unit simplex written as the simplex ball ``S(1/n, 1/n)``."""
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    return SimplexBall(np.full(n, 1.0 / n), 1.0 / n)


def _check_dim(ball: SimplexBall, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (ball.n,):
        raise InvalidDimensionError(
            f"vector of shape {y.shape} does not match ball dimension {ball.n}"
        )
    return y


def barycentric(ball: SimplexBall, y) -> np.ndarray:
    """Barycentric weights of ``y`` with respect to the ball's vertices."""
    y = _check_dim(ball, y)
    return (y - ball.center + ball.radius) / (ball.n * ball.radius)


def contains(ball: SimplexBall, y, tol: float = DEFAULT_TOL) -> bool:
    lam = barycentric(ball, y)
    return bool(lam.min() >= -tol and abs(lam.sum() - 1.0) <= tol)


def in_unit_simplex(x, tol: float = DEFAULT_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(x.ndim == 1 and x.size > 0 and x.min() >= -tol and abs(x.sum() - 1.0) <= tol)


def intersect_with_unit_simplex(ball: SimplexBall, tol: float = DEFAULT_TOL) -> SimplexBall:
    """Return ``S_n ∩ ball`` as a simplex ball.

    The centre must lie in the unit simplex, which guarantees the
    intersection is nonempty.
    """
    x, d, n = ball.center, ball.radius, ball.n
    if not in_unit_simplex(x, tol):
        raise SimplexBallError("ball centre must lie in the unit simplex")
    low = np.minimum(x, d)
    d_hat = low.sum() / n
    if not d_hat > 0:
        raise DegenerateBallError("intersection with the unit simplex is a single point")
    x_hat = x - low + d_hat
    return SimplexBall(x_hat, d_hat)


def intersect(b1: SimplexBall, b2: SimplexBall, tol: float = DEFAULT_TOL) -> SimplexBall:
    """Intersection of two simplex balls whose centres sum to one.

    Raises
    ------
    EmptyIntersectionError
        If the intersection is empty or collapses to a point (radius <= tol).
    """
    if b1.n != b2.n:
        raise InvalidDimensionError(f"dimension mismatch: {b1.n} vs {b2.n}")
    if b1.radius == b2.radius and np.array_equal(b1.center, b2.center):
        # the formula collapses to the input; skip it to avoid rounding
        return b1
    n = b1.n
    low1 = b1.center - b1.radius
    low2 = b2.center - b2.radius
    low = np.maximum(low1, low2)
    # 1 + sum(min(d1 - x1, d2 - x2)) == 1 - sum(max(x1 - d1, x2 - d2))
    # d3 <= min(d1, d2) holds exactly; clamp away the rounding excess
    d3 = min((1.0 - low.sum()) / n, b1.radius, b2.radius)
    if d3 <= tol:
        raise EmptyIntersectionError(f"simplex balls do not intersect (d3={d3:.3e})")
    return SimplexBall(low + d3, d3)


def argmin_linear(ball: SimplexBall, c) -> tuple[np.ndarray, int]:
    """Minimise ``<c, y>`` over the ball.

    Returns the minimising vertex and its index; ties go to the smallest index.
    """
    c = _check_dim(ball, c)
    i = int(np.argmin(c))
    return ball.vertex(i), i


def diameter(ball: SimplexBall) -> float:
    return float(np.sqrt(2.0) * ball.n * ball.radius)
