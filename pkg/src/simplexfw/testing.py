"""Test-support oracles: explicit vertex enumeration and finite differences.

Nothing here is used by the solvers.  Vertex sets can be exponential
(the hypercube has ``2^n``), so these helpers are only meant for the small
dimensions used in tests.
"""

from __future__ import annotations

import itertools

import numpy as np

from .polytopes import FlowPolytope, Hypercube, L1Ball, Polytope, Simplex
from .simplex_ball import SimplexBall

__all__ = [
    "ball_vertices",
    "enumerate_vertices",
    "flow_paths",
    "brute_force_lmo",
    "finite_difference_gradient",
    "gradient_check",
    "sample_in_ball",
]


def ball_vertices(ball: SimplexBall) -> np.ndarray:
    """Vertices ``x + d (n e_i - 1)`` built one at a time, independent of ``vertices()``."""
    n, x, d = ball.n, ball.center, ball.radius
    rows = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(x + d * (n * e - np.ones(n)))
    return np.array(rows)


def flow_paths(P: FlowPolytope) -> np.ndarray:
    """Indicator vectors of every s-t path, found by depth-first search."""
    net = P.network
    out = [[] for _ in range(net.num_vertices)]
    for e, (a, _) in enumerate(net.edges):
        out[a].append(e)
    paths = []
    stack = [(net.source, [])]
    while stack:
        node, used = stack.pop()
        if node == net.target:
            v = np.zeros(P.n)
            v[used] = 1.0
            paths.append(v)
            continue
        for e in out[node]:
            stack.append((net.edges[e][1], used + [e]))
    return np.array(paths)


def enumerate_vertices(P: Polytope, max_vertices: int = 1 << 12) -> np.ndarray:
    """All vertices of ``P`` as rows."""
    n = P.n
    if isinstance(P, Simplex):
        return np.eye(n)
    if isinstance(P, L1Ball):
        return np.vstack([np.eye(n), -np.eye(n)])
    if isinstance(P, Hypercube):
        if 2**n > max_vertices:
            raise ValueError(f"hypercube with n={n} has too many vertices to enumerate")
        return np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    if isinstance(P, FlowPolytope):
        V = flow_paths(P)
        if len(V) > max_vertices:
            raise ValueError("too many s-t paths to enumerate")
        return V
    raise TypeError(f"no vertex enumeration for {type(P).__name__}")


def brute_force_lmo(V: np.ndarray, c) -> float:
    """Minimum of ``<c, v>`` over the rows of ``V``."""
    return float(np.min(V @ np.asarray(c, dtype=float)))


def finite_difference_gradient(f, x, h: float | None = None) -> np.ndarray:
    """Central differences with step ``1e-6 (1 + ||x||)`` unless given."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-6 * (1.0 + np.linalg.norm(x))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def gradient_check(obj, x) -> float:
    """Relative error between the analytic and finite-difference gradients."""
    g = obj.gradient(x)
    fd = finite_difference_gradient(obj.value, x)
    scale = max(np.linalg.norm(g), np.linalg.norm(fd), 1e-12)
    return float(np.linalg.norm(g - fd) / scale)


def sample_in_ball(P: Polytope, x, radius: float, rng, size: int, max_tries: int = 200_000):
    """Rejection-sample points of ``P`` within Euclidean distance ``radius`` of ``x``.

    Candidates are ``x + t (z - x)`` with ``z`` drawn from ``P`` and ``t``
    uniform, which keeps them feasible by convexity.  Returns fewer than
    ``size`` points if the budget runs out.
    """
    x = np.asarray(x, dtype=float)
    out = []
    for _ in range(max_tries):
        z = P.sample(rng)
        y = x + rng.random() * (z - x)
        if np.linalg.norm(y - x) <= radius:
            out.append(y)
            if len(out) == size:
                break
    return np.array(out).reshape(-1, x.size)
