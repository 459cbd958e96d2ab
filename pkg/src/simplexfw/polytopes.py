"""Polytopes with a linear minimization oracle and Carathéodory representations.

Four families are supported: the unit simplex, the unit hypercube, the unit
l1-ball and the s-t flow polytope of a directed acyclic graph.  Each exposes
``lmo`` (a vertex minimising a linear function), ``caratheodory`` (the point
as a convex combination of at most ``n+1`` vertices) and ``geometry`` (the
diameter ``D`` and condition number ``eta`` used by the simplex Frank-Wolfe
solvers).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PolytopeError",
    "InfeasiblePointError",
    "PolytopeGeometry",
    "CaratheodoryRep",
    "Polytope",
    "Simplex",
    "Hypercube",
    "L1Ball",
    "DagFlowNetwork",
    "FlowPolytope",
]

FEAS_TOL = 1e-9


class PolytopeError(ValueError):
    pass


class InfeasiblePointError(PolytopeError):
    pass


@dataclass(frozen=True)
class PolytopeGeometry:
    """Diameter ``D`` and condition number ``eta`` of a polytope.

    ``xi`` and ``psi`` are informational; when both are known
    ``eta == psi * D / xi``.
    """

    diameter_D: float
    eta: float
    xi: float | None = None
    psi: float | None = None

    def __post_init__(self):
        if not self.diameter_D > 0:
            raise PolytopeError("diameter must be positive")
        if not self.eta > 0:
            raise PolytopeError("eta must be positive")


@dataclass(frozen=True)
class CaratheodoryRep:
    """Convex combination ``sum_i weights[i] * vertices[i]``.

    ``vertices`` is a dense ``(k, n)`` array, ``weights`` a positive
    ``(k,)`` array summing to one.
    """

    vertices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if V.shape[0] != w.size:
            raise PolytopeError("number of vertices and weights differ")
        if w.size == 0:
            raise PolytopeError("empty Carathéodory representation")
        if np.any(w <= 0):
            raise PolytopeError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-8:
            raise PolytopeError(f"weights sum to {w.sum()!r}, not 1")
        V.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "weights", w)

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return self.weights.size

    def point(self) -> np.ndarray:
        return self.weights @ self.vertices

    def combine(self, coeffs) -> np.ndarray:
        """``sum_i coeffs[i] * vertices[i]`` for arbitrary coefficients."""
        return np.asarray(coeffs, dtype=float) @ self.vertices


def _from_atoms(vertices, weights, n: int) -> CaratheodoryRep:
    vertices = np.asarray(vertices, dtype=float).reshape(-1, n)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    return CaratheodoryRep(vertices[keep], weights[keep])


class Polytope(ABC):
    """Abstract polytope in ``R^n``."""

    name = "polytope"

    def __init__(self, n: int):
        if int(n) != n or n < 1:
            raise PolytopeError(f"dimension must be a positive integer, got {n!r}")
        self.n = int(n)

    def _check(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n,):
            raise PolytopeError(f"expected vector of length {self.n}, got shape {c.shape}")
        return c

    @abstractmethod
    def lmo(self, c) -> np.ndarray:
        """Vertex minimising ``<c, v>``."""

    @abstractmethod
    def caratheodory(self, x, tol: float = FEAS_TOL) -> CaratheodoryRep:
        """Represent ``x`` with at most ``n + 1`` vertices."""

    @abstractmethod
    def geometry(self) -> PolytopeGeometry:
        ...

    @abstractmethod
    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        ...

    @abstractmethod
    def is_vertex(self, v, tol: float = 1e-12) -> bool:
        ...

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A random feasible point (not uniformly distributed)."""

    def describe(self) -> dict:
        return {"kind": self.name, "n": self.n}

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class Simplex(Polytope):
    """Unit simplex ``{x >= 0, sum(x) = 1}``."""

    name = "simplex"

    def lmo(self, c):
        c = self._check(c)
        v = np.zeros(self.n)
        v[np.argmin(c)] = 1.0
        return v

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        return bool(x.shape == (self.n,) and x.min() >= -tol and abs(x.sum() - 1) <= tol)

    def caratheodory(self, x, tol=FEAS_TOL):
        x = self._check(x)
        if not self.contains(x, tol):
            raise InfeasiblePointError("point is not in the unit simplex")
        support = np.flatnonzero(x > 0)
        V = np.zeros((support.size, self.n))
        V[np.arange(support.size), support] = 1.0
        w = x[support]
        return CaratheodoryRep(V, w / w.sum())

    def geometry(self):
        return PolytopeGeometry(math.sqrt(2.0), math.sqrt(2.0), xi=1.0, psi=1.0)

    def is_vertex(self, v, tol=1e-12):
        v = np.asarray(v, dtype=float)
        return bool(
            v.shape == (self.n,)
            and np.all((np.abs(v) <= tol) | (np.abs(v - 1) <= tol))
            and abs(v.sum() - 1) <= tol
        )

    def sample(self, rng):
        return rng.dirichlet(np.ones(self.n))


class Hypercube(Polytope):
    """Unit hypercube ``[0, 1]^n``."""

    name = "hypercube"

    def lmo(self, c):
        c = self._check(c)
        return (c < 0).astype(float)

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        return bool(x.shape == (self.n,) and x.min() >= -tol and x.max() <= 1 + tol)

    def caratheodory(self, x, tol=FEAS_TOL):
        """Staircase representation over the coordinates sorted in decreasing order."""
        x = self._check(x)
        if not self.contains(x, tol):
            raise InfeasiblePointError("point is not in the unit hypercube")
        x = np.clip(x, 0.0, 1.0)
        n = self.n
        order = np.argsort(-x, kind="stable")
        xs = x[order]
        # row r of the staircase has ones on the r largest coordinates
        weights = np.empty(n + 1)
        weights[0] = 1.0 - xs[0]
        weights[1:n] = xs[:-1] - xs[1:]
        weights[n] = xs[-1]
        keep = np.flatnonzero(weights > 0)
        V = np.zeros((keep.size, n))
        ranks = np.empty(n, dtype=int)
        ranks[order] = np.arange(n)
        V[:] = ranks[None, :] < keep[:, None]
        return CaratheodoryRep(V, weights[keep])

    def geometry(self):
        r = math.sqrt(self.n)
        return PolytopeGeometry(r, r, xi=1.0, psi=1.0)

    def is_vertex(self, v, tol=1e-12):
        v = np.asarray(v, dtype=float)
        return bool(v.shape == (self.n,) and np.all((np.abs(v) <= tol) | (np.abs(v - 1) <= tol)))

    def sample(self, rng):
        x = rng.random(self.n)
        # push a few coordinates onto the boundary
        mask = rng.random(self.n) < 0.2
        x[mask] = np.round(x[mask])
        return x


class L1Ball(Polytope):
    """Unit l1-ball ``{sum |x_i| <= 1}``.

    ``eta`` defaults to ``n``, the safe end of the admissible range; pass a
    smaller value (e.g. ``sqrt(n)``) to override.
    """

    name = "l1_ball"

    def __init__(self, n: int, eta: float | None = None):
        super().__init__(n)
        self.eta = float(self.n if eta is None else eta)

    def lmo(self, c):
        c = self._check(c)
        i = int(np.argmax(np.abs(c)))
        v = np.zeros(self.n)
        v[i] = -1.0 if c[i] > 0 else 1.0
        return v

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        return bool(x.shape == (self.n,) and np.abs(x).sum() <= 1 + tol)

    def caratheodory(self, x, tol=FEAS_TOL):
        x = self._check(x)
        if not self.contains(x, tol):
            raise InfeasiblePointError("point is not in the unit l1-ball")
        n = self.n
        a = np.abs(x)
        total = a.sum()
        if total > 1:
            a = a / total
            total = 1.0
        sign = np.where(x >= 0, 1.0, -1.0)
        s = (1.0 - total) / 2.0
        V = np.zeros((n + 1, n))
        V[np.arange(n), np.arange(n)] = sign
        V[n, n - 1] = -sign[n - 1]
        w = np.empty(n + 1)
        w[:n] = a
        w[n - 1] += s
        w[n] = s
        return _from_atoms(V, w, n)

    def geometry(self):
        return PolytopeGeometry(2.0, self.eta, xi=2.0 / math.sqrt(self.n))

    def is_vertex(self, v, tol=1e-12):
        v = np.asarray(v, dtype=float)
        nz = np.flatnonzero(np.abs(v) > tol)
        return bool(v.shape == (self.n,) and nz.size == 1 and abs(abs(v[nz[0]]) - 1) <= tol)

    def sample(self, rng):
        z = rng.standard_normal(self.n) * (rng.random(self.n) < 0.5)
        z[rng.integers(self.n)] += 1.0
        return z / np.abs(z).sum() * rng.random() ** (1.0 / self.n)

    def describe(self):
        return {"kind": self.name, "n": self.n, "eta": self.eta}


@dataclass(frozen=True)
class DagFlowNetwork:
    """Directed acyclic graph with a source and target; edge ``i`` is coordinate ``i``."""

    num_vertices: int
    edges: tuple
    source: int
    target: int

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        V = self.num_vertices
        if V < 2:
            raise PolytopeError("network needs at least two vertices")
        if not (0 <= self.source < V and 0 <= self.target < V) or self.source == self.target:
            raise PolytopeError("invalid source/target")
        for a, b in edges:
            if not (0 <= a < V and 0 <= b < V) or a == b:
                raise PolytopeError(f"invalid edge ({a}, {b})")
        if not edges:
            raise PolytopeError("network has no edges")
        order = self._topological_order()
        object.__setattr__(self, "topo_order", order)
        fwd = self._reach(self.source, forward=True)
        bwd = self._reach(self.target, forward=False)
        if not fwd[self.target]:
            raise PolytopeError("no s-t path in network")
        dead = [i for i, (a, b) in enumerate(edges) if not (fwd[a] and bwd[b])]
        if dead:
            raise PolytopeError(f"edges {dead[:10]} lie on no s-t path")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def out_edges(self) -> list[list[int]]:
        out = [[] for _ in range(self.num_vertices)]
        for i, (a, _) in enumerate(self.edges):
            out[a].append(i)
        return out

    def in_edges(self) -> list[list[int]]:
        inc = [[] for _ in range(self.num_vertices)]
        for i, (_, b) in enumerate(self.edges):
            inc[b].append(i)
        return inc

    def _topological_order(self) -> tuple:
        indeg = [0] * self.num_vertices
        out = self.out_edges()
        for _, b in self.edges:
            indeg[b] += 1
        stack = [v for v in range(self.num_vertices) if indeg[v] == 0][::-1]
        order = []
        while stack:
            v = stack.pop()
            order.append(v)
            for e in reversed(out[v]):
                b = self.edges[e][1]
                indeg[b] -= 1
                if indeg[b] == 0:
                    stack.append(b)
        if len(order) != self.num_vertices:
            raise PolytopeError("graph contains a cycle")
        return tuple(order)

    def _reach(self, start: int, forward: bool) -> list[bool]:
        adj = self.out_edges() if forward else self.in_edges()
        seen = [False] * self.num_vertices
        seen[start] = True
        stack = [start]
        while stack:
            v = stack.pop()
            for e in adj[v]:
                w = self.edges[e][1] if forward else self.edges[e][0]
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        return seen

    @classmethod
    def from_text(cls, text: str) -> "DagFlowNetwork":
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or len(lines[0]) != 4:
            raise PolytopeError("first line must be 'V E s t'")
        V, E, s, t = (int(v) for v in lines[0])
        if len(lines) - 1 != E:
            raise PolytopeError(f"header declares {E} edges, file has {len(lines) - 1}")
        edges = []
        for parts in lines[1:]:
            if len(parts) != 2:
                raise PolytopeError(f"bad edge line: {' '.join(parts)!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls(V, tuple(edges), s, t)

    @classmethod
    def load(cls, path) -> "DagFlowNetwork":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        rows = [f"{self.num_vertices} {self.num_edges} {self.source} {self.target}"]
        rows += [f"{a} {b}" for a, b in self.edges]
        return "\n".join(rows) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


class FlowPolytope(Polytope):
    """Unit s-t flows of a DAG; vertices are indicator vectors of s-t paths."""

    name = "flow"

    def __init__(self, network: DagFlowNetwork, eta: float | None = None,
                 diameter: float | None = None):
        super().__init__(network.num_edges)
        self.network = network
        edges = network.edges
        self._tail = np.array([a for a, _ in edges])
        self._head = np.array([b for _, b in edges])
        rank = {v: r for r, v in enumerate(network.topo_order)}
        # relaxing edges in order of their tail's topological rank is a valid DAG pass
        self._relax_order = sorted(range(len(edges)), key=lambda e: (rank[edges[e][0]], e))
        self._out = network.out_edges()
        self._in = network.in_edges()
        if diameter is None:
            # two paths of at most L edges differ in at most 2L coordinates
            diameter = math.sqrt(min(2 * self.longest_path_edges(), self.n))
        self._diameter = float(diameter)
        self._eta = float(self._diameter if eta is None else eta)

    def longest_path_edges(self) -> int:
        net = self.network
        best = [-1] * net.num_vertices
        best[net.source] = 0
        for e in self._relax_order:
            a, b = net.edges[e]
            if best[a] >= 0 and best[a] + 1 > best[b]:
                best[b] = best[a] + 1
        return best[net.target]

    def lmo(self, c):
        """Indicator of the cheapest s-t path under edge weights ``c``."""
        c = self._check(c)
        net = self.network
        dist = [math.inf] * net.num_vertices
        pred = [-1] * net.num_vertices
        dist[net.source] = 0.0
        cl = c.tolist()
        edges = net.edges
        for e in self._relax_order:
            a, b = edges[e]
            da = dist[a]
            if da == math.inf:
                continue
            nd = da + cl[e]
            if nd < dist[b]:
                dist[b] = nd
                pred[b] = e
        v = np.zeros(self.n)
        node = net.target
        while node != net.source:
            e = pred[node]
            v[e] = 1.0
            node = edges[e][0]
        return v

    def _conservation_residual(self, x) -> float:
        net = self.network
        bal = np.zeros(net.num_vertices)
        np.add.at(bal, self._tail, x)
        np.add.at(bal, self._head, -x)
        bal[net.source] -= 1.0
        bal[net.target] += 1.0
        return float(np.abs(bal).max())

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,) or x.min() < -tol:
            return False
        return self._conservation_residual(x) <= tol * max(1.0, math.sqrt(self.n))

    def is_vertex(self, v, tol=1e-12):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,) or not np.all((np.abs(v) <= tol) | (np.abs(v - 1) <= tol)):
            return False
        return self._conservation_residual(np.round(v)) <= tol

    def caratheodory(self, x, tol=FEAS_TOL):
        """Path peeling: repeatedly remove the path through the smallest positive edge."""
        x = self._check(x)
        if not self.contains(x, tol):
            raise InfeasiblePointError("point is not a unit s-t flow")
        rep, _ = self.peel(x)
        return rep

    def peel(self, x, zero_tol: float = 1e-13) -> tuple[CaratheodoryRep, int]:
        """Path decomposition of a flow; returns the representation and step count."""
        net = self.network
        edges = net.edges
        r = np.clip(np.asarray(x, dtype=float), 0.0, None)
        r[r <= zero_tol] = 0.0
        paths, weights = [], []
        steps = 0
        while steps < self.n:
            pos = np.flatnonzero(r > 0)
            if pos.size == 0:
                break
            i = int(pos[np.argmin(r[pos])])
            path = self._path_through(i, r)
            w = r[i]
            v = np.zeros(self.n)
            v[path] = 1.0
            r[path] -= w
            r[i] = 0.0
            r[r <= zero_tol] = 0.0
            paths.append(v)
            weights.append(w)
            steps += 1
        w = np.array(weights)
        # flow value is one; absorb accumulated rounding into the weights
        w = w / w.sum()
        return CaratheodoryRep(np.array(paths), w), steps

    def _path_through(self, e0: int, r: np.ndarray) -> list[int]:
        net = self.network
        edges = net.edges
        path = [e0]
        node = edges[e0][0]
        while node != net.source:
            e = self._pick(self._in[node], r)
            path.append(e)
            node = edges[e][0]
        node = edges[e0][1]
        while node != net.target:
            e = self._pick(self._out[node], r)
            path.append(e)
            node = edges[e][1]
        return path

    @staticmethod
    def _pick(candidates: list[int], r: np.ndarray) -> int:
        for e in candidates:
            if r[e] > 0:
                return e
        # only reachable through rounding; fall back to the heaviest edge
        return max(candidates, key=lambda e: r[e])

    def geometry(self):
        return PolytopeGeometry(self._diameter, self._eta, xi=1.0, psi=1.0)

    def sample(self, rng):
        k = int(rng.integers(1, 6))
        w = rng.dirichlet(np.ones(k))
        return sum(wi * self.lmo(rng.standard_normal(self.n)) for wi in w)

    def describe(self):
        return {
            "kind": self.name,
            "n": self.n,
            "eta": self._eta,
            "diameter": self._diameter,
            "network": {
                "num_vertices": self.network.num_vertices,
                "source": self.network.source,
                "target": self.network.target,
                "edges": [list(e) for e in self.network.edges],
            },
        }
