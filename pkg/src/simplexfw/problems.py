"""Objectives and synthetic problem generators.

Instances can be written to a single file: an 8-byte magic, an 8-byte
little-endian header length, a JSON header and then the raw float64 arrays
the header points at.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .polytopes import DagFlowNetwork, FlowPolytope, Hypercube, L1Ball, Polytope, Simplex

__all__ = [
    "Objective",
    "QuadraticObjective",
    "LogisticObjective",
    "ProblemInstance",
    "gen_l1_least_squares",
    "gen_simplex_least_squares",
    "gen_flow_qp",
    "gen_box_qp",
    "gen_logistic",
    "layered_dag",
    "make_instance",
    "save_instance",
    "load_instance",
]


class Objective:
    """Smooth convex objective.

    Subclasses provide ``value`` and ``gradient``; ``smoothness_L`` and
    ``strong_convexity_mu`` are ``None`` when unknown.  ``exact_linesearch``
    returns ``None`` when no closed form is available.
    """

    smoothness_L: float | None = None
    strong_convexity_mu: float | None = None

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)

    def exact_linesearch(self, x, direction, max_step: float = 1.0, grad=None) -> float | None:
        return None


class QuadraticObjective(Objective):
    """``0.5 x'Qx + b'x + const`` or the least-squares form ``||Ax - y||^2``.

    Use :meth:`least_squares` for the second form; ``L`` and ``mu`` are the
    extreme Hessian eigenvalues (``2 lambda(A'A)`` for least squares).
    """

    def __init__(self, Q=None, b=None, const: float = 0.0, *, A=None, y=None,
                 L: float | None = None, mu: float | None = None):
        if (Q is None) == (A is None):
            raise ValueError("give exactly one of Q or A")
        if A is not None:
            self.A = np.asarray(A, dtype=float)
            self.y = np.zeros(self.A.shape[0]) if y is None else np.asarray(y, dtype=float)
            self.Q = None
            self.n = self.A.shape[1]
            hess = 2.0 * self.A.T @ self.A
        else:
            self.Q = np.asarray(Q, dtype=float)
            self.A = None
            self.n = self.Q.shape[0]
            hess = self.Q
        self.b = np.zeros(self.n) if b is None else np.asarray(b, dtype=float)
        self.const = float(const)
        if L is None or mu is None:
            eig = np.linalg.eigvalsh(0.5 * (hess + hess.T))
            L = float(eig[-1]) if L is None else L
            mu = float(max(eig[0], 0.0)) if mu is None else mu
        self.smoothness_L = float(L)
        self.strong_convexity_mu = float(mu)

    @classmethod
    def least_squares(cls, A, y) -> "QuadraticObjective":
        return cls(A=A, y=y)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.A is not None:
            r = self.A @ x - self.y
            return float(r @ r + self.b @ x + self.const)
        return float(0.5 * x @ (self.Q @ x) + self.b @ x + self.const)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.A is not None:
            return 2.0 * (self.A.T @ (self.A @ x - self.y)) + self.b
        return self.Q @ x + self.b

    def value_and_gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.A is not None:
            r = self.A @ x - self.y
            return float(r @ r + self.b @ x + self.const), 2.0 * (self.A.T @ r) + self.b
        Qx = self.Q @ x
        return float(0.5 * x @ Qx + self.b @ x + self.const), Qx + self.b

    def curvature(self, direction) -> float:
        """``direction' H direction``."""
        if self.A is not None:
            Ad = self.A @ direction
            return float(2.0 * Ad @ Ad)
        return float(direction @ (self.Q @ direction))

    def hessian(self) -> np.ndarray:
        return 2.0 * self.A.T @ self.A if self.A is not None else self.Q

    def exact_linesearch(self, x, direction, max_step=1.0, grad=None):
        if grad is None:
            grad = self.gradient(x)
        slope = float(grad @ direction)
        if slope >= 0:
            return 0.0
        curv = self.curvature(direction)
        if curv <= 0:
            return float(max_step)
        return float(min(max_step, -slope / curv))


class LogisticObjective(Objective):
    """``mean(log(1 + exp(-labels * (A @ x)))) + reg/2 ||x||^2``."""

    def __init__(self, A, labels, reg: float):
        self.A = np.asarray(A, dtype=float)
        self.labels = np.asarray(labels, dtype=float)
        self.reg = float(reg)
        self.m, self.n = self.A.shape
        self.smoothness_L = float(np.linalg.norm(self.A, 2) ** 2 / (4 * self.m) + self.reg)
        self.strong_convexity_mu = self.reg if self.reg > 0 else None

    def value(self, x):
        x = np.asarray(x, dtype=float)
        z = self.labels * (self.A @ x)
        return float(np.mean(np.logaddexp(0.0, -z)) + 0.5 * self.reg * x @ x)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        z = self.labels * (self.A @ x)
        s = -self.labels * expit(-z) / self.m
        return self.A.T @ s + self.reg * x

    def value_and_gradient(self, x):
        x = np.asarray(x, dtype=float)
        z = self.labels * (self.A @ x)
        val = float(np.mean(np.logaddexp(0.0, -z)) + 0.5 * self.reg * x @ x)
        s = -self.labels * expit(-z) / self.m
        return val, self.A.T @ s + self.reg * x


@dataclass
class ProblemInstance:
    objective: Objective
    polytope: Polytope
    x0: np.ndarray
    known_fstar: float | None = None
    seed: int | None = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    solution: np.ndarray | None = None


def _sparse_mask(rng, n, keep_fraction):
    mask = rng.random(n) < keep_fraction
    if not mask.any():
        mask[rng.integers(n)] = True
    return mask


def gen_l1_least_squares(m: int = 400, n: int = 100, sparsity_s: float = 0.7,
                         seed: int = 0, eta: float | None = None) -> ProblemInstance:
    """``min ||Ax - b||^2`` over the unit l1-ball with ``f* = 0`` on the boundary.

    ``sparsity_s`` is the fraction of nonzero entries in the planted solution.
    """
    if not 0 < sparsity_s < 1:
        raise ValueError("sparsity_s must lie in (0, 1)")
    if m < 1 or n < 1:
        raise ValueError("invalid dimensions")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    xs = rng.standard_normal(n) * _sparse_mask(rng, n, sparsity_s)
    xs /= np.abs(xs).sum()
    obj = QuadraticObjective.least_squares(A, A @ xs)
    return ProblemInstance(obj, L1Ball(n, eta=eta), np.zeros(n), 0.0, seed,
                           "l1_least_squares",
                           {"m": m, "n": n, "sparsity_s": sparsity_s, "eta": eta}, xs)


def gen_simplex_least_squares(m: int = 800, n: int = 200, density_d: float = 0.6,
                              seed: int = 0) -> ProblemInstance:
    """``min ||Ax - b||^2`` over the unit simplex with a planted sparse solution."""
    if not 0 < density_d <= 1:
        raise ValueError("density_d must lie in (0, 1]")
    if m < 1 or n < 1:
        raise ValueError("invalid dimensions")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    xs = rng.random(n) * _sparse_mask(rng, n, density_d)
    xs /= xs.sum()
    obj = QuadraticObjective.least_squares(A, A @ xs)
    return ProblemInstance(obj, Simplex(n), np.full(n, 1.0 / n), 0.0, seed,
                           "simplex_least_squares", {"m": m, "n": n, "density_d": density_d}, xs)


def _conditioned_quadratic(n, rng, cond):
    if cond < 1:
        raise ValueError("cond must be >= 1")
    spectrum = np.geomspace(1.0, cond, n)
    Qo, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Q = (Qo * spectrum) @ Qo.T
    Q = 0.5 * (Q + Q.T)
    b = rng.standard_normal(n)
    return QuadraticObjective(Q, b, L=float(spectrum[-1]), mu=float(spectrum[0]))


def gen_flow_qp(network: DagFlowNetwork, seed: int = 0, cond: float = 1e3,
                eta: float | None = None, diameter: float | None = None) -> ProblemInstance:
    """Strongly convex quadratic over the flow polytope; ``f*`` is not known."""
    rng = np.random.default_rng(seed)
    P = FlowPolytope(network, eta=eta, diameter=diameter)
    obj = _conditioned_quadratic(P.n, rng, cond)
    x0 = P.lmo(rng.standard_normal(P.n))
    return ProblemInstance(obj, P, x0, None, seed, "flow_qp",
                           {"cond": cond, "eta": eta, "diameter": diameter})


def gen_box_qp(n: int = 10, seed: int = 0, cond: float = 10.0) -> ProblemInstance:
    """Strongly convex quadratic over the unit hypercube, started at the origin."""
    rng = np.random.default_rng(seed)
    obj = _conditioned_quadratic(n, rng, cond)
    # unconstrained minimiser straddles the box, so only some bounds are active
    centre = rng.uniform(-0.5, 1.5, n)
    obj.b = -obj.Q @ centre
    return ProblemInstance(obj, Hypercube(n), np.zeros(n), None, seed, "box_qp",
                           {"n": n, "cond": cond})


def gen_logistic(m: int = 400, n: int = 100, seed: int = 0, reg: float | None = None,
                 beta: float = 1.0, eta: float | None = None) -> ProblemInstance:
    """Ridge-regularised logistic regression over the l1-ball of radius ``beta``.

    The ball is mapped to the unit ball by absorbing ``beta`` into the data:
    the returned objective is ``f(beta * u)`` in the variable ``u``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    rng = np.random.default_rng(seed)
    reg = 1.0 / n if reg is None else float(reg)
    A = rng.standard_normal((m, n))
    w = rng.standard_normal(n) * _sparse_mask(rng, n, 0.3)
    w *= 4.0 / np.abs(w).sum()
    labels = np.where(A @ w + 0.5 * rng.standard_normal(m) >= 0, 1.0, -1.0)
    obj = LogisticObjective(A * beta, labels, reg * beta**2)
    return ProblemInstance(obj, L1Ball(n, eta=eta), np.zeros(n), None, seed, "logistic",
                           {"m": m, "n": n, "reg": reg, "beta": beta, "eta": eta})


def layered_dag(layers: int = 6, width: int = 6, density: float = 1.0,
                seed: int = 0) -> DagFlowNetwork:
    """Source -> ``layers`` layers of ``width`` nodes -> target.

    Consecutive layers are joined by random edges (each kept with
    probability ``density``), with every node keeping at least one
    incoming and one outgoing edge.
    """
    rng = np.random.default_rng(seed)
    s, t = 0, 1 + layers * width
    node = lambda layer, j: 1 + layer * width + j  # noqa: E731
    edges = [(s, node(0, j)) for j in range(width)]
    for layer in range(layers - 1):
        keep = rng.random((width, width)) < density
        for j in range(width):
            if not keep[j].any():
                keep[j, rng.integers(width)] = True
            if not keep[:, j].any():
                keep[rng.integers(width), j] = True
        edges += [(node(layer, a), node(layer + 1, b))
                  for a in range(width) for b in range(width) if keep[a, b]]
    edges += [(node(layers - 1, j), t) for j in range(width)]
    return DagFlowNetwork(t + 1, tuple(edges), s, t)


_GENERATORS = {
    "l1_least_squares": gen_l1_least_squares,
    "simplex_least_squares": gen_simplex_least_squares,
    "box_qp": gen_box_qp,
    "logistic": gen_logistic,
}


def make_instance(config: dict, seed: int | None = None) -> ProblemInstance:
    """Build an instance from a config dict ``{"kind": ..., **params}``.

    Flow problems take either ``"network_file"`` or ``"layers"/"width"/"density"``.
    """
    cfg = dict(config)
    kind = cfg.pop("kind")
    if seed is not None:
        cfg["seed"] = seed
    if kind == "flow_qp":
        net_file = cfg.pop("network_file", None)
        if net_file is not None:
            net = DagFlowNetwork.load(net_file)
        else:
            net = layered_dag(cfg.pop("layers", 6), cfg.pop("width", 6),
                              cfg.pop("density", 1.0), cfg.pop("network_seed", 0))
        return gen_flow_qp(net, **cfg)
    if kind not in _GENERATORS:
        raise ValueError(f"unknown problem kind {kind!r}")
    return _GENERATORS[kind](**cfg)


_MAGIC = b"SFWINST1"


def save_instance(inst: ProblemInstance, path) -> None:
    """Write an instance as JSON header plus a flat little-endian float64 block."""
    arrays = {"x0": inst.x0}
    obj = inst.objective
    if isinstance(obj, QuadraticObjective):
        objective = {"type": "quadratic", "const": obj.const, "L": obj.smoothness_L,
                     "mu": obj.strong_convexity_mu}
        if obj.A is not None:
            arrays.update(A=obj.A, y=obj.y)
        else:
            arrays["Q"] = obj.Q
        arrays["b"] = obj.b
    elif isinstance(obj, LogisticObjective):
        objective = {"type": "logistic", "reg": obj.reg}
        arrays.update(A=obj.A, labels=obj.labels)
    else:
        raise TypeError(f"cannot serialise objective {type(obj).__name__}")
    if inst.solution is not None:
        arrays["solution"] = inst.solution
    blocks, offset, layout = [], 0, {}
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype="<f8")
        layout[name] = {"shape": list(a.shape), "offset": offset}
        blocks.append(a.tobytes())
        offset += a.nbytes
    header = {
        "kind": inst.kind,
        "params": inst.params,
        "seed": inst.seed,
        "known_fstar": inst.known_fstar,
        "polytope": inst.polytope.describe(),
        "objective": objective,
        "arrays": layout,
    }
    hbytes = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        for blk in blocks:
            fh.write(blk)


def _polytope_from(desc: dict) -> Polytope:
    kind = desc["kind"]
    if kind == "simplex":
        return Simplex(desc["n"])
    if kind == "hypercube":
        return Hypercube(desc["n"])
    if kind == "l1_ball":
        return L1Ball(desc["n"], eta=desc.get("eta"))
    if kind == "flow":
        net = desc["network"]
        network = DagFlowNetwork(net["num_vertices"], tuple(map(tuple, net["edges"])),
                                 net["source"], net["target"])
        return FlowPolytope(network, eta=desc.get("eta"), diameter=desc.get("diameter"))
    raise ValueError(f"unknown polytope kind {kind!r}")


def load_instance(path) -> ProblemInstance:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC:
        raise ValueError("not a serialised problem instance")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16:16 + hlen].decode())
    payload = raw[16 + hlen:]
    arrays = {}
    for name, spec in header["arrays"].items():
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arrays[name] = np.frombuffer(payload, dtype="<f8", count=count,
                                     offset=spec["offset"]).reshape(spec["shape"]).copy()
    od = header["objective"]
    if od["type"] == "quadratic":
        if "A" in arrays:
            obj = QuadraticObjective(b=arrays["b"], const=od["const"], A=arrays["A"],
                                     y=arrays["y"], L=od["L"], mu=od["mu"])
        else:
            obj = QuadraticObjective(arrays["Q"], arrays["b"], od["const"], L=od["L"], mu=od["mu"])
    else:
        obj = LogisticObjective(arrays["A"], arrays["labels"], od["reg"])
    return ProblemInstance(obj, _polytope_from(header["polytope"]), arrays["x0"],
                           header["known_fstar"], header["seed"], header["kind"],
                           header["params"], arrays.get("solution"))
