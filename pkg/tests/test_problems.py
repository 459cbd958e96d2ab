import numpy as np
import pytest

from simplexfw.polytopes import FlowPolytope, Hypercube, L1Ball, Simplex
from simplexfw.problems import (
    LogisticObjective,
    QuadraticObjective,
    gen_box_qp,
    gen_flow_qp,
    gen_l1_least_squares,
    gen_logistic,
    gen_simplex_least_squares,
    layered_dag,
    load_instance,
    make_instance,
    save_instance,
)
from simplexfw.solvers import SolverError, StepRule, Stop, solve_sfw_p
from simplexfw.testing import gradient_check


def all_instances():
    return [
        gen_l1_least_squares(60, 20, seed=1),
        gen_simplex_least_squares(60, 15, seed=2),
        gen_flow_qp(layered_dag(3, 3, seed=0), seed=3),
        gen_box_qp(8, seed=4),
        gen_logistic(80, 12, seed=5),
    ]


@pytest.mark.parametrize("inst", all_instances(), ids=lambda i: i.kind)
def test_gradient_matches_finite_differences(inst, rng):
    for _ in range(10):
        x = inst.polytope.sample(rng)
        assert gradient_check(inst.objective, x) <= 1e-4


@pytest.mark.parametrize("inst", all_instances(), ids=lambda i: i.kind)
def test_x0_feasible(inst):
    assert inst.polytope.contains(inst.x0)


@pytest.mark.parametrize("inst", all_instances()[:4], ids=lambda i: i.kind)
def test_declared_constants_bracket_curvature(inst, rng):
    obj = inst.objective
    assert 0 <= obj.strong_convexity_mu <= obj.smoothness_L
    for _ in range(10):
        v = rng.standard_normal(obj.n)
        q = obj.curvature(v) / (v @ v)
        assert obj.strong_convexity_mu * (1 - 1e-9) <= q <= obj.smoothness_L * (1 + 1e-9)


def test_l1_construction():
    inst = gen_l1_least_squares(400, 100, 0.7, seed=0)
    assert isinstance(inst.polytope, L1Ball)
    assert inst.known_fstar == 0.0
    np.testing.assert_array_equal(inst.x0, np.zeros(100))
    assert np.abs(inst.solution).sum() == pytest.approx(1.0, abs=1e-14)
    assert inst.objective.value(inst.solution) == pytest.approx(0.0, abs=1e-20)
    assert inst.objective.value(inst.x0) > 0


def test_l1_sparsity_is_fraction_of_nonzeros():
    fracs = [np.mean(gen_l1_least_squares(20, 200, 0.3, seed=s).solution != 0) for s in range(10)]
    assert np.mean(fracs) == pytest.approx(0.3, abs=0.05)


def test_simplex_construction():
    inst = gen_simplex_least_squares(800, 200, 0.6, seed=0)
    assert isinstance(inst.polytope, Simplex)
    assert Simplex(200).contains(inst.solution, tol=1e-14)
    np.testing.assert_allclose(inst.x0, np.full(200, 1 / 200))
    assert inst.objective.value(inst.solution) == pytest.approx(0.0, abs=1e-20)
    eig = np.linalg.eigvalsh(inst.objective.hessian())
    assert inst.objective.strong_convexity_mu == pytest.approx(eig[0], rel=1e-8)
    assert inst.objective.smoothness_L == pytest.approx(eig[-1], rel=1e-8)


@pytest.mark.parametrize("inst", [gen_l1_least_squares(30, 10, seed=7),
                                  gen_simplex_least_squares(30, 10, seed=7)],
                         ids=["l1", "simplex"])
def test_known_optimum_not_beaten_by_sampling(inst):
    rng = np.random.default_rng(0)
    vals = [inst.objective.value(inst.polytope.sample(rng)) for _ in range(20_000)]
    assert min(vals) >= inst.known_fstar


@pytest.mark.parametrize("kwargs", [dict(sparsity_s=0.0), dict(sparsity_s=1.0), dict(m=0)])
def test_l1_invalid(kwargs):
    with pytest.raises(ValueError):
        gen_l1_least_squares(**kwargs)


def test_flow_spectrum_endpoints():
    inst = gen_flow_qp(layered_dag(4, 4, seed=1), seed=0, cond=1e3)
    assert isinstance(inst.polytope, FlowPolytope)
    assert inst.known_fstar is None
    assert inst.polytope.is_vertex(inst.x0)
    eig = np.linalg.eigvalsh(inst.objective.Q)
    assert eig[0] == pytest.approx(inst.objective.strong_convexity_mu, rel=1e-8)
    assert eig[-1] == pytest.approx(inst.objective.smoothness_L, rel=1e-8)
    assert eig[-1] / eig[0] == pytest.approx(1e3, rel=1e-6)


def test_flow_isotropic_case():
    inst = gen_flow_qp(layered_dag(2, 2, seed=0), seed=0, cond=1.0)
    np.testing.assert_allclose(inst.objective.Q, np.eye(inst.polytope.n), atol=1e-12)
    with pytest.raises(ValueError):
        gen_flow_qp(layered_dag(2, 2, seed=0), cond=0.5)


def test_box_qp_partially_active():
    inst = gen_box_qp(10, seed=0)
    assert isinstance(inst.polytope, Hypercube)
    centre = -np.linalg.solve(inst.objective.Q, inst.objective.b)
    outside = np.sum((centre < 0) | (centre > 1))
    assert 0 < outside < 10


def test_logistic_defaults():
    inst = gen_logistic(50, 10, seed=0)
    obj = inst.objective
    assert isinstance(obj, LogisticObjective)
    assert obj.reg == pytest.approx(1 / 10)
    assert obj.strong_convexity_mu == obj.reg
    assert set(np.unique(obj.labels)) <= {-1.0, 1.0}


def test_logistic_beta_scaling():
    base = gen_logistic(30, 6, seed=2, beta=1.0)
    scaled = gen_logistic(30, 6, seed=2, beta=3.0)
    u = np.random.default_rng(0).dirichlet(np.ones(6)) * 0.5
    # f_beta(u) is the beta = 1 objective at beta * u with the same reg
    ref = LogisticObjective(base.objective.A, base.objective.labels, base.objective.reg)
    assert scaled.objective.value(u) == pytest.approx(ref.value(3.0 * u), rel=1e-12)
    with pytest.raises(ValueError):
        gen_logistic(10, 3, beta=0.0)


def test_logistic_without_regularisation_needs_backtracking():
    inst = gen_logistic(40, 5, seed=1, reg=0.0)
    assert inst.objective.strong_convexity_mu is None
    with pytest.raises(SolverError):
        solve_sfw_p(inst.objective, inst.polytope, inst.x0, rule=StepRule("line_search"),
                    stop=Stop(max_iter=5))
    _, trace = solve_sfw_p(inst.objective, inst.polytope, inst.x0,
                           rule=StepRule("backtracking"), stop=Stop(max_iter=5))
    assert len(trace) == 6


def test_quadratic_linesearch_is_exact(rng):
    obj = QuadraticObjective(np.diag([1.0, 4.0]), np.array([-1.0, 0.0]))
    x = np.array([0.0, 1.0])
    direction = np.array([1.0, -1.0])
    t = obj.exact_linesearch(x, direction, max_step=10.0)
    ts = np.linspace(0, 10, 100_001)
    brute = ts[np.argmin([obj.value(x + s * direction) for s in ts])]
    assert t == pytest.approx(brute, abs=1e-4)
    assert obj.exact_linesearch(x, np.array([1.0, 0.0]), max_step=0.5) == 0.5


def test_quadratic_needs_one_form():
    with pytest.raises(ValueError):
        QuadraticObjective()
    with pytest.raises(ValueError):
        QuadraticObjective(np.eye(2), A=np.eye(2))


@pytest.mark.parametrize("inst", all_instances(), ids=lambda i: i.kind)
def test_save_load_round_trip(inst, tmp_path, rng):
    path = tmp_path / "inst.bin"
    save_instance(inst, path)
    again = load_instance(path)
    assert again.kind == inst.kind
    assert again.known_fstar == inst.known_fstar
    assert type(again.polytope) is type(inst.polytope)
    np.testing.assert_array_equal(again.x0, inst.x0)
    x = inst.polytope.sample(rng)
    assert again.objective.value(x) == inst.objective.value(x)
    np.testing.assert_array_equal(again.objective.gradient(x), inst.objective.gradient(x))
    np.testing.assert_array_equal(again.polytope.lmo(x), inst.polytope.lmo(x))


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not an instance")
    with pytest.raises(ValueError):
        load_instance(path)


def test_make_instance_is_seeded():
    cfg = {"kind": "flow_qp", "layers": 3, "width": 3, "cond": 100.0}
    a, b = make_instance(cfg, seed=4), make_instance(cfg, seed=4)
    np.testing.assert_array_equal(a.objective.Q, b.objective.Q)
    c = make_instance(cfg, seed=5)
    assert not np.array_equal(a.objective.Q, c.objective.Q)
    with pytest.raises(ValueError):
        make_instance({"kind": "nope"})
