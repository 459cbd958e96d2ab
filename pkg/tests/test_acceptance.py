"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are also
repeated in the terminal summary.  ``python tests/test_acceptance.py``
runs the same checks without pytest.
"""

import time

import numpy as np
import pytest

from simplexfw.bench.oracle_bench import OracleBenchSpec, loglog_slope, run_oracle_bench
from simplexfw.oracles import slmo, slmo_prepare, slmo_p_prepare, slmo_p_solve
from simplexfw.polytopes import FlowPolytope, Hypercube, L1Ball, Simplex
from simplexfw.problems import (
    gen_box_qp,
    gen_flow_qp,
    gen_l1_least_squares,
    gen_logistic,
    gen_simplex_least_squares,
    layered_dag,
)
from simplexfw.simplex_ball import (
    SimplexBall,
    contains,
    in_unit_simplex,
    intersect,
    intersect_with_unit_simplex,
)
from simplexfw.solvers import (
    StepRule,
    Stop,
    envelope_bounds,
    envelope_violations,
    solve_pfw,
    solve_rsfw,
    solve_rsfw_p,
    solve_sfw,
    solve_sfw_p,
)
from simplexfw.testing import ball_vertices, brute_force_lmo, gradient_check, sample_in_ball

RESULTS = []


def report(num, title, ok, detail):
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# 1 -------------------------------------------------------------------------

def test_criterion_01_oracle_exactness():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_rel, infeasible = 0.0, 0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        x = rng.dirichlet(np.ones(n))
        d = float(rng.uniform(1e-3, 1.0))
        c = rng.standard_normal(n)
        y = slmo(x, d, c)
        best = brute_force_lmo(ball_vertices(slmo_prepare(x, d).hat_ball), c)
        worst_rel = max(worst_rel, abs(c @ y - best) / max(abs(best), 1e-300))
        if not (in_unit_simplex(y) and contains(SimplexBall(x, d), y)):
            infeasible += 1
    elapsed = time.perf_counter() - t0
    ok = worst_rel <= 1e-12 and infeasible == 0 and elapsed < 5
    report(1, "oracle exactness", ok,
           f"max rel err {worst_rel:.1e}, infeasible {infeasible}, {elapsed:.2f} s")


# 2 -------------------------------------------------------------------------

def test_criterion_02_simplex_ball_algebra():
    rng = np.random.default_rng(2)
    mismatches, not_identity, grew = 0, 0, 0
    for inst in range(100):
        n = int(rng.integers(2, 7))
        z = rng.dirichlet(np.ones(n))
        if inst % 2:
            # intersect of two balls sharing the point z
            b1 = SimplexBall(z + 0.1 * (rng.dirichlet(np.ones(n)) - 1 / n), rng.uniform(0.1, 0.4))
            b2 = SimplexBall(z + 0.1 * (rng.dirichlet(np.ones(n)) - 1 / n), rng.uniform(0.1, 0.4))
            got = intersect(b1, b2)
            grew += got.radius > min(b1.radius, b2.radius)
            inside = lambda y: contains(b1, y) and contains(b2, y)  # noqa: E731
            spread = 1.5 * max(b1.radius, b2.radius) * n
        else:
            ball = SimplexBall(z, rng.uniform(0.02, 1.0))
            got = intersect_with_unit_simplex(ball)
            inside = lambda y: contains(ball, y) and in_unit_simplex(y)  # noqa: E731
            spread = 1.5
        pts = z + rng.uniform(-spread, spread, size=(10_000, n)) * rng.random((10_000, 1))
        pts -= (pts.sum(axis=1, keepdims=True) - 1.0) / n
        mismatches += sum(contains(got, y) != inside(y) for y in pts)
        b = SimplexBall(z, rng.uniform(0.01, 1.0))
        same = intersect(b, b)
        not_identity += not (np.array_equal(same.center, b.center) and same.radius == b.radius)
    ok = mismatches == 0 and not_identity == 0 and grew == 0
    report(2, "simplex-ball algebra", ok,
           f"{mismatches} membership mismatches over 10^6 points, "
           f"{not_identity} non-identity self-intersections, {grew} radius increases")


# 3 -------------------------------------------------------------------------

def test_criterion_03_sfw_linear_convergence():
    inst = gen_simplex_least_squares(100, 20, seed=0)
    assert inst.known_fstar == 0.0
    parts, ok = [], True
    for kind in ("line_search", "short", "constant_sfw"):
        t0 = time.perf_counter()
        _, trace = solve_sfw(inst.objective, inst.x0, rule=StepRule(kind),
                             stop=Stop(1e-8, 500_000, "gap", max_time=30))
        elapsed = time.perf_counter() - t0
        viol = envelope_violations(trace)
        good = trace.status == "converged" and viol == 0 and elapsed < 10
        ok &= good
        parts.append(f"{kind} {len(trace) - 1} it {elapsed:.1f} s viol {viol}")
    report(3, "SFW linear convergence", ok, "; ".join(parts))


# 4 -------------------------------------------------------------------------

def test_criterion_04_rsfw_geometric_decay():
    inst = gen_simplex_least_squares(100, 20, seed=0)
    # the guarantee needs the theoretical inner-loop length J, so no smaller cap
    _, trace = solve_rsfw(inst.objective, 20, rho=1.01, stop=Stop(1e-9, 100_000),
                          inner_cap=10**12)
    viol = envelope_violations(trace)
    bmax = float(trace.B.max())
    capped = sum(trace.inner_capped)
    ok = trace.status == "converged" and viol == 0 and bmax <= inst.known_fstar + 1e-9
    report(4, "rSFW geometric decay", ok,
           f"{len(trace) - 1} outer it, viol {viol}, max B {bmax:.1e}, capped {capped}, "
           f"J {trace.meta['J']}")


# 5 -------------------------------------------------------------------------

def _polytope_problems():
    return [
        ("hypercube n=10", gen_box_qp(10, seed=0)),
        ("l1 n=100 m=400", gen_l1_least_squares(400, 100, 0.7, seed=0)),
        ("flow 192 edges", gen_flow_qp(layered_dag(6, 6, 1.0, seed=0), seed=0, cond=1e3)),
    ]


def test_criterion_05_polytope_generalization():
    parts, ok = [], True
    for name, inst in _polytope_problems():
        obj, P = inst.objective, inst.polytope
        t0 = time.perf_counter()
        _, tr_s = solve_sfw_p(obj, P, inst.x0, stop=Stop(1e-6, 5000, "gap", max_time=55))
        t_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        _, tr_r = solve_rsfw_p(obj, P, inst.x0, rho=2.0, accel="pairwise",
                               stop=Stop(1e-6, 10_000, "gap", max_time=55))
        t_r = time.perf_counter() - t0
        v_s, v_r = envelope_violations(tr_s), envelope_violations(tr_r)
        good = (v_s == 0 and v_r == 0 and tr_r.status == "converged"
                and tr_r.gap[-1] <= 1e-6 and t_s < 60 and t_r < 60)
        ok &= good
        parts.append(f"{name}: SFW_P viol {v_s} ({len(tr_s) - 1} it {t_s:.1f} s), "
                     f"rSFW_P viol {v_r} gap {tr_r.gap[-1]:.1e} ({len(tr_r) - 1} outer {t_r:.1f} s)")
    report(5, "polytope generalization", ok, "; ".join(parts))


# 6 -------------------------------------------------------------------------

def test_criterion_06_slmo_p_bounds():
    rng = np.random.default_rng(6)
    families = [Hypercube(6), L1Ball(6), Simplex(6),
                FlowPolytope(layered_dag(3, 3, density=0.8, seed=6))]
    dist_viol, opt_viol, compared = 0, 0, 0
    for i in range(500):
        P = families[i % len(families)]
        geo = P.geometry()
        D, eta = geo.diameter_D, geo.eta
        x = P.sample(rng)
        d = float(rng.uniform(0.01, 0.5))
        c = rng.standard_normal(P.n)
        y_star = slmo_p_solve(slmo_p_prepare(P.caratheodory(x), d), P, c)
        dist_viol += np.linalg.norm(x - y_star) > (P.n + 1) * d * D + 1e-12
        ys = sample_in_ball(P, x, d * D / eta, rng, 20)
        compared += len(ys)
        opt_viol += int(np.sum(c @ y_star > ys @ c + 1e-12))
    ok = dist_viol == 0 and opt_viol == 0 and compared > 0
    report(6, "SLMO_P bounds", ok,
           f"{dist_viol} distance violations, {opt_viol} optimality violations "
           f"over {compared} sampled points")


# 7 -------------------------------------------------------------------------

def test_criterion_07_caratheodory():
    rng = np.random.default_rng(7)
    flow = FlowPolytope(layered_dag(5, 4, density=0.7, seed=7))
    parts, ok = [], True
    for P in (Simplex(30), Hypercube(30), L1Ball(30), flow):
        too_many, worst, bad_atoms, peel_over = 0, 0.0, 0, 0
        for _ in range(200):
            x = P.sample(rng)
            rep = P.caratheodory(x)
            too_many += len(rep) > P.n + 1
            worst = max(worst, float(np.abs(rep.point() - x).max()))
            bad_atoms += sum(not P.is_vertex(v) for v in rep.vertices)
            if P is flow:
                peel_over += P.peel(x)[1] > P.n
        good = too_many == 0 and worst <= 1e-10 and bad_atoms == 0 and peel_over == 0
        ok &= good
        parts.append(f"{P.name} err {worst:.1e}")
    report(7, "Caratheodory", ok, ", ".join(parts))


# 8 -------------------------------------------------------------------------

def test_criterion_08_oracle_cost_scaling():
    spec = OracleBenchSpec("simplex", (1_000, 10_000, 100_000, 1_000_000),
                           ("lmo", "slmo", "slmo2"), repetitions=20, seed=8)
    rows = run_oracle_bench(spec)
    mean = {(r["oracle"], r["n"]): r["mean_ns"] for r in rows}
    ratios = [mean[("slmo2", n)] / mean[("lmo", n)] for n in spec.dims]
    slope = loglog_slope(rows, "slmo")
    ok = max(ratios) <= 3 and abs(slope - 1.0) <= 0.15
    report(8, "oracle cost scaling", ok,
           f"slmo2/lmo ratios {', '.join(f'{r:.2f}' for r in ratios)}; slmo slope {slope:.3f}")


# 9 -------------------------------------------------------------------------

def _time_to_gap(run, repeats=3):
    """Best-of-``repeats`` wall time to the stopping row, plus the last trace."""
    best, trace = np.inf, None
    for _ in range(repeats):
        _, trace = run()
        best = min(best, trace.time_ns[-1] / 1e9)
    return best, trace


def test_criterion_09_acceleration_benefit():
    fewer, worst_ratio, unconverged = 0, 0.0, 0
    for seed in range(20):
        inst = gen_simplex_least_squares(200, 50, seed=seed)
        obj, n = inst.objective, inst.polytope.n
        stop = Stop(1e-7, 100_000, "gap")
        _, plain = solve_rsfw(obj, n, rho=2.0, stop=stop)
        t_acc, acc = _time_to_gap(lambda: solve_rsfw(obj, n, rho=2.0, accel="pairwise",
                                                     stop=stop))
        t_pfw, pfw = _time_to_gap(lambda: solve_pfw(obj, inst.polytope, inst.x0, stop))
        unconverged += sum(t.status != "converged" for t in (plain, acc, pfw))
        fewer += acc.inner.sum() < plain.inner.sum()
        worst_ratio = max(worst_ratio, t_acc / t_pfw)
    ok = fewer >= 16 and worst_ratio <= 2.0 and unconverged == 0
    report(9, "acceleration benefit", ok,
           f"pairwise used fewer inner iterations on {fewer}/20 seeds; "
           f"worst time ratio vs PFW {worst_ratio:.2f}; unconverged runs {unconverged}")


# 10 ------------------------------------------------------------------------

def test_criterion_10_backtracking():
    inst = gen_logistic(400, 100, seed=0)
    obj = inst.objective
    # hide the constants so the solver has to estimate them
    obj.smoothness_L = None
    obj.strong_convexity_mu = None
    t0 = time.perf_counter()
    _, trace = solve_rsfw_p(obj, inst.polytope, inst.x0, rho=2.0,
                            inner_rule=StepRule("backtracking"),
                            stop=Stop(1e-6, 10_000, "gap", max_time=120))
    elapsed = time.perf_counter() - t0
    hist = trace.meta["step_history"]
    bad = sum(h["f_new"] > h["f_x"] + h["delta"] * h["slope"]
              + 0.5 * h["delta"] ** 2 * h["L"] * h["dir_norm2"] for h in hist)
    ok = trace.status == "converged" and trace.gap[-1] <= 1e-6 and bad == 0 and len(hist) > 0
    report(10, "backtracking", ok,
           f"{len(hist)} accepted steps, {bad} violations, final gap {trace.gap[-1]:.1e}, "
           f"{elapsed:.1f} s")


# 11 ------------------------------------------------------------------------

def test_criterion_11_gradient_checks():
    rng = np.random.default_rng(11)
    problems = [gen_l1_least_squares(400, 100, seed=0),
                gen_simplex_least_squares(100, 20, seed=0),
                gen_flow_qp(layered_dag(6, 6, seed=0), seed=0),
                gen_box_qp(10, seed=0),
                gen_logistic(400, 100, seed=0)]
    worst, parts = 0.0, []
    for inst in problems:
        errs = [gradient_check(inst.objective, inst.polytope.sample(rng)) for _ in range(50)]
        worst = max(worst, max(errs))
        parts.append(f"{inst.kind} {max(errs):.1e}")
    report(11, "gradient checks", worst <= 1e-4, "max rel err " + ", ".join(parts))


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
