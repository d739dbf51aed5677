"""Acceptance criteria, one test (or more) per criterion.

Each test appends a ``criterion N: PASS|FAIL ...`` line to ``RESULTS``; the
lines are printed in the terminal summary. Run directly with
``python tests/test_acceptance.py``.
"""

import time
from collections import defaultdict
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import make_lasso
from oracles import central_diff, grid_pal, random_instance
from test_mm import check_bookkeeping
from test_regularizers import KINDS, DIM
from proxal.baselines import AdmmOptions, admm_solve, ista_solve
from proxal.cli import (
    ConsensusConfig,
    extra_fixture,
    rate_fixture,
    run_extra_comparison,
    run_scaling,
)
from proxal.consensus import (
    brute_force_best_subset,
    build_consensus_problem,
    cycle_graph,
    fig2_plant,
    h2_gradient,
    h2_objective,
    h2_value,
    performance_loss,
    polish,
    sparsify,
)
from proxal.flow import (
    FlowConfig,
    check_quad_condition,
    fit_log_slope,
    integrate_flow,
    lambda_min_TTt,
    rate_estimates,
)
from proxal.mm import MmOptions, mm_solve
from proxal.placement import build_placement, random_scenario, simulate_placement
from proxal.problem import CompositeProblem, LinearMap, eval_pal, kkt_residuals, least_squares
from proxal.regularizers import L1, ShiftedL1Nonneg

RESULTS = defaultdict(list)
TIGHT = MmOptions(eta_final=1e-12, omega_final=1e-12, max_outer=300)


def record(cid, name, ok, detail):
    RESULTS[cid].append(f"criterion {cid}{name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@contextmanager
def timed():
    box = {}
    t0 = time.perf_counter()
    yield box
    box["t"] = time.perf_counter() - t0


def within(elapsed, limit):
    return f"{elapsed:.2f}s (limit {limit:g}s)"


def test_criterion_01_pal_equals_partial_minimum():
    rng = np.random.default_rng(2024)
    worst = 0.0
    with timed() as tm:
        for _ in range(100):
            p = random_instance(rng)
            x, y = rng.normal(size=p.n), rng.normal(size=p.m)
            mu = rng.uniform(0.1, 2.0)
            worst = max(worst, abs(eval_pal(p, x, y, mu) - grid_pal(p, x, y, mu)))
    ok = worst <= 5e-4 and tm["t"] < 10
    record(1, "", ok, f"max |gap| = {worst:.2e} (tol 5e-4), {within(tm['t'], 10)}")


def test_criterion_02_moreau_calculus():
    rng = np.random.default_rng(7)
    h = 1e-6
    worst = {"identity": 0.0, "firm": 0.0, "lower": 0.0, "fd": 0.0}
    with timed() as tm:
        for g in KINDS.values():
            V1 = rng.uniform(-5, 5, (1000, DIM))
            V2 = rng.uniform(-5, 5, (1000, DIM))
            MU = rng.uniform(0.05, 5.0, 1000)
            for v1, v2, mu in zip(V1, V2, MU):
                p1, p2 = g.prox(v1, mu), g.prox(v2, mu)
                gr = g.moreau_grad(v1, mu)
                worst["identity"] = max(worst["identity"], np.abs(gr - (v1 - p1) / mu).max())
                d = p1 - p2
                worst["firm"] = max(worst["firm"], d @ d - (v1 - v2) @ d)
                gv = g.value(v1)
                if np.isfinite(gv):
                    worst["lower"] = max(worst["lower"], g.moreau(v1, mu) - gv)
                fd = np.array([(g.moreau(v1 + h * e, mu) - g.moreau(v1 - h * e, mu)) / (2 * h)
                               for e in np.eye(DIM)])
                worst["fd"] = max(worst["fd"], np.linalg.norm(fd - gr) / max(1.0, np.linalg.norm(gr)))
    ok = (worst["identity"] == 0.0 and worst["firm"] <= 1e-12 and worst["lower"] <= 1e-12
          and worst["fd"] <= 1e-5 and tm["t"] < 5)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(2, "", ok, f"{len(KINDS)} kinds x 1000 samples: {detail}, {within(tm['t'], 5)}")


def test_criterion_03_lasso_agreement():
    A, b, gamma, p = make_lasso()

    def obj(x):
        r = A @ x - b
        return 0.5 * r @ r + gamma * np.abs(x).sum()

    z = np.zeros(p.n)
    with timed() as tm:
        f_ista = obj(ista_solve(A, b, gamma, tol=1e-10))
        ra = admm_solve(p, z, z, z, AdmmOptions(tol_primal=1e-9, tol_dual=1e-9))
        rm = mm_solve(p, z, z)
    f = np.array([f_ista, obj(ra.z), obj(rm.z)])
    rel = np.ptp(f) / abs(f_ista)
    kkt = max(rm.kkt)
    ok = rel <= 1e-6 and kkt <= 1e-6 and ra.converged and rm.converged and tm["t"] < 5
    record(3, "", ok, f"rel spread {rel:.1e} (tol 1e-6), MM KKT {kkt:.1e} (tol 1e-6), "
                      f"{within(tm['t'], 5)}")


def test_criterion_04_bookkeeping():
    rng = np.random.default_rng(11)
    runs = []
    _, _, _, p = make_lasso()
    runs.append((p, MmOptions()))
    runs.append((p, MmOptions(mu0=10.0, mu_min=1e-3)))
    for _ in range(5):
        q = random_instance(rng, m=4, n=3)
        runs.append((q, MmOptions(mu0=rng.uniform(0.01, 5.0))))
    cp = build_consensus_problem(cycle_graph(5))
    runs.append((CompositeProblem(h2_objective(cp), ShiftedL1Nonneg(0.1), LinearMap(cp.Tbasis)),
                 MmOptions()))
    transitions = {True: 0, False: 0}
    for q, opts in runs:
        rep = mm_solve(q, np.zeros(q.n), np.zeros(q.m), opts)
        check_bookkeeping(rep.history, opts)
        for a in rep.history[:-1]:
            transitions[a.accepted] += 1
    ok = transitions[True] > 0 and transitions[False] > 0
    record(4, "", ok, f"{len(runs)} solves, {transitions[True]} accept and "
                      f"{transitions[False]} reject transitions checked exactly")


def test_criterion_05_h2_gradient():
    problems = {"fig2": build_consensus_problem(fig2_plant()),
                "cycle5": build_consensus_problem(cycle_graph(5)),
                "cycle8": build_consensus_problem(cycle_graph(8))}
    rng = np.random.default_rng(5)
    worst = 0.0
    with timed() as tm:
        for cp in problems.values():
            count = 0
            while count < 20:
                x = rng.normal(scale=0.3, size=cp.d)
                if not np.isfinite(h2_value(cp, x)):
                    continue
                g = h2_gradient(cp, x)
                fd = central_diff(lambda t: h2_value(cp, t), x)
                worst = max(worst, np.linalg.norm(fd - g) / np.linalg.norm(g))
                count += 1
    ok = worst <= 1e-5 and tm["t"] < 30
    record(5, "", ok, f"60 points, max rel error {worst:.1e} (tol 1e-5), {within(tm['t'], 30)}")


@pytest.fixture(scope="module")
def headline():
    t0 = time.perf_counter()
    cp = build_consensus_problem(fig2_plant())
    pts = sparsify(cp, [0.5, 1.0, 2.0, 3.0, 3.5])
    support = pts[-1].support
    f_c = polish(cp, cp.candidate_edges)[1]
    f_p = polish(cp, support)[1]
    brute, _ = brute_force_best_subset(cp, 2)
    return {"support": support, "loss": performance_loss(f_p, f_c), "brute": brute,
            "time": time.perf_counter() - t0}


def test_criterion_06a_two_edges(headline):
    s = headline["support"]
    edges = " ".join(f"{u + 1}->{v + 1}" for u, v in s)
    record(6, "a", len(s) == 2, f"edges added at gamma=3.5: {len(s)} ({edges})")


def test_criterion_06b_loss_level(headline):
    loss = headline["loss"]
    ok = abs(loss - 23.91) <= 0.5
    record(6, "b", ok, f"polished loss {loss:.3f}% (target 23.91 +/- 0.5, unit weights)")


def test_criterion_06c_matches_exhaustive(headline):
    same = sorted(headline["support"]) == sorted(headline["brute"])
    ok = same and headline["time"] < 300
    record(6, "c", ok, f"exhaustive k=2 best {[(u + 1, v + 1) for u, v in headline['brute']]}, "
                       f"match={same}, {within(headline['time'], 300)}")


def test_criterion_07_scaling_trend():
    cfg = ConsensusConfig(scaling={"N": list(range(5, 16)), "gammas": [0.01, 0.1, 0.2]})
    with timed() as tm:
        rows = run_scaling(cfg, workers=4)
    cells = defaultdict(dict)
    for N, gamma, solver, start, total, outer, _, _, conv in rows:
        cells[(start, N, gamma)][solver] = (outer, total, conv)
    lines = []
    ok = tm["t"] < 900
    for start in ("cold", "warm"):
        keys = [k for k in cells if k[0] == start]
        it_ok = all(cells[k]["pal"][0] < min(cells[k]["admm"][0], cells[k]["admm_adaptive"][0])
                    for k in keys)
        t_frac = np.mean([cells[k]["pal"][1] < min(cells[k]["admm"][1], cells[k]["admm_adaptive"][1])
                          for k in keys])
        conv = all(v[2] for k in keys for v in cells[k].values())
        ok = ok and it_ok and t_frac >= 0.8 and conv
        lines.append(f"{start}: fewer outer iters in all {len(keys)} cells={it_ok}, "
                     f"faster in {100 * t_frac:.0f}%")
    record(7, "", ok, "; ".join(lines) + f", {within(tm['t'], 900)}")


def gas_fixture():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 5))
    b = rng.standard_normal(10)
    T = rng.standard_normal((4, 5))
    return CompositeProblem(least_squares(A, b), L1(0.5), LinearMap(T)), rng


def test_criterion_08_global_stability():
    p, rng = gas_fixture()
    ref = mm_solve(p, np.zeros(p.n), np.zeros(p.m), TIGHT)
    worst_kkt, worst_rise = 0.0, -np.inf
    with timed() as tm:
        for _ in range(20):
            x0, y0 = rng.normal(scale=3, size=p.n), rng.normal(scale=3, size=p.m)
            tr = integrate_flow(p, x0, y0, FlowConfig(mu=1.0, t_end=100.0,
                                                      sample_times=np.linspace(0, 100, 2001)))
            V = 0.5 * np.sum((tr.x - ref.x) ** 2, axis=1) + 0.5 * np.sum((tr.y - ref.y) ** 2, axis=1)
            worst_rise = max(worst_rise, np.diff(V).max())
            worst_kkt = max(worst_kkt, max(kkt_residuals(p, tr.x[-1], tr.y[-1])))
    ok = ref.converged and worst_kkt <= 1e-6 and worst_rise <= 1e-9 and tm["t"] < 60
    record(8, "", ok, f"20 starts, max KKT at t=100 {worst_kkt:.1e} (tol 1e-6), "
                      f"max V increase {worst_rise:.1e} (slack 1e-9), {within(tm['t'], 60)}")


def test_criterion_09_exponential_rate():
    with timed() as tm:
        p, rng = rate_fixture(0, 6, 4, 0.5)
        m_f, L_f = p.f.m_f, p.f.L_f
        mu = max(L_f - m_f, 1e-3)
        T = p.T.matrix
        est = rate_estimates(m_f, L_f, mu, lambda_min_TTt(T))
        quad_ok = check_quad_condition(0.99 * est.rho, m_f, mu, np.linalg.eigvalsh(T @ T.T))
        ref = mm_solve(p, np.zeros(p.n), np.zeros(p.m), TIGHT)
        tr = integrate_flow(p, rng.standard_normal(p.n), rng.standard_normal(p.m),
                            FlowConfig(mu=mu, t_end=16.0, sample_times=np.linspace(0, 16, 401)),
                            reference=(ref.x, ref.y))
        slope, _ = fit_log_slope(tr.times, tr.distance_to_ref, floor=1e-7)
    env_ok = slope <= -est.rho + 0.05 * est.rho
    ok = quad_ok and env_ok and tm["t"] < 60
    record(9, "", ok, f"rho={est.rho:.4f}, quad condition at 0.99 rho {quad_ok}, fitted slope "
                      f"{slope:.4f} (need <= {-0.95 * est.rho:.4f}), {within(tm['t'], 60)}")


def test_criterion_10_extra_recovery():
    with timed() as tm:
        L, grad, x0 = extra_fixture(0, 10)
        devs = run_extra_comparison(L, grad, x0, 0.05, 1.0, 50)
    ok = max(devs) <= 1e-12 and tm["t"] < 1
    record(10, "", ok, f"max deviation over 50 steps {max(devs):.1e} (tol 1e-12), "
                       f"{within(tm['t'], 1)}")


@pytest.fixture(scope="module")
def placement_run():
    t0 = time.perf_counter()
    prob = random_scenario(5, 5.0, seed=0)
    cfg = FlowConfig(mu=4.0, t_end=30.0, sample_times=np.linspace(0, 30, 601))
    tr = simulate_placement(prob, 4.0, cfg)
    kkt = []
    for (_, _, _, i1), (_, b) in zip(tr.meta["segments"], prob.targets_schedule):
        kkt.append(max(kkt_residuals(build_placement(prob, b), tr.x[i1], tr.y[i1])))
    dist = np.abs(prob.incidence_T.apply(tr.x[-1])).max()
    return {"kkt": kkt, "dist": dist, "bound": prob.bound, "time": time.perf_counter() - t0}


def test_criterion_11a_after_switch(placement_run):
    r = placement_run
    ok = r["kkt"][1] <= 1e-5 and r["dist"] <= r["bound"] + 1e-6 and r["time"] < 30
    record(11, "a", ok, f"KKT at t=30 {r['kkt'][1]:.1e} (tol 1e-5), max |Tx| {r['dist']:.6f} "
                        f"(bound 1 + 1e-6), {within(r['time'], 30)}")


def test_criterion_11b_before_switch(placement_run):
    k = placement_run["kkt"][0]
    record(11, "b", k <= 1e-5, f"KKT at t=5 (just before the switch) {k:.1e} (tol 1e-5)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
