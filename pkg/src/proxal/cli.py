"""Command-line experiment harness.

    proxal lasso     --config cfg.json --out DIR
    proxal consensus --config cfg.json --out DIR --mode sparsify|polish|brute|scaling
    proxal flow      --config cfg.json --out DIR --mode rate|placement|extra

Exit codes: 0 success, 2 bad configuration, 3 solver failure or a violated
tolerance check.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .baselines import AdmmOptions, admm_solve, ista_solve
from .consensus import (
    DirectedGraph,
    brute_force_best_subset,
    build_consensus_problem,
    cycle_graph,
    fig2_plant,
    h2_objective,
    h2_value,
    performance_loss,
    polish,
    sparsify,
)
from .errors import ProxalError
from .flow import (
    ExtraState,
    FlowConfig,
    bisect_rate,
    check_quad_condition,
    extra_step,
    fit_log_slope,
    integrate_flow,
    lambda_min_TTt,
    network_flow_step,
    rate_estimates,
)
from .mm import MmOptions, mm_solve
from .placement import PlacementProblem, build_placement, path_edges, random_scenario, simulate_placement
from .problem import CompositeProblem, LinearMap, kkt_residuals, least_squares, quadratic
from .regularizers import L1, ShiftedL1Nonneg

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
MAX_SCALING_N = 15


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------- schemas

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MmSettings(_Strict):
    mu0: float = Field(0.1, gt=0)
    mu_min: float = Field(1e-5, gt=0)
    eta_final: float = Field(1e-6, gt=0)
    omega_final: float = Field(1e-6, gt=0)
    max_outer: int = Field(100, gt=0)
    inner: Literal["lbfgs", "gd", "prox_grad"] = "lbfgs"
    lbfgs_memory: int = Field(10, gt=0)
    max_inner: int = Field(5000, gt=0)

    def options(self) -> MmOptions:
        return MmOptions(**self.model_dump())


class AdmmSettings(_Strict):
    mu: float = Field(0.1, gt=0)
    tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(10000, gt=0)


class LassoConfig(_Strict):
    seed: int = 0
    n: int = Field(10, gt=0)
    rows: int = Field(20, gt=0)
    sparsity: int = Field(3, ge=0)
    noise: float = Field(0.01, ge=0)
    gamma: Optional[float] = Field(None, gt=0)
    gamma_frac: float = Field(0.1, gt=0)
    ista_tol: float = Field(1e-10, gt=0)
    agree_rtol: float = Field(1e-6, gt=0)
    mm: MmSettings = MmSettings()
    admm: AdmmSettings = AdmmSettings()
    deterministic: bool = False


class GraphSpec(_Strict):
    kind: Literal["fig2", "cycle", "custom"] = "fig2"
    n: Optional[int] = Field(None, ge=2)
    weight: float = Field(1.0, gt=0)
    edges: Optional[List[Tuple[int, int, float]]] = None

    def build(self) -> DirectedGraph:
        if self.kind == "fig2":
            return fig2_plant(self.weight)
        if self.kind == "cycle":
            if self.n is None:
                raise ConfigError("cycle graph needs n")
            return cycle_graph(self.n, self.weight)
        if self.n is None or self.edges is None:
            raise ConfigError("custom graph needs n and edges")
        return DirectedGraph.from_dict({"n": self.n, "edges": [list(e) for e in self.edges]})


class ScalingSettings(_Strict):
    N: List[int] = list(range(5, 16))
    gammas: List[float] = [0.01, 0.1, 0.2]
    tol: float = Field(1e-4, gt=0)
    mu: float = Field(0.1, gt=0)
    max_iter: int = Field(5000, gt=0)
    starts: List[Literal["cold", "warm"]] = ["cold", "warm"]


class ConsensusConfig(_Strict):
    seed: int = 0
    mode: Optional[Literal["sparsify", "polish", "brute", "scaling"]] = None
    graph: GraphSpec = GraphSpec()
    candidates: Optional[List[Tuple[int, int]]] = None  # 1-based ordered pairs
    gamma_grid: List[float] = [0.5, 1.0, 2.0, 3.0, 3.5, 4.0]
    gamma: float = Field(3.5, ge=0)
    support: Optional[List[Tuple[int, int]]] = None  # 1-based
    k: int = Field(2, ge=0)
    warm_start: bool = True
    budget: int = Field(10**6, gt=0)
    mm: MmSettings = MmSettings()
    scaling: ScalingSettings = ScalingSettings()
    deterministic: bool = False

    @field_validator("gamma_grid")
    @classmethod
    def _ascending(cls, v):
        if any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("gamma_grid must be ascending")
        return v


class RateSettings(_Strict):
    n: int = Field(6, gt=0)
    m: int = Field(4, gt=0)
    gamma: float = Field(0.5, ge=0)
    mu: Optional[float] = Field(None, gt=0)
    t_end: float = Field(16.0, gt=0)
    samples: int = Field(401, ge=10)
    slack: float = Field(0.05, ge=0)
    fit_floor: float = Field(1e-7, gt=0)


class PlacementSettings(_Strict):
    targets: Optional[List[Tuple[float, List[float]]]] = None
    edges: Optional[List[Tuple[int, int]]] = None  # 0-based
    n_agents: int = Field(5, ge=1)
    switch: float = Field(5.0, gt=0)
    spread: float = Field(2.0, gt=0)
    bound: float = Field(1.0, gt=0)
    mu: float = Field(4.0, gt=0)
    t_end: float = Field(30.0, gt=0)
    samples: int = Field(601, ge=10)
    kkt_tol: float = Field(1e-5, gt=0)


class ExtraSettings(_Strict):
    n_nodes: int = Field(10, ge=2)
    alpha: float = Field(0.05, gt=0)
    mu: float = Field(1.0, gt=0)
    steps: int = Field(50, ge=1)
    tol: float = Field(1e-12, gt=0)


class FlowCliConfig(_Strict):
    seed: int = 0
    mode: Optional[Literal["rate", "placement", "extra"]] = None
    test_mode: bool = True
    rate: RateSettings = RateSettings()
    placement: PlacementSettings = PlacementSettings()
    extra: ExtraSettings = ExtraSettings()
    deterministic: bool = False


# ---------------------------------------------------------------- helpers

def config_hash(cfg: BaseModel) -> str:
    blob = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows, chash):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header) + ["config_hash"])
        for r in rows:
            w.writerow([_fmt(v) for v in r] + [chash])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


class _Clock:
    def __init__(self, enabled):
        self.enabled = enabled

    def __call__(self):
        return time.perf_counter() if self.enabled else 0.0


# ---------------------------------------------------------------- lasso

def lasso_instance(cfg: LassoConfig):
    rng = np.random.default_rng(cfg.seed)
    A = rng.standard_normal((cfg.rows, cfg.n))
    x_true = np.zeros(cfg.n)
    k = min(cfg.sparsity, cfg.n)
    x_true[rng.choice(cfg.n, size=k, replace=False)] = rng.standard_normal(k)
    b = A @ x_true + cfg.noise * rng.standard_normal(cfg.rows)
    gamma = cfg.gamma if cfg.gamma is not None else cfg.gamma_frac * np.abs(A.T @ b).max()
    return A, b, float(gamma)


def cmd_lasso(cfg: LassoConfig, out: str) -> int:
    A, b, gamma = lasso_instance(cfg)
    p = CompositeProblem(least_squares(A, b), L1(gamma), LinearMap.identity(cfg.n))
    clock = _Clock(not cfg.deterministic)

    def objective(x):
        r = A @ x - b
        return 0.5 * r @ r + gamma * np.abs(x).sum()

    rows = []
    t0 = clock()
    x_ista, it = ista_solve(A, b, gamma, tol=cfg.ista_tol, return_info=True)
    t_ista = clock() - t0
    # ISTA has no multiplier; report KKT with the optimal dual -grad f(x)
    y_ista = -(A.T @ (A @ x_ista - b))
    rows.append(["ista", it, 0, objective(x_ista), *kkt_residuals(p, x_ista, y_ista), t_ista])

    zeros = np.zeros(cfg.n)
    t0 = clock()
    ra = admm_solve(p, zeros, zeros, zeros, AdmmOptions(
        mu=cfg.admm.mu, tol_primal=cfg.admm.tol, tol_dual=cfg.admm.tol, max_iter=cfg.admm.max_iter))
    t_admm = clock() - t0
    # the prox output z is the exactly sparse iterate; with T = I it is the solution
    rows.append(["admm", ra.outer_iters, ra.total_inner_iters, objective(ra.z), *ra.kkt, t_admm])

    t0 = clock()
    rm = mm_solve(p, zeros, zeros, cfg.mm.options())
    t_mm = clock() - t0
    rows.append(["mm", rm.outer_iters, rm.total_inner_iters, objective(rm.z), *rm.kkt, t_mm])

    write_csv(os.path.join(out, "lasso.csv"),
              ["solver", "iters_outer", "iters_inner_total", "f_value", "kkt_grad", "kkt_feas",
               "kkt_subgrad", "wall_time"], rows, config_hash(cfg))
    vals = np.array([r[3] for r in rows])
    ref = vals[0]
    if not (ra.converged and rm.converged):
        raise CheckFailed("ADMM or MM did not converge")
    if np.max(np.abs(vals - ref)) > cfg.agree_rtol * max(abs(ref), 1e-300):
        raise CheckFailed("solver objectives disagree beyond tolerance")
    return EXIT_OK


# ---------------------------------------------------------------- consensus

def _one_based(edges):
    return [[int(u) + 1, int(v) + 1] for u, v in edges]


def _scaling_chain(args):
    # one (N, solver, start) chain over the gamma grid; "warm" restarts each
    # gamma from the previous solution, "cold" from the origin
    N, solver, start, s, deterministic = args
    cp = build_consensus_problem(cycle_graph(N))
    f = h2_objective(cp)
    clock = _Clock(not deterministic)
    x, y, z = np.zeros(cp.d), np.zeros(cp.m), np.zeros(cp.m)
    rows = []
    for gamma in sorted(s["gammas"]):
        if start == "cold":
            x, y, z = np.zeros(cp.d), np.zeros(cp.m), np.zeros(cp.m)
        p = CompositeProblem(f, ShiftedL1Nonneg(gamma), LinearMap(cp.Tbasis))
        t0 = clock()
        if solver == "pal":
            rep = mm_solve(p, x, y, MmOptions(mu0=s["mu"], eta_final=s["tol"],
                                              omega_final=s["tol"], max_outer=200))
        else:
            rep = admm_solve(p, x, z, y, AdmmOptions(
                mu=s["mu"], adaptive=(solver == "admm_adaptive"), tol_primal=s["tol"],
                tol_dual=s["tol"], max_iter=s["max_iter"]))
        total = clock() - t0
        x, y = rep.x, rep.y
        z = rep.z if rep.z is not None else np.maximum(cp.Tbasis @ x, 0.0)
        # objective on the nonnegative part; T x may sit 1e-6 outside the orthant
        fval = h2_value(cp, x) + gamma * np.maximum(cp.Tbasis @ x, 0.0).sum()
        per = total / rep.outer_iters if rep.outer_iters else 0.0
        rows.append([N, gamma, solver, start, total, rep.outer_iters, per, fval, rep.converged])
    return rows


SCALING_SOLVERS = ("pal", "admm", "admm_adaptive")


def run_scaling(cfg: ConsensusConfig, workers=1):
    """Rows ``[N, gamma, solver, start, total_time, outer_iters, time_per_outer,
    f_value, converged]`` in (N, start, gamma, solver) order."""
    s = cfg.scaling.model_dump()
    chains = [(N, solver, start, s, cfg.deterministic) for N in cfg.scaling.N
              for start in cfg.scaling.starts for solver in SCALING_SOLVERS]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_scaling_chain, chains))
    else:
        results = [_scaling_chain(c) for c in chains]
    order = {"cold": 0, "warm": 1}
    rows = [r for chain in results for r in chain]
    rows.sort(key=lambda r: (r[0], order[r[3]], r[1], SCALING_SOLVERS.index(r[2])))
    return rows


def cmd_consensus(cfg: ConsensusConfig, out: str, mode: str, workers=1, allow_large=False) -> int:
    chash = config_hash(cfg)
    if mode == "scaling":
        if max(cfg.scaling.N) > MAX_SCALING_N and not allow_large:
            raise ConfigError(f"N > {MAX_SCALING_N} needs --allow-large")
        rows = run_scaling(cfg, workers)
        write_csv(os.path.join(out, "scaling.csv"),
                  ["N", "gamma", "solver", "start", "total_time", "outer_iters",
                   "time_per_outer", "f_value", "converged"], rows, chash)
        if not all(r[8] for r in rows):
            raise CheckFailed("some scaling cells did not converge")
        return EXIT_OK

    plant = cfg.graph.build()
    cand = None if cfg.candidates is None else [(u - 1, v - 1) for u, v in cfg.candidates]
    cp = build_consensus_problem(plant, cand)
    mm_opts = cfg.mm.options()
    f0 = h2_value(cp, np.zeros(cp.d))
    f_central = polish(cp, cp.candidate_edges, mm_opts)[1]
    clock = _Clock(not cfg.deterministic)

    if mode == "sparsify":
        pts = sparsify(cp, cfg.gamma_grid, mm_opts, warm_start=cfg.warm_start)
        rows = []
        for pt in pts:
            _, fp = polish(cp, pt.support, mm_opts)
            rows.append([pt.gamma, len(pt.support),
                         " ".join(f"{u}->{v}" for u, v in _one_based(pt.support)),
                         pt.f_value, fp, performance_loss(fp, f_central), pt.outer_iters,
                         pt.converged, 0.0 if cfg.deterministic else pt.solve_time])
        write_csv(os.path.join(out, "homotopy.csv"),
                  ["gamma", "n_edges", "edges", "f_value", "f_polished", "loss_percent",
                   "outer_iters", "converged", "solve_time"], rows, chash)
        if not all(pt.converged for pt in pts):
            raise CheckFailed("homotopy solve did not converge")
        return EXIT_OK

    if mode == "polish":
        if cfg.support is not None:
            support = [(u - 1, v - 1) for u, v in cfg.support]
        else:
            support = sparsify(cp, [cfg.gamma], mm_opts)[0].support
        t0 = clock()
        x, fp, rep = polish(cp, support, mm_opts, return_report=True)
        z = cp.Tbasis @ x
        chosen = set(map(tuple, support))
        weights = [{"edge": [u + 1, v + 1], "weight": float(z[i])}
                   for i, (u, v) in enumerate(cp.candidate_edges) if (u, v) in chosen]
        write_json(os.path.join(out, "polish.json"), {
            "config_hash": chash, "support": _one_based(support), "weights": weights,
            "f_value": fp, "f_plant": f0, "f_central": f_central,
            "loss_percent": performance_loss(fp, f_central), "solve_time": clock() - t0,
        })
        if rep is not None and not rep.converged:
            raise CheckFailed("polishing solve did not converge")
        return EXIT_OK

    if mode == "brute":
        t0 = clock()
        edges, fb = brute_force_best_subset(cp, cfg.k, mm_opts, budget=cfg.budget, workers=workers)
        write_json(os.path.join(out, "brute.json"), {
            "config_hash": chash, "k": cfg.k, "edges": _one_based(edges), "f_value": fb,
            "f_central": f_central, "loss_percent": performance_loss(fb, f_central),
            "solve_time": clock() - t0,
        })
        return EXIT_OK
    raise ConfigError(f"unknown consensus mode {mode!r}")


# ---------------------------------------------------------------- flow

def rate_fixture(seed, n, m, gamma):
    """Strongly convex quadratic plus l1 on a random full-row-rank ``T``."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    H = M @ M.T / n + np.eye(n)
    f = quadratic(H, rng.standard_normal(n))
    T = rng.standard_normal((m, n))
    return CompositeProblem(f, L1(gamma), LinearMap(T)), rng


def _rate(cfg: FlowCliConfig, out, chash):
    s = cfg.rate
    if s.m > s.n:
        raise ConfigError("rate fixture needs m <= n for full-rank T T^T")
    p, rng = rate_fixture(cfg.seed, s.n, s.m, s.gamma)
    m_f, L_f = p.f.m_f, p.f.L_f
    mu = s.mu if s.mu is not None else max(L_f - m_f, 1e-3)
    T = p.T.matrix
    lam = lambda_min_TTt(T)
    est = rate_estimates(m_f, L_f, mu, lam)
    eigs = np.linalg.eigvalsh(T @ T.T)
    quad_ok = check_quad_condition(0.99 * est.rho, m_f, mu, eigs)
    ref = mm_solve(p, np.zeros(p.n), np.zeros(p.m), MmOptions(eta_final=1e-12, omega_final=1e-12))
    times = np.linspace(0.0, s.t_end, s.samples)
    traj = integrate_flow(p, rng.standard_normal(p.n), rng.standard_normal(p.m),
                          FlowConfig(mu=mu, t_end=s.t_end, sample_times=times),
                          reference=(ref.x, ref.y))
    slope, tau = fit_log_slope(traj.times, traj.distance_to_ref, floor=s.fit_floor)
    est.tau_fit = tau
    envelope_ok = slope <= -est.rho + s.slack * est.rho
    traj.write_csv(os.path.join(out, "rate_trajectory.csv"), {"config_hash": chash})
    write_json(os.path.join(out, "rate_report.json"), {
        "config_hash": chash, "m_f": m_f, "L_f": L_f, "mu": mu, "lambda_min": lam,
        "gamma_hat": est.gamma_hat, "rho1": est.rho1, "rho2": est.rho2,
        "rho_certified": est.rho, "rho_bisected": bisect_rate(m_f, mu, eigs),
        "fitted_slope": slope, "tau_fit": tau, "quad_condition_ok": quad_ok,
        "envelope_ok": bool(envelope_ok), "reference_converged": ref.converged,
    })
    if cfg.test_mode and not (envelope_ok and quad_ok):
        raise CheckFailed("fitted rate violates the certified envelope")


def _placement(cfg: FlowCliConfig, out, chash):
    s = cfg.placement
    if s.targets is not None:
        edges = s.edges if s.edges is not None else path_edges(len(s.targets[0][1]))
        prob = PlacementProblem.from_edges([(t, np.array(b)) for t, b in s.targets], edges, s.bound)
    else:
        prob = random_scenario(s.n_agents, s.switch, cfg.seed, s.spread, s.bound)
    times = np.linspace(0.0, s.t_end, s.samples)
    traj = simulate_placement(prob, s.mu, FlowConfig(mu=s.mu, t_end=s.t_end, sample_times=times))
    segs = []
    for (ta, tb, i0, i1), (_, b) in zip(traj.meta["segments"], prob.targets_schedule):
        p = build_placement(prob, b)
        kkt = kkt_residuals(p, traj.x[i1], traj.y[i1])
        segs.append({"t_start": ta, "t_stop": tb, "targets": b, "kkt": list(kkt),
                     "max_distance": float(np.abs(p.T.apply(traj.x[i1])).max(initial=0.0))})
    traj.write_csv(os.path.join(out, "placement_trajectory.csv"), {"config_hash": chash})
    ok = all(max(sg["kkt"]) <= s.kkt_tol for sg in segs)
    feasible = segs[-1]["max_distance"] <= s.bound + 1e-6
    write_json(os.path.join(out, "placement_report.json"), {
        "config_hash": chash, "mu": s.mu, "segments": segs, "kkt_ok": ok, "feasible": feasible,
    })
    if cfg.test_mode and not (ok and feasible):
        raise CheckFailed("placement trajectory missed the KKT or feasibility tolerance")


def extra_fixture(seed, n_nodes):
    """Ring plus seeded chords; quadratic local objectives."""
    rng = np.random.default_rng(seed)
    Adj = np.zeros((n_nodes, n_nodes))
    for i in range(n_nodes):
        j = (i + 1) % n_nodes
        Adj[i, j] = Adj[j, i] = 1.0
    for _ in range(n_nodes // 2):
        i, j = rng.choice(n_nodes, size=2, replace=False)
        Adj[i, j] = Adj[j, i] = 1.0
    L = np.diag(Adj.sum(axis=1)) - Adj
    a = rng.uniform(0.5, 2.0, n_nodes)
    c = rng.standard_normal(n_nodes)
    return L, (lambda x: a * (x - c)), rng.standard_normal(n_nodes)


def run_extra_comparison(L, grad, x0, alpha, mu, steps):
    """Max deviation per step between EXTRA and the Euler-discretized flow."""
    beta = 1.0 / (2.0 * alpha * mu)
    W = np.eye(L.shape[0]) - (alpha / mu) * L
    hist = ExtraState(x0.copy())
    x, yt = x0.copy(), np.zeros_like(x0)
    devs = []
    for _ in range(steps):
        xe = extra_step(W, grad, alpha, hist)
        x, yt = network_flow_step(grad, L, x, yt, mu, beta, alpha)
        devs.append(float(np.max(np.abs(xe - x))))
    return devs


def _extra(cfg: FlowCliConfig, out, chash):
    s = cfg.extra
    L, grad, x0 = extra_fixture(cfg.seed, s.n_nodes)
    devs = run_extra_comparison(L, grad, x0, s.alpha, s.mu, s.steps)
    write_csv(os.path.join(out, "extra.csv"), ["k", "max_deviation"],
              [[k + 1, d] for k, d in enumerate(devs)], chash)
    if cfg.test_mode and max(devs) > s.tol:
        raise CheckFailed("EXTRA and network flow iterates diverge")


def cmd_flow(cfg: FlowCliConfig, out: str, mode: str) -> int:
    chash = config_hash(cfg)
    {"rate": _rate, "placement": _placement, "extra": _extra}[mode](cfg, out, chash)
    return EXIT_OK


# ---------------------------------------------------------------- entry

SCHEMAS = {"lasso": LassoConfig, "consensus": ConsensusConfig, "flow": FlowCliConfig}
DEFAULT_MODES = {"consensus": "sparsify", "flow": "rate"}


def build_parser():
    ap = argparse.ArgumentParser(prog="proxal", description="Proximal augmented Lagrangian experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SCHEMAS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file (defaults used when omitted)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--mode")
        sp.add_argument("--deterministic", action="store_true",
                        help="write zeros in timing columns so outputs are byte-identical")
        if name == "consensus":
            sp.add_argument("--allow-large", action="store_true",
                            help=f"permit scaling runs with N > {MAX_SCALING_N}")
    return ap


def load_config(command, path, seed=None, deterministic=False):
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if seed is not None:
        raw["seed"] = seed
    if deterministic:
        raw["deterministic"] = True
    try:
        return SCHEMAS[command].model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.seed, args.deterministic)
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        os.makedirs(args.out, exist_ok=True)
        if args.command == "lasso":
            return cmd_lasso(cfg, args.out)
        mode = args.mode or cfg.mode or DEFAULT_MODES[args.command]
        if mode != cfg.mode and (args.mode or cfg.mode):
            cfg = cfg.model_copy(update={"mode": mode})
        valid = {"consensus": ("sparsify", "polish", "brute", "scaling"),
                 "flow": ("rate", "placement", "extra")}[args.command]
        if mode not in valid:
            raise ConfigError(f"mode must be one of {valid}")
        if args.command == "consensus":
            return cmd_consensus(cfg, args.out, mode, args.workers, args.allow_large)
        return cmd_flow(cfg, args.out, mode)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ProxalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
