"""Distributed placement: agents track targets while keeping neighbor
distances inside ``[-bound, bound]``.

    minimize  sum_i (x_i - b_i)^2 + I_[-bound, bound](T x)

with ``T`` the network incidence matrix (one row per edge).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import PreconditionViolated
from .flow import FlowConfig, FlowTrajectory, integrate_flow
from .problem import CompositeProblem, LinearMap, SmoothObjective
from .regularizers import BoxIndicator

__all__ = [
    "PlacementProblem",
    "incidence_matrix",
    "path_edges",
    "build_placement",
    "simulate_placement",
    "load_scenario",
    "random_scenario",
]


def incidence_matrix(n_agents, edges) -> np.ndarray:
    """Rows ``e_i - e_j`` for each edge ``(i, j)`` (0-based)."""
    T = np.zeros((len(edges), n_agents))
    for r, (i, j) in enumerate(edges):
        if i == j:
            raise PreconditionViolated("self-loop in placement network")
        T[r, i] = 1.0
        T[r, j] = -1.0
    return T


def path_edges(n_agents):
    return [(i, i + 1) for i in range(n_agents - 1)]


@dataclass
class PlacementProblem:
    targets_schedule: List[Tuple[float, np.ndarray]]
    incidence_T: LinearMap
    bound: float = 1.0

    def __post_init__(self):
        if not self.targets_schedule:
            raise PreconditionViolated("empty target schedule")
        self.targets_schedule = [(float(t), np.asarray(b, dtype=float))
                                 for t, b in self.targets_schedule]
        times = [t for t, _ in self.targets_schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise PreconditionViolated("switch times must be ascending")
        if not isinstance(self.incidence_T, LinearMap):
            self.incidence_T = LinearMap(np.atleast_2d(np.asarray(self.incidence_T, float)))
        M = self.incidence_T.matrix
        n = self.n_agents
        if M.shape[1] != n and M.size:
            raise PreconditionViolated("incidence matrix does not match target dimension")
        for row in M:
            if not (np.sum(row == 1.0) == 1 and np.sum(row == -1.0) == 1
                    and np.count_nonzero(row) == 2):
                raise PreconditionViolated("incidence rows need one +1 and one -1")
        if any(b.shape != (n,) for _, b in self.targets_schedule):
            raise PreconditionViolated("all targets must have the same length")
        if self.bound <= 0:
            raise PreconditionViolated("bound must be positive")

    @property
    def n_agents(self):
        return self.targets_schedule[0][1].size

    @classmethod
    def from_edges(cls, targets_schedule, edges, bound=1.0):
        n = np.asarray(targets_schedule[0][1]).size
        T = incidence_matrix(n, edges)
        if T.shape[0] == 0:
            T = np.zeros((0, n))
        return cls(targets_schedule, LinearMap(T), bound)


def build_placement(problem: PlacementProblem, b=None) -> CompositeProblem:
    """Composite problem for targets ``b`` (default: the first in the schedule)."""
    b = problem.targets_schedule[0][1] if b is None else np.asarray(b, dtype=float)

    def value(x):
        d = x - b
        return float(d @ d)

    def grad(x):
        return 2.0 * (x - b)

    f = SmoothObjective(value, grad, m_f=2.0, L_f=2.0)
    return CompositeProblem(f, BoxIndicator(-problem.bound, problem.bound), problem.incidence_T)


def simulate_placement(problem: PlacementProblem, mu, cfg: FlowConfig, x0=None, y0=None):
    """Integrate the flow, swapping targets at each switch time.

    The state (including the dual variable) is carried across switches.
    Returns the concatenated :class:`FlowTrajectory`; ``meta["segments"]``
    lists ``(t_start, t_stop, first_index, last_index)`` per target.
    """
    if mu <= 0:
        raise PreconditionViolated("mu must be positive")
    n = problem.n_agents
    m = problem.incidence_T.shape[0]
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    y = np.zeros(m) if y0 is None else np.asarray(y0, dtype=float)
    all_t = cfg.times()
    sched = problem.targets_schedule
    t_bounds = [t for t, _ in sched] + [cfg.t_end]
    if t_bounds[0] > all_t[0]:
        raise PreconditionViolated("schedule must start at or before the first sample time")
    ts, xs, ys, segs = [], [], [], []
    for k, (t_start, b) in enumerate(sched):
        t_stop = min(t_bounds[k + 1], cfg.t_end)
        if t_stop <= t_start:
            break
        inner = all_t[(all_t > t_start) & (all_t < t_stop)]
        seg_t = np.concatenate([[t_start], inner, [t_stop]])
        seg_cfg = FlowConfig(mu=mu, t_end=t_stop, integrator=cfg.integrator, rtol=cfg.rtol,
                             atol=cfg.atol, alpha=cfg.alpha, sample_times=seg_t)
        tr = integrate_flow(build_placement(problem, b), x, y, seg_cfg)
        keep = slice(1, None) if ts else slice(None)
        first = sum(len(a) for a in ts)
        ts.append(tr.times[keep])
        xs.append(tr.x[keep])
        ys.append(tr.y[keep])
        segs.append((t_start, t_stop, first, first + len(tr.times[keep]) - 1))
        x, y = tr.x[-1], tr.y[-1]
    traj = FlowTrajectory(np.concatenate(ts), np.vstack(xs), np.vstack(ys))
    traj.meta["segments"] = segs
    traj.meta["mu"] = mu
    return traj


def load_scenario(path_or_dict):
    """Parse the scenario JSON (edges 0-based).

    ``{"targets": [[t0, [b...]], ...], "edges": [[i, j], ...], "bound": 1.0,
    "mu": ..., "t_end": ...}``. Returns ``(problem, mu, t_end)``.
    """
    if isinstance(path_or_dict, dict):
        d = path_or_dict
    else:
        with open(path_or_dict) as fh:
            d = json.load(fh)
    sched = [(float(t), b) for t, b in d["targets"]]
    prob = PlacementProblem.from_edges(sched, [tuple(e) for e in d["edges"]],
                                       float(d.get("bound", 1.0)))
    return prob, float(d.get("mu", 1.0)), float(d.get("t_end", 10.0))


def random_scenario(n_agents=5, switch=5.0, seed=0, spread=2.0, bound=1.0):
    """Path network with targets drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    b0 = np.sort(rng.uniform(-spread, spread, n_agents))
    b1 = np.sort(rng.uniform(-spread, spread, n_agents))[::-1].copy()
    return PlacementProblem.from_edges([(0.0, b0), (switch, b1)], path_edges(n_agents), bound)
