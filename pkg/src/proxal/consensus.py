"""Edge addition in directed consensus networks.

An added edge ``u -> v`` with weight ``z`` contributes ``z (e_v e_v^T - e_v e_u^T)``
to the controller Laplacian (node ``v`` listens to node ``u``), so every
Laplacian has zero row sums. Balance of the closed loop (zero column sums)
is the linear constraint ``E z = 0``; edge weights are parameterized as
``z = T x`` with the columns of ``T`` an orthonormal basis of the cycle space.

The objective is the squared H2 norm of the deviation-from-average system,

    f(x) = <V^T (Q + L_x^T R L_x) V, X>,   A X + X A^T + V^T V = 0,
    A = -V^T (L_p + L_x) V,

which is ``inf`` whenever ``A`` is not Hurwitz.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import NotHurwitz, PlantNotBalanced, PlantNotConnected, SubsetBudgetExceeded
from .mm import MmOptions, mm_solve
from .numerics import is_hurwitz, nullspace_basis, ones_complement, solve_lyapunov
from .problem import CompositeProblem, LinearMap, SmoothObjective
from .regularizers import PatternNonneg, ShiftedL1Nonneg

__all__ = [
    "DirectedGraph",
    "ConsensusProblem",
    "laplacian",
    "fig2_plant",
    "cycle_graph",
    "all_pairs",
    "build_consensus_problem",
    "controller_laplacian",
    "h2_value",
    "h2_gradient",
    "h2_objective",
    "sparsify",
    "polish",
    "brute_force_best_subset",
    "performance_loss",
    "HomotopyPoint",
]


@dataclass
class DirectedGraph:
    """``n_nodes`` nodes (0-based) and weighted directed edges ``(u, v, w)``."""

    n_nodes: int
    edges: List[Tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        for u, v, w in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if w < 0:
                raise ValueError("edge weights must be nonnegative")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range")

    @classmethod
    def from_dict(cls, d: dict) -> "DirectedGraph":
        """Parse ``{"n": 7, "edges": [[1, 2, 1.0], ...]}`` with 1-based nodes."""
        edges = []
        for e in d["edges"]:
            w = float(e[2]) if len(e) > 2 else 1.0
            edges.append((int(e[0]) - 1, int(e[1]) - 1, w))
        return cls(int(d["n"]), edges)

    def to_dict(self) -> dict:
        return {"n": self.n_nodes, "edges": [[u + 1, v + 1, w] for u, v, w in self.edges]}


def laplacian(graph: DirectedGraph) -> np.ndarray:
    L = np.zeros((graph.n_nodes, graph.n_nodes))
    for u, v, w in graph.edges:
        L[v, v] += w
        L[v, u] -= w
    return L


def fig2_plant(weight: float = 1.0) -> DirectedGraph:
    """The 7-node, 10-edge balanced plant: directed 4-cycle plus a bidirectional chain."""
    pairs = [(1, 2), (2, 3), (3, 4), (4, 1),
             (2, 5), (5, 2), (5, 6), (6, 5), (6, 7), (7, 6)]
    return DirectedGraph(7, [(u - 1, v - 1, weight) for u, v in pairs])


def cycle_graph(N: int, weight: float = 1.0) -> DirectedGraph:
    return DirectedGraph(N, [(i, (i + 1) % N, weight) for i in range(N)])


def all_pairs(N: int) -> List[Tuple[int, int]]:
    """All ``N^2 - N`` ordered node pairs."""
    return [(u, v) for u in range(N) for v in range(N) if u != v]


@dataclass(eq=False)
class ConsensusProblem:
    Lp: np.ndarray
    candidate_edges: List[Tuple[int, int]]
    E: np.ndarray
    Tbasis: np.ndarray
    V: np.ndarray
    R: np.ndarray
    gamma: float = 0.0
    lyap_method: str = "auto"

    def __post_init__(self):
        edges = np.asarray(self.candidate_edges, dtype=int).reshape(-1, 2)
        self._src = edges[:, 0]
        self._dst = edges[:, 1]
        self._R_is_identity = np.array_equal(self.R, np.eye(self.n))

    @property
    def n(self) -> int:
        return self.Lp.shape[0]

    @property
    def m(self) -> int:
        return len(self.candidate_edges)

    @property
    def d(self) -> int:
        return self.Tbasis.shape[1]

    @property
    def Q(self):
        return np.eye(self.n) - np.ones((self.n, self.n)) / self.n

    @property
    def Lhat(self) -> np.ndarray:
        """The ``d`` basis Laplacians, stacked as a ``(d, n, n)`` array."""
        return np.stack([self.edge_laplacian(self.Tbasis[:, k]) for k in range(self.d)])

    def edge_laplacian(self, z) -> np.ndarray:
        """``sum_l z_l L_l`` for candidate-edge weights ``z``."""
        L = np.zeros((self.n, self.n))
        np.add.at(L, (self._dst, self._dst), z)
        np.add.at(L, (self._dst, self._src), -np.asarray(z))
        return L

    def edge_inner(self, G) -> np.ndarray:
        """``<G, L_l>`` for every candidate edge ``l``."""
        return G[self._dst, self._dst] - G[self._dst, self._src]

    def edges_to_pattern(self, support) -> np.ndarray:
        index = {e: i for i, e in enumerate(self.candidate_edges)}
        pattern = np.zeros(self.m, dtype=bool)
        for e in support:
            pattern[index[tuple(e)]] = True
        return pattern


def build_consensus_problem(plant: DirectedGraph, candidates: Optional[Sequence] = None,
                            R=None, gamma: float = 0.0, V=None) -> ConsensusProblem:
    """Assemble the cycle-space parameterization for ``plant`` and ``candidates``.

    ``candidates`` defaults to all ordered node pairs. Raises
    :class:`PlantNotBalanced` or :class:`PlantNotConnected` when the plant
    Laplacian has nonzero column sums or a disconnected underlying graph.
    """
    Lp = laplacian(plant)
    N = plant.n_nodes
    scale = max(1.0, np.abs(Lp).max())
    if np.abs(Lp.sum(axis=0)).max() > 1e-10 * scale:
        raise PlantNotBalanced("plant Laplacian has nonzero column sums")
    sym = -(Lp + Lp.T) / 2.0
    np.fill_diagonal(sym, 0.0)
    # second-smallest eigenvalue of the symmetrized Laplacian
    Ls = np.diag((sym != 0).sum(axis=1)) - (sym != 0)
    if N > 1 and np.linalg.eigvalsh(Ls.astype(float))[1] <= 1e-9:
        raise PlantNotConnected("plant graph is not connected")
    cand = [tuple(int(i) for i in e) for e in (candidates if candidates is not None else all_pairs(N))]
    m = len(cand)
    E = np.zeros((N, m))
    for l, (u, v) in enumerate(cand):
        E[v, l] += 1.0
        E[u, l] -= 1.0
    Tbasis = nullspace_basis(E)
    V = ones_complement(N) if V is None else np.asarray(V, dtype=float)
    R = np.eye(N) if R is None else np.asarray(R, dtype=float)
    return ConsensusProblem(Lp, cand, E, Tbasis, V, R, gamma)


def controller_laplacian(cp: ConsensusProblem, x) -> np.ndarray:
    return cp.edge_laplacian(cp.Tbasis @ np.asarray(x, dtype=float))


def _h2_parts(cp: ConsensusProblem, x, need_grad):
    Lx = controller_laplacian(cp, x)
    V = cp.V
    A = -V.T @ (cp.Lp + Lx) @ V
    if not is_hurwitz(A):
        return np.inf, None
    RLx = Lx if cp._R_is_identity else cp.R @ Lx
    LV = Lx @ V
    W = np.eye(V.shape[1]) + LV.T @ (RLx @ V)  # V^T (Q + Lx^T R Lx) V, with V^T Q V = I
    X = solve_lyapunov(A, np.eye(V.shape[1]), cp.lyap_method, check=False)
    val = float(np.sum(W * X))
    if not need_grad:
        return val, None
    P = solve_lyapunov(A.T, W, cp.lyap_method, check=False)
    G = 2.0 * (RLx @ V - V @ P) @ X @ V.T
    return val, cp.Tbasis.T @ cp.edge_inner(G)


def h2_value(cp: ConsensusProblem, x) -> float:
    """Squared H2 norm; ``inf`` when the reduced closed loop is not Hurwitz."""
    return _h2_parts(cp, x, False)[0]


def h2_gradient(cp: ConsensusProblem, x) -> np.ndarray:
    val, g = _h2_parts(cp, x, True)
    if g is None:
        raise NotHurwitz("closed loop is not stable at x")
    return g


def h2_objective(cp: ConsensusProblem) -> SmoothObjective:
    return SmoothObjective(
        value=lambda x: h2_value(cp, x),
        grad=lambda x: h2_gradient(cp, x),
        value_and_grad=lambda x: _h2_parts(cp, x, True),
    )


def _support(cp: ConsensusProblem, x):
    z = cp.Tbasis @ x
    tol = 1e-6 * max(1.0, float(np.max(np.abs(z), initial=0.0)))
    return [cp.candidate_edges[l] for l in np.flatnonzero(z > tol)]


@dataclass
class HomotopyPoint:
    gamma: float
    x: np.ndarray
    support: List[Tuple[int, int]]
    f_value: float
    solve_time: float
    outer_iters: int
    converged: bool


def sparsify(cp: ConsensusProblem, gamma_grid, mm_opts: Optional[MmOptions] = None,
             warm_start: bool = True) -> List[HomotopyPoint]:
    """Trace the gamma-homotopy of ``f(x) + gamma 1^T z + I_+(z)``, ``z = T x``."""
    gamma_grid = list(gamma_grid)
    if any(b < a for a, b in zip(gamma_grid, gamma_grid[1:])):
        raise ValueError("gamma_grid must be ascending")
    f = h2_objective(cp)
    T = LinearMap(cp.Tbasis)
    x = np.zeros(cp.d)
    y = np.zeros(cp.m)
    out = []
    for gam in gamma_grid:
        p = CompositeProblem(f, ShiftedL1Nonneg(gam), T)
        if not warm_start:
            x, y = np.zeros(cp.d), np.zeros(cp.m)
        t0 = time.perf_counter()
        rep = mm_solve(p, x, y, mm_opts)
        x, y = rep.x, rep.y
        out.append(HomotopyPoint(gam, x.copy(), _support(cp, x), h2_value(cp, x),
                                 time.perf_counter() - t0, rep.outer_iters, rep.converged))
    return out


def _admits_balanced(cp: ConsensusProblem, pattern) -> bool:
    # whether some nonzero balanced z lives on the support
    idx = np.flatnonzero(pattern)
    if idx.size == 0:
        return False
    return nullspace_basis(cp.E[:, idx]).shape[1] > 0


def polish(cp: ConsensusProblem, support, mm_opts: Optional[MmOptions] = None,
           x0=None, return_report=False):
    """Optimal weights on a fixed edge ``support``; returns ``(x, f_value)``.

    A support carrying no nonzero balanced edge weights has feasible set
    ``{0}``, so the baseline ``x = 0`` is returned without solving.
    """
    pattern = cp.edges_to_pattern(support)
    if not _admits_balanced(cp, pattern):
        x = np.zeros(cp.d)
        return (x, h2_value(cp, x), None) if return_report else (x, h2_value(cp, x))
    p = CompositeProblem(h2_objective(cp), PatternNonneg(pattern), LinearMap(cp.Tbasis))
    x0 = np.zeros(cp.d) if x0 is None else x0
    rep = mm_solve(p, x0, np.zeros(cp.m), mm_opts)
    if return_report:
        return rep.x, h2_value(cp, rep.x), rep
    return rep.x, h2_value(cp, rep.x)


def brute_force_best_subset(cp: ConsensusProblem, k: int, mm_opts: Optional[MmOptions] = None,
                            budget: int = 10**6, workers: int = 1):
    """Exhaustive search over all ``k``-edge supports; returns ``(edges, f_value)``.

    Ties go to the lexicographically first support in candidate order.
    """
    count = math.comb(cp.m, k)
    if count > budget:
        raise SubsetBudgetExceeded(f"C({cp.m}, {k}) = {count} exceeds budget {budget}")
    subsets = list(itertools.combinations(range(cp.m), k))

    def score(sub):
        edges = [cp.candidate_edges[l] for l in sub]
        return polish(cp, edges, mm_opts)[1]

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(score, subsets))
    else:
        values = [score(s) for s in subsets]
    best = int(np.argmin(values))  # first minimizer = lexicographic tie-break
    return [cp.candidate_edges[l] for l in subsets[best]], float(values[best])


def performance_loss(f_value: float, f_central: float) -> float:
    """Percent increase of the objective over the all-edges optimum."""
    return 100.0 * (f_value - f_central) / f_central
