"""Method of multipliers on the proximal augmented Lagrangian.

Each outer step minimizes ``L_mu(x; y)`` over ``x`` to ``||grad_x|| <= omega_k``.
If the primal residual ``||grad_y||`` is below ``eta_k`` the multiplier takes
a gradient-ascent step of length ``1/mu``; otherwise the penalty parameter is
shrunk. The tolerance schedule is

    accept:  y += grad_y / mu,   eta *= mu**0.9,   omega *= mu
    reject:  mu = max(mu * shrink, mu_min),  eta = mu**0.1,  omega = mu
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import PreconditionViolated
from .inner import METHODS, inner_minimize
from .problem import CompositeProblem, evaluate, kkt_residuals

__all__ = ["MmOptions", "MmRecord", "SolveReport", "mm_solve"]


@dataclass
class MmOptions:
    mu0: float = 1e-1
    mu_min: float = 1e-5
    mu_shrink: float = 1.0 / 5.0
    eta_final: float = 1e-6
    omega_final: float = 1e-6
    max_outer: int = 100
    inner: str = "lbfgs"
    lbfgs_memory: int = 10
    max_inner: int = 5000
    armijo_c: float = 1e-4
    armijo_beta: float = 0.5

    def validate(self, p: Optional[CompositeProblem] = None):
        if not (0 < self.mu_min <= self.mu0):
            raise PreconditionViolated("need 0 < mu_min <= mu0")
        if not (0 < self.mu_shrink < 1):
            raise PreconditionViolated("mu_shrink must lie in (0, 1)")
        if self.eta_final <= 0 or self.omega_final <= 0:
            raise PreconditionViolated("tolerances must be positive")
        if self.inner not in METHODS:
            raise PreconditionViolated(f"unknown inner method {self.inner!r}")
        if self.inner == "prox_grad" and p is not None and not p.T.is_identity:
            raise PreconditionViolated("prox_grad inner method requires T = I")


@dataclass
class MmRecord:
    """One outer iteration. ``mu``, ``eta``, ``omega`` are the values used at
    this iteration; ``accepted`` tells which branch produced the next ones."""

    outer_iter: int
    mu: float
    eta: float
    omega: float
    primal_res: float
    grad_norm: float
    inner_iters: int
    wall_time: float
    accepted: bool
    stalled: bool = False


@dataclass
class SolveReport:
    x: np.ndarray
    y: np.ndarray
    converged: bool
    status: str
    outer_iters: int
    total_inner_iters: int
    kkt: tuple
    history: List = field(default_factory=list)
    z: Optional[np.ndarray] = None
    mu: Optional[float] = None
    wall_time: float = 0.0

    @property
    def x_final(self):
        return self.x

    @property
    def y_final(self):
        return self.y


def mm_solve(p: CompositeProblem, x0, y0, opts: Optional[MmOptions] = None) -> SolveReport:
    """Solve ``min f(x) + g(T x)``; returns a :class:`SolveReport`.

    On convergence the reported multiplier is ``y + grad_y / mu``, the
    multiplier update the final iterate would have taken; it equals
    ``grad M_{mu g}(T x + mu y)`` and is therefore a subgradient of g at z.
    """
    opts = opts or MmOptions()
    opts.validate(p)
    x = np.array(x0, dtype=float, copy=True)
    y = np.array(y0, dtype=float, copy=True)
    if x.shape != (p.n,) or y.shape != (p.m,):
        raise PreconditionViolated("x0 / y0 dimensions do not match the problem")

    mu = opts.mu0
    eta = mu**0.1
    omega = mu
    history: List[MmRecord] = []
    total_inner = 0
    t_start = time.perf_counter()
    converged = False
    status = "max_outer"
    ev = None

    for k in range(opts.max_outer):
        t0 = time.perf_counter()
        res = inner_minimize(
            p, y, mu, x, max(omega, opts.omega_final), opts.inner, opts.max_inner,
            opts.lbfgs_memory, opts.armijo_c, opts.armijo_beta,
        )
        x = res.x
        total_inner += res.iters
        ev = evaluate(p, x, y, mu)
        gy = float(np.linalg.norm(ev.grad_y))
        gx = float(np.linalg.norm(ev.grad_x))
        accepted = (not res.stalled) and gy <= eta
        history.append(MmRecord(k, mu, eta, omega, gy, gx, res.iters,
                                time.perf_counter() - t0, accepted, res.stalled))
        if accepted:
            y_next = y + ev.grad_y / mu
            if gy <= opts.eta_final and gx <= opts.omega_final:
                y = y_next
                converged = True
                status = "converged"
                break
            y = y_next
            eta = eta * mu**0.9
            omega = omega * mu
        else:
            mu = max(mu * opts.mu_shrink, opts.mu_min)
            eta = mu**0.1
            omega = mu

    z = ev.z if ev is not None else None
    return SolveReport(
        x=x, y=y, converged=converged, status=status,
        outer_iters=len(history), total_inner_iters=total_inner,
        kkt=kkt_residuals(p, x, y), history=history, z=z, mu=mu,
        wall_time=time.perf_counter() - t_start,
    )
