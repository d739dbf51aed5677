"""ADMM (fixed and residual-balancing penalty) and ISTA baselines."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MaxIterExceeded, PreconditionViolated
from .inner import minimize_smooth
from .mm import SolveReport
from .problem import CompositeProblem, kkt_residuals
from .regularizers import soft_threshold

__all__ = ["AdmmOptions", "AdmmRecord", "admm_solve", "ista_solve"]


@dataclass
class AdmmOptions:
    """ADMM settings.

    With ``adaptive=True`` the penalty follows residual balancing: when the
    primal residual exceeds ``mu_ratio_threshold`` times the dual residual,
    ``mu`` is divided by ``tau_incr``; in the opposite case it is multiplied
    by ``tau_decr``. The x-step is solved to ``x_tol`` (default
    ``tol_primal / 10``).
    """

    mu: float = 1e-1
    adaptive: bool = False
    tau_incr: float = 2.0
    tau_decr: float = 2.0
    mu_ratio_threshold: float = 10.0
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    max_iter: int = 10000
    inner: str = "lbfgs"
    lbfgs_memory: int = 10
    max_inner: int = 5000
    x_tol: Optional[float] = None


@dataclass
class AdmmRecord:
    outer_iter: int
    mu: float
    primal_res: float
    dual_res: float
    inner_iters: int
    wall_time: float


def admm_solve(p: CompositeProblem, x0, z0, y0, opts: Optional[AdmmOptions] = None) -> SolveReport:
    """Classical ADMM on ``f(x) + g(z)`` subject to ``T x - z = 0``."""
    opts = opts or AdmmOptions()
    if opts.mu <= 0 or opts.tol_primal <= 0 or opts.tol_dual <= 0:
        raise PreconditionViolated("ADMM parameters must be positive")
    x = np.array(x0, dtype=float, copy=True)
    z = np.array(z0, dtype=float, copy=True)
    y = np.array(y0, dtype=float, copy=True)
    if x.shape != (p.n,) or z.shape != (p.m,) or y.shape != (p.m,):
        raise PreconditionViolated("x0 / z0 / y0 dimensions do not match the problem")
    x_tol = opts.x_tol if opts.x_tol is not None else opts.tol_primal / 10.0
    T = p.T
    mu = opts.mu
    history = []
    total_inner = 0
    converged = False
    t_start = time.perf_counter()

    for k in range(opts.max_iter):
        t0 = time.perf_counter()
        shift = z - mu * y

        # f(x) + ||T x - z + mu y||^2 / (2 mu), constants dropped
        def oracle(xx, shift=shift, mu=mu):
            fx, gf = p.f.both(xx)
            if not np.isfinite(fx):
                return np.inf, None
            r = T.apply(xx) - shift
            return fx + r @ r / (2.0 * mu), gf + T.adjoint(r) / mu

        res = minimize_smooth(oracle, x, x_tol, opts.inner, opts.max_inner, opts.lbfgs_memory)
        x = res.x
        total_inner += res.iters
        Tx = T.apply(x)
        z_new = p.g.prox(Tx + mu * y, mu)
        y = y + (Tx - z_new) / mu
        r_pri = float(np.linalg.norm(Tx - z_new))
        r_dual = float(np.linalg.norm(T.adjoint(z_new - z)) / mu)
        z = z_new
        history.append(AdmmRecord(k, mu, r_pri, r_dual, res.iters, time.perf_counter() - t0))
        if r_pri <= opts.tol_primal and r_dual <= opts.tol_dual:
            converged = True
            break
        if opts.adaptive:
            if r_pri > opts.mu_ratio_threshold * r_dual:
                mu /= opts.tau_incr
            elif r_dual > opts.mu_ratio_threshold * r_pri:
                mu *= opts.tau_decr

    return SolveReport(
        x=x, y=y, converged=converged,
        status="converged" if converged else "max_iter",
        outer_iters=len(history), total_inner_iters=total_inner,
        kkt=kkt_residuals(p, x, y), history=history, z=z, mu=mu,
        wall_time=time.perf_counter() - t_start,
    )


def ista_solve(A, b, gamma, step_rule="fixed", tol=1e-10, max_iter=100000, x0=None,
               return_info=False):
    """ISTA for ``||A x - b||^2 / 2 + gamma ||x||_1``.

    ``step_rule`` is ``"fixed"`` (``1 / ||A^T A||_2``) or ``"backtracking"``.
    Stops when ``||x_next - x|| / alpha <= tol``. With ``return_info`` the
    iteration count is returned as well.
    """
    if gamma <= 0:
        raise PreconditionViolated("gamma must be positive")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.zeros(A.shape[1]) if x0 is None else np.array(x0, dtype=float)
    L = np.linalg.norm(A.T @ A, 2)
    alpha = 1.0 / L if L > 0 else 1.0

    def f(v):
        r = A @ v - b
        return 0.5 * r @ r

    for it in range(max_iter):
        g = A.T @ (A @ x - b)
        if step_rule == "fixed":
            xn = soft_threshold(x - alpha * g, gamma * alpha)
        elif step_rule == "backtracking":
            fx = f(x)
            alpha = min(2.0 * alpha, 1e6)
            while True:
                xn = soft_threshold(x - alpha * g, gamma * alpha)
                d = xn - x
                if f(xn) <= fx + g @ d + d @ d / (2.0 * alpha) or alpha < 1e-16:
                    break
                alpha *= 0.5
        else:
            raise ValueError(f"unknown step rule {step_rule!r}")
        if np.linalg.norm(xn - x) / alpha <= tol:
            return (xn, it + 1) if return_info else xn
        x = xn
    raise MaxIterExceeded("ISTA did not reach tolerance", x=x)
