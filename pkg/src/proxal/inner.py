"""Smooth minimization routines for the MM and ADMM primal subproblems."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import LineSearchFailure, NoConvergence, PreconditionViolated
from .problem import CompositeProblem, evaluate
from .regularizers import Regularizer

__all__ = [
    "armijo_step",
    "LbfgsMemory",
    "lbfgs_direction",
    "prox_of_moreau",
    "InnerResult",
    "minimize_smooth",
    "inner_minimize",
    "METHODS",
]

METHODS = ("lbfgs", "gd", "prox_grad")

ARMIJO_C = 1e-4
ARMIJO_BETA = 0.5
MAX_HALVINGS = 60


def armijo_step(phi, x, direction, grad, alpha0=1.0, c=ARMIJO_C, beta=ARMIJO_BETA,
                phi_x=None):
    """Largest ``alpha0 * beta**j`` satisfying the Armijo sufficient-decrease test.

    ``phi`` maps a point to a scalar (``inf`` is rejected like any other
    failure of the test). Raises :class:`LineSearchFailure` after 60 halvings.
    """
    slope = float(np.dot(grad, direction))
    if not slope < 0:
        raise PreconditionViolated("direction is not a descent direction")
    fx = phi(x) if phi_x is None else phi_x
    alpha = alpha0
    for _ in range(MAX_HALVINGS + 1):
        if phi(x + alpha * direction) <= fx + c * alpha * slope:
            return alpha
        alpha *= beta
    raise LineSearchFailure("Armijo backtracking exhausted")


def _backtrack(oracle, x, fx, g, d, alpha0, c, beta):
    # Like armijo_step, but keeps the gradient at the accepted point. Near a
    # minimizer the Armijo decrease drops below the rounding error of f, so a
    # step is also accepted under the approximate-Armijo test of Hager-Zhang:
    # f within rounding of fx and the directional derivative not overshooting.
    slope = float(np.dot(g, d))
    noise = 1e-10 * max(abs(fx), 1e-300)
    alpha = alpha0
    for _ in range(MAX_HALVINGS + 1):
        xn = x + alpha * d
        fn, gn = oracle(xn)
        if fn <= fx + c * alpha * slope:
            return alpha, xn, fn, gn
        if (np.isfinite(fn) and fn <= fx + noise
                and float(np.dot(gn, d)) <= (1.0 - 2.0 * c) * abs(slope)):
            return alpha, xn, fn, gn
        alpha *= beta
    raise LineSearchFailure("Armijo backtracking exhausted")


class LbfgsMemory:
    """Curvature pairs ``(s, u)`` for the two-loop recursion."""

    def __init__(self, size=10):
        self.pairs = deque(maxlen=size)

    def __len__(self):
        return len(self.pairs)

    def push(self, s, u) -> bool:
        su = float(np.dot(s, u))
        if su <= 1e-14 * np.linalg.norm(s) * np.linalg.norm(u) or su <= 0:
            return False
        self.pairs.append((s, u))
        return True

    def clear(self):
        self.pairs.clear()

    def direction(self, grad):
        return lbfgs_direction(self.pairs, grad)


def lbfgs_direction(history, grad):
    """``-H grad`` by the two-loop recursion; ``-grad`` for empty history."""
    q = np.array(grad, dtype=float, copy=True)
    if not history:
        return -q
    alphas = []
    for s, u in reversed(history):
        rho = 1.0 / np.dot(s, u)
        a = rho * np.dot(s, q)
        q -= a * u
        alphas.append((rho, a))
    s, u = history[-1]
    q *= np.dot(s, u) / np.dot(u, u)
    for (s, u), (rho, a) in zip(history, reversed(alphas)):
        b = rho * np.dot(u, q)
        q += (a - b) * s
    return -q


def prox_of_moreau(reg: Regularizer, v, mu, alpha, tol=1e-10, max_iter=10000,
                   seed="closed_form"):
    """Prox of ``alpha * M_{mu g}`` at ``v``.

    Returns the fixed point of ``x = (alpha prox_{mu g}(x) + mu v) / (mu + alpha)``.
    The map contracts with modulus ``alpha / (mu + alpha)``; for
    ``alpha >> mu`` that is close to 1, so by default the iteration is seeded
    with ``v + alpha / (mu + alpha) (prox_{(mu+alpha) g}(v) - v)`` and then
    polished until the fixed-point residual is below ``tol``.
    """
    if mu <= 0 or alpha <= 0:
        raise PreconditionViolated("mu and alpha must be positive")
    v = np.asarray(v, dtype=float)
    w = mu + alpha
    if seed == "closed_form":
        x = v + (alpha / w) * (reg.prox(v, w) - v)
    else:
        x = v.copy()
    for _ in range(max_iter):
        xn = (alpha * reg.prox(x, mu) + mu * v) / w
        if np.linalg.norm(xn - x) <= tol * (1.0 + np.linalg.norm(x)):
            return xn
        x = xn
    raise NoConvergence("prox_of_moreau fixed point did not converge")


@dataclass
class InnerResult:
    x: np.ndarray
    iters: int
    grad_norm: float
    value: float
    stalled: bool = False
    reason: str = ""


def minimize_smooth(oracle: Callable, x0, tol, method="lbfgs", max_iter=5000,
                    memory=10, c=ARMIJO_C, beta=ARMIJO_BETA) -> InnerResult:
    """Minimize a once-differentiable function to ``||grad|| <= tol``.

    ``oracle(x)`` returns ``(value, grad)``; ``value = inf`` marks points
    outside the domain, which the line search rejects.
    """
    if method not in ("lbfgs", "gd"):
        raise ValueError(f"unknown smooth method {method!r}")
    x = np.array(x0, dtype=float, copy=True)
    fx, g = oracle(x)
    if not np.isfinite(fx):
        raise PreconditionViolated("initial point is outside the domain of f")
    mem = LbfgsMemory(memory if method == "lbfgs" else 0)
    alpha_gd = 1.0
    for it in range(max_iter):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return InnerResult(x, it, gn, fx)
        if method == "lbfgs" and len(mem):
            d = mem.direction(g)
            if np.dot(d, g) >= 0:
                mem.clear()
                d = -g
            alpha0 = 1.0
        elif method == "lbfgs":
            # first step: unit-length move along -g
            d = -g
            alpha0 = min(1.0, 1.0 / gn)
        else:
            d = -g
            alpha0 = min(2.0 * alpha_gd, 1e12)
        try:
            alpha, xn, fn, gnew = _backtrack(oracle, x, fx, g, d, alpha0, c, beta)
        except LineSearchFailure:
            if len(mem):
                mem.clear()
                continue
            return InnerResult(x, it, gn, fx, stalled=True, reason="line_search")
        if method == "lbfgs":
            mem.push(xn - x, gnew - g)
        else:
            alpha_gd = alpha
        x, fx, g = xn, fn, gnew
    gn = float(np.linalg.norm(g))
    if gn <= tol:
        return InnerResult(x, max_iter, gn, fx)
    return InnerResult(x, max_iter, gn, fx, stalled=True, reason="max_inner")


def _prox_grad(p: CompositeProblem, y, mu, x0, tol, max_iter, beta=ARMIJO_BETA):
    # x+ = prox_{a h}(x - a grad f(x)) with h(x) = M_{mu g}(x + mu y)
    x = np.array(x0, dtype=float, copy=True)
    a = 1.0 / p.f.L_f if p.f.L_f else 1.0
    ev = evaluate(p, x, y, mu)
    for it in range(max_iter):
        gn = float(np.linalg.norm(ev.grad_x))
        if gn <= tol:
            return InnerResult(x, it, gn, ev.value)
        fx = p.f.value(x)
        gf = p.f.grad(x)
        for _ in range(MAX_HALVINGS + 1):
            w = x - a * gf
            xn = prox_of_moreau(p.g, w + mu * y, mu, a) - mu * y
            dx = xn - x
            if p.f.value(xn) <= fx + gf @ dx + (dx @ dx) / (2.0 * a) + 1e-14 * abs(fx):
                break
            a *= beta
        else:
            return InnerResult(x, it, gn, ev.value, stalled=True, reason="line_search")
        x = xn
        ev = evaluate(p, x, y, mu)
    gn = float(np.linalg.norm(ev.grad_x))
    return InnerResult(x, max_iter, gn, ev.value, stalled=gn > tol,
                       reason="max_inner" if gn > tol else "")


def inner_minimize(p: CompositeProblem, y, mu, x_init, tol_omega, method="lbfgs",
                   max_inner=5000, memory=10, c=ARMIJO_C, beta=ARMIJO_BETA) -> InnerResult:
    """Approximately minimize the proximal augmented Lagrangian over ``x``.

    Stops at ``||grad_x L_mu(x; y)|| <= tol_omega``; otherwise the best
    iterate is returned with ``stalled=True``.
    """
    if tol_omega <= 0:
        raise PreconditionViolated("tol_omega must be positive")
    if method == "prox_grad":
        if not p.T.is_identity:
            raise PreconditionViolated("prox_grad inner method requires T = I")
        return _prox_grad(p, y, mu, x_init, tol_omega, max_inner, beta)

    def oracle(x):
        ev = evaluate(p, x, y, mu)
        return ev.value, ev.grad_x

    return minimize_smooth(oracle, x_init, tol_omega, method, max_inner, memory, c, beta)
