"""Composite problems ``f(x) + g(T x)`` and the proximal augmented Lagrangian.

With ``v = T x + mu y`` and ``z* = prox_{mu g}(v)``, the proximal augmented
Lagrangian is

    L_mu(x; y) = f(x) + M_{mu g}(v) - (mu / 2) ||y||^2,

which is the augmented Lagrangian ``L_mu(x, z; y)`` minimized over ``z``.
Its gradients are

    grad_x = grad f(x) + T^T grad M_{mu g}(v)
    grad_y = T x - z*  (the primal residual).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .regularizers import Regularizer

__all__ = [
    "SmoothObjective",
    "LinearMap",
    "CompositeProblem",
    "PalEval",
    "quadratic",
    "least_squares",
    "evaluate",
    "z_star",
    "eval_pal",
    "eval_aug_lagrangian",
    "grad_x",
    "grad_y",
    "kkt_residuals",
]


@dataclass(frozen=True)
class SmoothObjective:
    """Value and gradient oracles for the smooth part ``f``.

    ``m_f`` is the strong-convexity modulus (0 if unknown) and ``L_f`` the
    gradient Lipschitz constant (``None`` if unknown). ``value`` may return
    ``inf`` to signal that ``x`` is outside the region where f is defined.
    """

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    m_f: float = 0.0
    L_f: Optional[float] = None
    value_and_grad: Optional[Callable] = None

    def __call__(self, x):
        return self.value(x)

    def both(self, x):
        """``(value, grad)``; ``grad`` is ``None`` when the value is infinite."""
        if self.value_and_grad is not None:
            return self.value_and_grad(x)
        fx = self.value(x)
        return fx, (self.grad(x) if np.isfinite(fx) else None)


def quadratic(H, c=None, const=0.0) -> SmoothObjective:
    """``f(x) = x^T H x / 2 + c^T x + const`` with symmetric PSD ``H``."""
    H = np.asarray(H, dtype=float)
    H = (H + H.T) / 2.0
    c = np.zeros(H.shape[0]) if c is None else np.asarray(c, dtype=float)
    eigs = np.linalg.eigvalsh(H)
    return SmoothObjective(
        value=lambda x: 0.5 * x @ H @ x + c @ x + const,
        grad=lambda x: H @ x + c,
        m_f=max(float(eigs[0]), 0.0),
        L_f=float(eigs[-1]),
    )


def least_squares(A, b) -> SmoothObjective:
    """``f(x) = ||A x - b||^2 / 2``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    eigs = np.linalg.eigvalsh(A.T @ A)

    def value(x):
        r = A @ x - b
        return 0.5 * r @ r

    return SmoothObjective(
        value=value,
        grad=lambda x: A.T @ (A @ x - b),
        m_f=max(float(eigs[0]), 0.0),
        L_f=float(eigs[-1]),
    )


class LinearMap:
    """Dense linear operator ``x -> T x`` with its adjoint."""

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self._is_identity = None

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        return cls(np.eye(n))

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_identity(self) -> bool:
        if self._is_identity is None:
            m, n = self.matrix.shape
            self._is_identity = m == n and np.array_equal(self.matrix, np.eye(n))
        return self._is_identity

    def apply(self, x):
        return self.matrix @ x

    def adjoint(self, z):
        return self.matrix.T @ z

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.matrix, 2))

    __matmul__ = apply


@dataclass(frozen=True)
class CompositeProblem:
    """``minimize f(x) + g(T x)`` over ``x in R^n`` with ``T: R^n -> R^m``."""

    f: SmoothObjective
    g: Regularizer
    T: LinearMap

    def __post_init__(self):
        if not isinstance(self.T, LinearMap):
            object.__setattr__(self, "T", LinearMap(self.T))

    @property
    def m(self) -> int:
        return self.T.shape[0]

    @property
    def n(self) -> int:
        return self.T.shape[1]

    def objective(self, x) -> float:
        fx = self.f.value(x)
        if not np.isfinite(fx):
            return np.inf
        return fx + self.g.value(self.T.apply(x))


class PalEval(NamedTuple):
    """One evaluation of the proximal augmented Lagrangian at ``(x, y, mu)``.

    All fields share a single prox evaluation. ``grad_x`` is ``None`` when
    ``value`` is infinite.
    """

    value: float
    grad_x: Optional[np.ndarray]
    grad_y: np.ndarray
    z: np.ndarray
    moreau_grad: np.ndarray


def evaluate(p: CompositeProblem, x, y, mu: float, need_grad: bool = True) -> PalEval:
    Tx = p.T.apply(x)
    v = Tx + mu * y
    z = p.g.prox(v, mu)
    r = v - z
    mg = r / mu
    gy = Tx - z
    if need_grad:
        fx, gf = p.f.both(x)
    else:
        fx, gf = p.f.value(x), None
    if not np.isfinite(fx):
        return PalEval(np.inf, None, gy, z, mg)
    # Moreau envelope from the shared prox: g(z) + ||z - v||^2 / (2 mu)
    val = fx + p.g.value(z) + np.dot(r, r) / (2.0 * mu) - 0.5 * mu * np.dot(y, y)
    gx = gf + p.T.adjoint(mg) if need_grad else None
    return PalEval(float(val), gx, gy, z, mg)


def z_star(p: CompositeProblem, x, y, mu: float) -> np.ndarray:
    """Minimizer over z of the augmented Lagrangian: ``prox_{mu g}(T x + mu y)``."""
    return p.g.prox(p.T.apply(x) + mu * y, mu)


def eval_pal(p: CompositeProblem, x, y, mu: float) -> float:
    fx = p.f.value(x)
    if not np.isfinite(fx):
        return np.inf
    v = p.T.apply(x) + mu * y
    return float(fx + p.g.moreau(v, mu) - 0.5 * mu * np.dot(y, y))


def eval_aug_lagrangian(p: CompositeProblem, x, z, y, mu: float) -> float:
    """``f(x) + g(z) + <y, T x - z> + ||T x - z||^2 / (2 mu)``."""
    gz = p.g.value(z)
    fx = p.f.value(x)
    if not (np.isfinite(gz) and np.isfinite(fx)):
        return np.inf
    r = p.T.apply(x) - z
    return float(fx + gz + np.dot(y, r) + np.dot(r, r) / (2.0 * mu))


def grad_x(p: CompositeProblem, x, y, mu: float) -> np.ndarray:
    v = p.T.apply(x) + mu * y
    return p.f.grad(x) + p.T.adjoint(p.g.moreau_grad(v, mu))


def grad_y(p: CompositeProblem, x, y, mu: float) -> np.ndarray:
    return p.T.apply(x) - z_star(p, x, y, mu)


def kkt_residuals(p: CompositeProblem, x, y, mu_ref: float = 1.0):
    """First-order optimality residuals ``(r_grad, r_feas, r_subgrad)``.

    ``z`` is taken on the prox manifold at ``mu_ref``; the three entries
    measure ``||grad f(x) + T^T y||``, ``||T x - z||`` and the distance of
    ``y`` to the subdifferential of g at ``z``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r_grad = float(np.linalg.norm(p.f.grad(x) + p.T.adjoint(y)))
    Tx = p.T.apply(x)
    z = p.g.prox(Tx + mu_ref * y, mu_ref)
    r_feas = float(np.linalg.norm(Tx - z))
    r_sub = p.g.subgrad_dist(z, y)
    return r_grad, r_feas, r_sub
