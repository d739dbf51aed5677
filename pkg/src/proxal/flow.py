"""Primal-descent dual-ascent gradient flow on the proximal augmented Lagrangian.

    dx/dt = -(grad f(x) + T^T grad M_{mu g}(T x + mu y))
    dy/dt =  mu (grad M_{mu g}(T x + mu y) - y)

plus its networked special case, the forward-Euler/EXTRA recursions, and the
exponential-rate certificate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import PreconditionViolated, StepSizeUnderflow
from .problem import CompositeProblem, evaluate
from .numerics import symmetric_eigs

__all__ = [
    "FlowConfig",
    "FlowTrajectory",
    "flow_rhs",
    "integrate_flow",
    "network_flow_step",
    "ExtraState",
    "extra_step",
    "RateEstimate",
    "rate_estimates",
    "quad_condition_margin",
    "check_quad_condition",
    "bisect_rate",
    "IqcModel",
    "build_iqc_model",
    "iqc_form",
    "fit_log_slope",
    "probe_dependency",
    "DEFAULT_OMEGA_GRID",
    "lambda_min_TTt",
]

DEFAULT_OMEGA_GRID = np.logspace(-3, 3, 200)


@dataclass
class FlowConfig:
    """Integration settings. ``integrator`` is ``"rk45"`` or ``"euler"``
    (fixed step ``alpha``). ``sample_times`` defaults to 201 points on
    ``[0, t_end]``."""

    mu: float
    t_end: float
    integrator: str = "rk45"
    rtol: float = 1e-8
    atol: float = 1e-10
    alpha: float = 1e-2
    sample_times: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.t_end <= 0:
            raise PreconditionViolated("t_end must be positive")
        if self.mu <= 0:
            raise PreconditionViolated("mu must be positive")
        if self.integrator == "euler" and self.alpha <= 0:
            raise PreconditionViolated("alpha must be positive")
        if self.integrator not in ("rk45", "euler"):
            raise PreconditionViolated(f"unknown integrator {self.integrator!r}")

    def times(self) -> np.ndarray:
        if self.sample_times is None:
            return np.linspace(0.0, self.t_end, 201)
        t = np.asarray(self.sample_times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise PreconditionViolated("sample_times must be strictly increasing")
        return t


@dataclass
class FlowTrajectory:
    times: np.ndarray
    x: np.ndarray  # (len(times), n)
    y: np.ndarray  # (len(times), m)
    distance_to_ref: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def states(self):
        return list(zip(self.x, self.y))

    def write_csv(self, path, extra_columns=None):
        """Columns ``t, x_1..x_n, y_1..y_m, dist_to_ref`` (+ ``extra_columns``)."""
        n, m = self.x.shape[1], self.y.shape[1]
        extra_columns = extra_columns or {}
        header = (["t"] + [f"x_{i + 1}" for i in range(n)] + [f"y_{i + 1}" for i in range(m)]
                  + ["dist_to_ref"] + list(extra_columns))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k, t in enumerate(self.times):
                d = "" if self.distance_to_ref is None else repr(float(self.distance_to_ref[k]))
                row = ([repr(float(t))] + [repr(float(v)) for v in self.x[k]]
                       + [repr(float(v)) for v in self.y[k]] + [d]
                       + [str(v) for v in extra_columns.values()])
                w.writerow(row)


def flow_rhs(p: CompositeProblem, x, y, mu):
    """``(dx, dy) = (-grad_x L_mu, grad_y L_mu)``."""
    ev = evaluate(p, x, y, mu)
    if ev.grad_x is None:
        raise PreconditionViolated("flow state left the domain of f")
    return -ev.grad_x, ev.grad_y


def _euler(p, w0, cfg, times):
    n = p.n
    h = cfg.alpha
    steps = np.rint(times / h).astype(int)
    out = np.empty((len(times), w0.size))
    w = w0.copy()
    k = 0
    for i, s in enumerate(steps):
        while k < s:
            dx, dy = flow_rhs(p, w[:n], w[n:], cfg.mu)
            w = w + h * np.concatenate([dx, dy])
            k += 1
        out[i] = w
    return out


def integrate_flow(p: CompositeProblem, x0, y0, cfg: FlowConfig, reference=None) -> FlowTrajectory:
    """Integrate the gradient flow from ``(x0, y0)`` and sample it.

    With ``reference = (x_star, y_star)`` the distance of each sample to the
    reference is recorded.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    n = p.n
    times = cfg.times()
    w0 = np.concatenate([x0, y0])
    if cfg.integrator == "euler":
        W = _euler(p, w0, cfg, times)
    else:
        def rhs(_t, w):
            dx, dy = flow_rhs(p, w[:n], w[n:], cfg.mu)
            return np.concatenate([dx, dy])

        sol = solve_ivp(rhs, (float(times[0]), float(times[-1])), w0, method="RK45",
                        t_eval=times, rtol=cfg.rtol, atol=cfg.atol)
        if sol.status < 0:
            raise StepSizeUnderflow(sol.message)
        W = sol.y.T
    traj = FlowTrajectory(times, W[:, :n].copy(), W[:, n:].copy())
    if reference is not None:
        ref = np.concatenate([np.asarray(reference[0], float), np.asarray(reference[1], float)])
        traj.distance_to_ref = np.linalg.norm(W - ref, axis=1)
    return traj


def network_flow_step(f_grad: Callable, L, x, y_tilde, mu, beta, alpha):
    """One forward-Euler step of the networked flow.

    ``x+ = (I - (alpha/mu) L) x - alpha grad f(x) - alpha y~`` and
    ``y~+ = y~ + alpha beta L x``. Agent ``i`` reads only ``x_j`` with
    ``L_ij != 0``.
    """
    x = np.asarray(x, dtype=float)
    Lx = L @ x
    x_next = x - (alpha / mu) * Lx - alpha * f_grad(x) - alpha * y_tilde
    y_next = y_tilde + alpha * beta * Lx
    return x_next, y_next


@dataclass
class ExtraState:
    """Current iterate and the running sum ``sum_{i<k} (W - I) x^i``."""

    x: np.ndarray
    acc: Optional[np.ndarray] = None
    k: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.acc is None:
            self.acc = np.zeros_like(self.x)


def extra_step(W, grad_f: Callable, alpha, history: ExtraState):
    """EXTRA: ``x^{k+1} = W x^k - alpha grad f(x^k) + (1/2) sum_{i<k} (W - I) x^i``.

    ``history`` is advanced in place; the new iterate is returned.
    """
    x = history.x
    Wx = W @ x
    x_next = Wx - alpha * grad_f(x) + 0.5 * history.acc
    history.acc = history.acc + (Wx - x)
    history.x = x_next
    history.k += 1
    return x_next


@dataclass
class RateEstimate:
    m_f: float
    L_f: float
    mu: float
    lambda_min: float
    gamma_hat: float
    rho1: float
    rho2: float
    rho: float
    tau_fit: Optional[float] = None


def rate_estimates(m_f, L_f, mu, lambda_min, safety=0.99) -> RateEstimate:
    """Closed-form exponential-rate estimates for the gradient flow.

    ``rho`` is ``safety`` times ``rho1`` (if ``m_f >= mu``) or
    ``min(rho1, rho2)`` (otherwise), additionally capped below
    ``min(m_f, mu)`` where the estimates are valid.
    """
    if m_f <= 0 or lambda_min <= 0:
        raise PreconditionViolated("need m_f > 0 and lambda_min > 0")
    if mu < L_f - m_f:
        raise PreconditionViolated("need mu >= L_f - m_f")
    g = mu + m_f + lambda_min / mu
    rho1 = 0.5 * (g - np.sqrt(max(g * g - 4.0 * lambda_min, 0.0)))
    s = g + mu + m_f
    rho2 = 0.25 * (s - np.sqrt(max(s * s - 8.0 * g * m_f, 0.0)))
    bound = rho1 if m_f >= mu else min(rho1, rho2)
    bound = min(bound, min(m_f, mu))
    return RateEstimate(m_f, L_f, mu, lambda_min, g, rho1, rho2, safety * bound)


def _quad_coeffs(rho, m_f, mu, lam):
    mh = m_f - rho
    muh = mu - rho
    b = mh * lam / mu + mh * mh + mu * mh - rho * muh
    c = mh * muh * (muh * lam / mu - rho * (mu + mh))
    return b, c


def quad_condition_margin(rho, m_f, mu, eigs):
    """Exact minimum over ``omega^2 >= 0`` of the quartic, per eigenvalue."""
    out = []
    for lam in np.atleast_1d(eigs):
        b, c = _quad_coeffs(rho, m_f, mu, lam)
        out.append(c if b >= 0 else c - b * b / 4.0)
    return np.array(out)


def check_quad_condition(rho, m_f, mu, eigs_TTt, omega_grid=None) -> bool:
    """Whether ``omega^4 + b omega^2 + c > 0`` for all frequencies and eigenvalues.

    Both the analytic vertex minimum and the values on ``omega_grid``
    (default: 200 log-spaced points in ``[1e-3, 1e3]``, plus 0) must be positive.
    """
    eigs = np.atleast_1d(np.asarray(eigs_TTt, dtype=float))
    if not (0 <= rho < min(m_f, mu)):
        raise PreconditionViolated("need 0 <= rho < min(m_f, mu)")
    if np.any(eigs <= 0):
        raise PreconditionViolated("eigenvalues of T T^T must be positive")
    grid = DEFAULT_OMEGA_GRID if omega_grid is None else np.asarray(omega_grid, dtype=float)
    w2 = np.concatenate([[0.0], grid**2])
    for lam in eigs:
        b, c = _quad_coeffs(rho, m_f, mu, lam)
        if np.any(w2 * w2 + b * w2 + c <= 0):
            return False
    return bool(np.all(quad_condition_margin(rho, m_f, mu, eigs) > 0))


def bisect_rate(m_f, mu, eigs, iters=60) -> float:
    """Largest rho in ``(0, min(m_f, mu))`` passing :func:`check_quad_condition`."""
    lo, hi = 0.0, min(m_f, mu)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if check_quad_condition(mid, m_f, mu, eigs):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class IqcModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Pi: np.ndarray
    L_hat1: float
    L_hat2: float


def build_iqc_model(m_f, L_f, mu, T) -> IqcModel:
    """Linear part ``(A, B, C)`` and IQC multiplier of the flow's feedback form.

    The loop is closed by ``u1 = grad f(xi1) - m_f xi1`` and
    ``u2 = xi2 - prox_{mu g}(xi2)`` with ``xi1 = x``, ``xi2 = T x + mu y``.
    ``Pi`` acts on ``[xi1, xi2, u1, u2]``.
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    m, n = T.shape
    Z = np.zeros
    A = np.block([[-m_f * np.eye(n), Z((n, m))], [Z((m, n)), -mu * np.eye(m)]])
    B = np.block([[-np.eye(n), -T.T / mu], [Z((m, n)), np.eye(m)]])
    C = np.block([[np.eye(n), Z((n, m))], [T, mu * np.eye(m)]])
    L1, L2 = L_f - m_f, 1.0
    Lh = np.diag(np.concatenate([np.full(n, L1), np.full(m, L2)]))
    k = n + m
    Pi = np.block([[Z((k, k)), Lh], [Lh, -2.0 * np.eye(k)]])
    return IqcModel(A, B, C, Pi, L1, L2)


def iqc_form(L_hat, dxi, du) -> float:
    """``[dxi; du]^T [[0, L I], [L I, -2 I]] [dxi; du]``; nonnegative for
    L-Lipschitz gradients of convex functions."""
    dxi = np.asarray(dxi, dtype=float)
    du = np.asarray(du, dtype=float)
    return float(2.0 * L_hat * dxi @ du - 2.0 * du @ du)


def fit_log_slope(times, dist, t0=None, t1=None, floor=1e-10):
    """Least-squares slope and prefactor of ``log(dist)`` on ``[t0, t1]``.

    Samples at or below ``floor`` (integrator noise) are excluded. Returns
    ``(slope, tau)`` with ``dist ~ tau * exp(slope * t)``.
    """
    times = np.asarray(times, dtype=float)
    dist = np.asarray(dist, dtype=float)
    t0 = times[-1] / 4.0 if t0 is None else t0
    t1 = times[-1] if t1 is None else t1
    mask = (times >= t0) & (times <= t1) & (dist > floor)
    if mask.sum() < 2:
        raise ValueError("not enough samples above the floor to fit a slope")
    slope, icpt = np.polyfit(times[mask], np.log(dist[mask]), 1)
    return float(slope), float(np.exp(icpt))


def probe_dependency(p: CompositeProblem, x, y, mu, h=1e-6, tol=1e-12):
    """Which state coordinates each right-hand-side entry depends on.

    Returns ``D`` of shape ``(n+m, n+m)`` with ``D[i, j]`` true when a size-
    ``h`` perturbation of state ``j`` changes output ``i``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    w = np.concatenate([x, y])
    base = np.concatenate(flow_rhs(p, x, y, mu))
    D = np.zeros((w.size, w.size), dtype=bool)
    for j in range(w.size):
        wp = w.copy()
        wp[j] += h
        out = np.concatenate(flow_rhs(p, wp[:n], wp[n:], mu))
        D[:, j] = np.abs(out - base) > tol
    return D


def lambda_min_TTt(T) -> float:
    T = np.atleast_2d(np.asarray(T, dtype=float))
    return float(symmetric_eigs(T @ T.T)[0])
