"""Proximal augmented Lagrangian methods for nonsmooth composite optimization.

Solves ``minimize f(x) + g(T x)`` with smooth ``f`` and a prox-friendly
``g`` by the method of multipliers on the proximal augmented Lagrangian, by
its primal-descent dual-ascent gradient flow, and by ADMM / ISTA baselines.
"""

from .errors import *  # noqa: F401,F403
from .mm import MmOptions, SolveReport, mm_solve
from .problem import (
    CompositeProblem,
    LinearMap,
    SmoothObjective,
    eval_aug_lagrangian,
    eval_pal,
    kkt_residuals,
    least_squares,
    quadratic,
)
from .regularizers import (
    L1,
    BoxIndicator,
    PatternNonneg,
    Regularizer,
    ShiftedL1Nonneg,
    SumSeparable,
    ZeroSetIndicator,
)

__version__ = "0.1.0"
