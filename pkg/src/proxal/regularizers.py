"""Nonsmooth convex regularizers and their proximal calculus.

Every regularizer exposes the same four maps, all parameterized by ``mu > 0``:

* ``value(z)``: g(z), ``inf`` outside the domain of indicator kinds;
* ``prox(v, mu)``: argmin_x g(x) + ||x - v||^2 / (2 mu);
* ``moreau(v, mu)``: the optimal value of the prox subproblem;
* ``moreau_grad(v, mu)``: (v - prox(v, mu)) / mu.

All kinds here are separable, so ``prox`` acts coordinatewise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import UnsupportedRegularizer

__all__ = [
    "Regularizer",
    "L1",
    "ShiftedL1Nonneg",
    "PatternNonneg",
    "BoxIndicator",
    "ZeroSetIndicator",
    "SumSeparable",
    "from_dict",
    "soft_threshold",
]


def soft_threshold(v, t):
    """Componentwise ``sign(v) * max(|v| - t, 0)``."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


class Regularizer:
    """Base class. Subclasses implement ``value`` and ``prox``.

    ``moreau`` falls back to the defining identity and ``moreau_grad`` is
    always computed from the prox, so the gradient identity holds exactly.
    """

    kind = "abstract"

    def value(self, z) -> float:
        raise NotImplementedError

    def prox(self, v, mu: float) -> np.ndarray:
        raise NotImplementedError

    def moreau(self, v, mu: float) -> float:
        v = np.asarray(v, dtype=float)
        p = self.prox(v, mu)
        return self.value(p) + np.dot(p - v, p - v) / (2.0 * mu)

    def moreau_grad(self, v, mu: float) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return (v - self.prox(v, mu)) / mu

    def subgrad_dist(self, z, y) -> float:
        """Euclidean distance from ``y`` to the subdifferential of g at ``z``."""
        raise UnsupportedRegularizer(
            f"no subgradient-distance rule for {type(self).__name__}"
        )

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, z) -> float:
        return self.value(z)


@dataclass(frozen=True)
class L1(Regularizer):
    """Scaled l1 norm ``gamma * ||z||_1``; ``gamma = 0`` gives g = 0."""

    gamma: float = 1.0
    kind = "l1"

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    def value(self, z):
        return self.gamma * float(np.sum(np.abs(z)))

    def prox(self, v, mu):
        return soft_threshold(v, self.gamma * mu)

    def moreau(self, v, mu):
        # Huber function
        a = np.abs(np.asarray(v, dtype=float))
        t = self.gamma * mu
        quad = a <= t
        out = np.where(quad, a**2 / (2.0 * mu), self.gamma * a - self.gamma * t / 2.0)
        return float(np.sum(out))

    def subgrad_dist(self, z, y):
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        d = np.where(
            z == 0,
            np.maximum(np.abs(y) - self.gamma, 0.0),
            np.abs(y - self.gamma * np.sign(z)),
        )
        return float(np.linalg.norm(d))

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma}


@dataclass(frozen=True)
class ShiftedL1Nonneg(Regularizer):
    """``gamma * 1^T z + I_+(z)``: a linear penalty on the nonnegative orthant."""

    gamma: float = 1.0
    kind = "shifted_l1_nonneg"

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < 0):
            return np.inf
        return self.gamma * float(np.sum(z))

    def prox(self, v, mu):
        return np.maximum(0.0, np.asarray(v, dtype=float) - self.gamma * mu)

    def moreau(self, v, mu):
        v = np.asarray(v, dtype=float)
        t = self.gamma * mu
        out = np.where(v <= t, v**2 / (2.0 * mu), self.gamma * (v - t / 2.0))
        return float(np.sum(out))

    def subgrad_dist(self, z, y):
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(z < 0):
            return np.inf
        d = np.where(z > 0, np.abs(y - self.gamma), np.maximum(y - self.gamma, 0.0))
        return float(np.linalg.norm(d))

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class PatternNonneg(Regularizer):
    """Indicator of {z >= 0, z_i = 0 off the boolean ``pattern``}."""

    pattern: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    kind = "pattern_nonneg"

    def __post_init__(self):
        object.__setattr__(self, "pattern", np.asarray(self.pattern, dtype=bool))

    def project(self, v):
        v = np.asarray(v, dtype=float)
        return np.where(self.pattern, np.maximum(v, 0.0), 0.0)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < 0) or np.any(z[~self.pattern] != 0):
            return np.inf
        return 0.0

    def prox(self, v, mu):
        return self.project(v)

    def moreau(self, v, mu):
        r = np.asarray(v, dtype=float) - self.project(v)
        return float(np.dot(r, r)) / (2.0 * mu)

    def subgrad_dist(self, z, y):
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        if not np.isfinite(self.value(z)):
            return np.inf
        # off-pattern coordinates have normal cone R
        d = np.where(
            ~self.pattern,
            0.0,
            np.where(z > 0, np.abs(y), np.maximum(y, 0.0)),
        )
        return float(np.linalg.norm(d))

    def to_dict(self):
        return {"kind": self.kind, "pattern": [int(b) for b in self.pattern]}


@dataclass(frozen=True)
class BoxIndicator(Regularizer):
    """Indicator of the box ``[lo, hi]^m``."""

    lo: float = -1.0
    hi: float = 1.0
    kind = "box"

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty box: lo > hi")

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < self.lo) or np.any(z > self.hi):
            return np.inf
        return 0.0

    def prox(self, v, mu):
        return np.clip(np.asarray(v, dtype=float), self.lo, self.hi)

    def moreau(self, v, mu):
        # squared distance to the box, i.e. the box soft-threshold squared
        v = np.asarray(v, dtype=float)
        s = v - np.clip(v, self.lo, self.hi)
        return float(np.dot(s, s)) / (2.0 * mu)

    def subgrad_dist(self, z, y):
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        if not np.isfinite(self.value(z)):
            return np.inf
        if self.lo == self.hi:
            return 0.0
        d = np.where(
            z == self.hi,
            np.maximum(-y, 0.0),
            np.where(z == self.lo, np.maximum(y, 0.0), np.abs(y)),
        )
        return float(np.linalg.norm(d))

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class ZeroSetIndicator(Regularizer):
    """Indicator of {0}; its prox is the zero vector."""

    kind = "zero_set"

    def value(self, z):
        return np.inf if np.any(np.asarray(z) != 0) else 0.0

    def prox(self, v, mu):
        return np.zeros_like(np.asarray(v, dtype=float))

    def moreau(self, v, mu):
        v = np.asarray(v, dtype=float)
        return float(np.dot(v, v)) / (2.0 * mu)

    def subgrad_dist(self, z, y):
        return 0.0 if np.all(np.asarray(z) == 0) else np.inf

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class SumSeparable(Regularizer):
    """Sum of regularizers acting on disjoint coordinate blocks.

    ``blocks`` is a sequence of ``(regularizer, slice)`` pairs; the slices
    must partition ``range(m)``.
    """

    blocks: Sequence = ()
    kind = "separable"

    def _split(self, v):
        return [(reg, sl, v[sl]) for reg, sl in self.blocks]

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return float(sum(reg.value(part) for reg, _, part in self._split(z)))

    def prox(self, v, mu):
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        for reg, sl, part in self._split(v):
            out[sl] = reg.prox(part, mu)
        return out

    def moreau(self, v, mu):
        v = np.asarray(v, dtype=float)
        return float(sum(reg.moreau(part, mu) for reg, _, part in self._split(v)))

    def subgrad_dist(self, z, y):
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        sq = 0.0
        for reg, sl in self.blocks:
            sq += reg.subgrad_dist(z[sl], y[sl]) ** 2
        return float(np.sqrt(sq))

    def to_dict(self):
        return {
            "kind": self.kind,
            "blocks": [
                {"start": sl.start, "stop": sl.stop, "reg": reg.to_dict()}
                for reg, sl in self.blocks
            ],
        }


def from_dict(desc: dict) -> Regularizer:
    """Build a regularizer from a JSON descriptor such as ``{"kind": "l1", "gamma": 1}``."""
    kind = desc.get("kind")
    if kind == "l1":
        return L1(float(desc.get("gamma", 1.0)))
    if kind == "shifted_l1_nonneg":
        return ShiftedL1Nonneg(float(desc.get("gamma", 1.0)))
    if kind == "pattern_nonneg":
        return PatternNonneg(np.asarray(desc["pattern"], dtype=bool))
    if kind == "box":
        return BoxIndicator(float(desc.get("lo", -1.0)), float(desc.get("hi", 1.0)))
    if kind == "zero_set":
        return ZeroSetIndicator()
    if kind == "separable":
        blocks = [
            (from_dict(b["reg"]), slice(int(b["start"]), int(b["stop"])))
            for b in desc["blocks"]
        ]
        return SumSeparable(tuple(blocks))
    raise ValueError(f"unknown regularizer kind: {kind!r}")
