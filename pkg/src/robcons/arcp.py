"""Continuous-time trimmed-mean (ARC-P style) consensus.

Each agent drifts toward the mean of the ``n - 2*trim`` middle values of the
whole state vector.  Viewed as a joint-agent network, every group of
``trim + 1`` agents minimally influences each agent outside it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ArcpImplicit, InteractionRule, NetworkDynamics
from .errors import InvalidArgument

__all__ = [
    "ArcpConfig",
    "kth_largest",
    "kth_smallest",
    "trimmed_sum_top",
    "trimmed_sum_bottom",
    "arcp_rhs",
    "as_network_dynamics",
]


@dataclass(frozen=True)
class ArcpConfig:
    n: int
    trim: int

    def __post_init__(self):
        if self.trim < 1:
            raise InvalidArgument("trim must be at least 1")
        if self.n - self.trim < self.trim + 1:
            raise InvalidArgument(f"need n - trim >= trim + 1, got n={self.n}, trim={self.trim}")

    @property
    def kept(self) -> int:
        return self.n - 2 * self.trim


def _check_rank(x, k):
    n = len(x)
    if not 1 <= k <= n:
        raise InvalidArgument(f"rank {k} outside [1, {n}]")


def kth_largest(x, k: int) -> float:
    x = np.asarray(x, dtype=float)
    _check_rank(x, k)
    return float(np.sort(x)[len(x) - k])


def kth_smallest(x, k: int) -> float:
    x = np.asarray(x, dtype=float)
    _check_rank(x, k)
    return float(np.sort(x)[k - 1])


def trimmed_sum_top(x, trim: int) -> float:
    n = len(x)
    return math.fsum(kth_largest(x, k) for k in range(trim + 1, n - trim + 1))


def trimmed_sum_bottom(x, trim: int) -> float:
    n = len(x)
    return math.fsum(kth_smallest(x, k) for k in range(trim + 1, n - trim + 1))


def arcp_rhs(cfg: ArcpConfig, x) -> np.ndarray:
    """``dx_i/dt = -x_i + mean of the middle n - 2*trim entries``.

    Accepts a batch of states along leading axes.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != cfg.n:
        raise InvalidArgument(f"state has {x.shape[-1]} entries, expected {cfg.n}")
    middle = np.sort(x, axis=-1)[..., cfg.trim:cfg.n - cfg.trim]
    # Averaging the differences keeps consensus states exact equilibria.
    diffs = middle[..., None, :] - x[..., :, None]
    if x.ndim == 1:
        return np.array([math.fsum(row) for row in diffs]) / cfg.kept
    return diffs.sum(axis=-1) / cfg.kept


def as_network_dynamics(cfg: ArcpConfig) -> NetworkDynamics:
    agents = range(cfg.n)
    rules = [
        InteractionRule(frozenset(J), i, ArcpImplicit())
        for i in agents
        for J in itertools.combinations([a for a in agents if a != i], cfg.trim + 1)
    ]
    return NetworkDynamics(
        cfg.n, tuple(rules),
        labels=tuple(str(i + 1) for i in agents),
        implicit_rhs=_ArcpField(cfg),
        source=f"arcp:n={cfg.n},trim={cfg.trim}",
    )


@dataclass(frozen=True)
class _ArcpField:
    cfg: ArcpConfig

    def __call__(self, x):
        return arcp_rhs(self.cfg, x)
