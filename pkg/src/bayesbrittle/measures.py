"""Discrete probability measures on a finite metric space, and TV / KL / Hellinger."""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .metric_space import FiniteMetricSpace

MASS_TOL = 1e-12


class DiscreteMeasure:
    """Probability weights over the points of a :class:`FiniteMetricSpace`.

    Weights are renormalized on construction; the result sums to one within
    ``MASS_TOL``.  Instances are treated as immutable.
    """

    __slots__ = ("space", "weights")

    def __init__(self, space: FiniteMetricSpace, weights):
        w = np.array(weights, dtype=np.float64).reshape(-1)
        if w.size != space.size:
            raise ConfigError(f"expected {space.size} weights, got {w.size}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ConfigError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise ConfigError("measure has zero total mass")
        if abs(total - 1.0) > MASS_TOL:
            w = w / total
        w.setflags(write=False)
        self.space = space
        self.weights = w

    def __repr__(self):
        return f"DiscreteMeasure(n={self.weights.size}, support={self.support().size})"

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def mass(self, indices) -> float:
        idx = np.asarray(indices, dtype=np.int64)
        return float(self.weights[idx].sum()) if idx.size else 0.0

    def to_list(self) -> list:
        return self.weights.tolist()


def _same_space(mu: DiscreteMeasure, nu: DiscreteMeasure):
    if mu.space is not nu.space:
        raise ConfigError("measures live on different spaces")


def dirac(space: FiniteMetricSpace, i: int) -> DiscreteMeasure:
    if not 0 <= i < space.size:
        raise ConfigError(f"index {i} out of range")
    w = np.zeros(space.size)
    w[i] = 1.0
    return DiscreteMeasure(space, w)


def uniform(space: FiniteMetricSpace) -> DiscreteMeasure:
    return DiscreteMeasure(space, np.full(space.size, 1.0 / space.size))


def total_variation(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """sup_A |mu(A) - nu(A)|, i.e. half the L1 distance."""
    _same_space(mu, nu)
    return float(min(1.0, 0.5 * np.abs(mu.weights - nu.weights).sum()))


def kl_divergence(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    _same_space(mu, nu)
    return kl_weights(mu.weights, nu.weights)


def kl_weights(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) in nats with 0 log 0 = 0; +inf when p is not dominated by q."""
    pos = p > 0
    if np.any(q[pos] == 0):
        return math.inf
    val = float(np.sum(p[pos] * (np.log(p[pos]) - np.log(q[pos]))))
    return max(val, 0.0)


def hellinger(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    _same_space(mu, nu)
    diff = np.sqrt(mu.weights) - np.sqrt(nu.weights)
    return float(min(1.0, math.sqrt(0.5 * np.dot(diff, diff))))
