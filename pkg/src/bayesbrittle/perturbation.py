"""Adversarial prior constructions, KL-support checks, covering and packing numbers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bayes import CategoricalModel, kl_row
from .errors import ConfigError, InvariantError, PreconditionError
from .measures import DiscreteMeasure, dirac
from .metric_space import FiniteMetricSpace, open_ball

DEFAULT_KL_LADDER = (1.0, 0.1, 0.01, 0.001)
EXACT_LIMIT = 24


@dataclass(frozen=True)
class KLNeighborhood:
    center: int
    epsilon: float
    members: np.ndarray

    def __post_init__(self):
        if self.center not in self.members:
            raise InvariantError("KL neighborhood must contain its center")


@dataclass(frozen=True)
class CoveringCertificate:
    epsilon: float
    centers: np.ndarray
    count: int
    exact: bool


@dataclass(frozen=True)
class PackingCertificate:
    epsilon: float
    points: np.ndarray
    count: int
    exact: bool

    def __int__(self):
        return self.count


# --------------------------------------------------------------------------- KL support

def kl_neighborhood(model: CategoricalModel, theta_star: int, epsilon: float) -> KLNeighborhood:
    """{theta' : K(theta_star, theta') <= epsilon}."""
    if epsilon < 0:
        raise ConfigError("epsilon must be nonnegative")
    members = np.flatnonzero(kl_row(model, theta_star) <= epsilon)
    return KLNeighborhood(int(theta_star), float(epsilon), members)


def _check_ladder(ladder):
    lad = [float(x) for x in ladder]
    if not lad:
        raise ConfigError("KL ladder must be nonempty")
    if any(x <= 0 for x in lad):
        raise ConfigError("KL ladder values must be positive")
    if any(b >= a for a, b in zip(lad, lad[1:])):
        raise ConfigError("KL ladder must be strictly decreasing")
    return lad


def has_kl_support(prior: DiscreteMeasure, model: CategoricalModel, theta_star: int,
                   epsilon_ladder=DEFAULT_KL_LADDER) -> bool:
    """Whether the prior charges every KL neighborhood of theta_star on the ladder.

    On a finite grid the answer stabilizes once the ladder passes below the
    smallest nonzero divergence from theta_star, so the last rung decides it.
    """
    row = kl_row(model, theta_star)
    for eps in _check_ladder(epsilon_ladder):
        if prior.weights[row <= eps].sum() <= 0:
            return False
    return True


# --------------------------------------------------------------------------- prior perturbations

def dirac_contamination(prior: DiscreteMeasure, theta: int, alpha: float) -> DiscreteMeasure:
    """alpha * prior + (1 - alpha) * delta_theta."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError("alpha must lie in [0, 1]")
    w = alpha * prior.weights + (1.0 - alpha) * dirac(prior.space, theta).weights
    return DiscreteMeasure(prior.space, w)


def ball_evacuation(prior: DiscreteMeasure, theta_star: int, epsilon: float) -> DiscreteMeasure:
    """Remove the prior mass inside the open ball B_epsilon(theta_star) and renormalize."""
    ball = open_ball(prior.space, theta_star, epsilon)
    w = prior.weights.copy()
    w[ball] = 0.0
    if w.sum() <= 0:
        raise PreconditionError(f"all prior mass lies in the open ball of radius {epsilon}; cannot renormalize")
    return DiscreteMeasure(prior.space, w)


# --------------------------------------------------------------------------- covering / packing

def _ball_masks(space: FiniteMetricSpace, epsilon: float):
    hit = space.dist < epsilon
    return [sum(1 << int(j) for j in np.flatnonzero(row)) for row in hit]


def _greedy_cover(balls, full):
    uncovered = full
    chosen = []
    while uncovered:
        best = max(range(len(balls)), key=lambda c: (bin(balls[c] & uncovered).count("1"), -c))
        chosen.append(best)
        uncovered &= ~balls[best]
    return chosen


def _exact_cover(balls, full, n):
    # each point together with the centers whose ball contains it
    covers = [[c for c in range(n) if balls[c] >> e & 1] for e in range(n)]
    best = _greedy_cover(balls, full)
    best_len = [len(best)]
    best_set = [list(best)]
    max_ball = max(bin(b).count("1") for b in balls)

    def search(uncovered, chosen):
        if not uncovered:
            if len(chosen) < best_len[0]:
                best_len[0] = len(chosen)
                best_set[0] = list(chosen)
            return
        left = bin(uncovered).count("1")
        if len(chosen) + math.ceil(left / max_ball) >= best_len[0]:
            return
        # branch on the uncovered point with the fewest candidate balls
        e = min((i for i in range(n) if uncovered >> i & 1), key=lambda i: len(covers[i]))
        opts = sorted(covers[e], key=lambda c: -bin(balls[c] & uncovered).count("1"))
        for c in opts:
            chosen.append(c)
            search(uncovered & ~balls[c], chosen)
            chosen.pop()

    search(full, [])
    return best_set[0]


def covering_number(space: FiniteMetricSpace, epsilon: float, exact_limit: int = EXACT_LIMIT) -> CoveringCertificate:
    """Fewest open epsilon-balls centred at points of the space that cover it.

    Exact by branch and bound up to ``exact_limit`` points, greedy above that.
    """
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    n = space.size
    balls = _ball_masks(space, epsilon)
    full = (1 << n) - 1
    exact = n <= exact_limit
    centers = _exact_cover(balls, full, n) if exact else _greedy_cover(balls, full)
    covered = 0
    for c in centers:
        covered |= balls[c]
    if covered != full:
        raise InvariantError("covering certificate does not cover the space")
    centers = np.array(sorted(centers), dtype=np.int64)
    return CoveringCertificate(float(epsilon), centers, int(centers.size), exact)


def _exact_packing(conflict, n):
    best = [0]
    best_set = [0]

    def search(cand, chosen, size):
        if not cand:
            if size > best[0]:
                best[0] = size
                best_set[0] = chosen
            return
        if size + bin(cand).count("1") <= best[0]:
            return
        v = max((i for i in range(n) if cand >> i & 1), key=lambda i: bin(conflict[i] & cand).count("1"))
        bit = 1 << v
        search(cand & ~conflict[v] & ~bit, chosen | bit, size + 1)
        if conflict[v] & cand:
            search(cand & ~bit, chosen, size)

    search((1 << n) - 1, 0, 0)
    return [i for i in range(n) if best_set[0] >> i & 1]


def packing(space: FiniteMetricSpace, epsilon: float, exact_limit: int = EXACT_LIMIT) -> PackingCertificate:
    """Largest subset whose distinct points are pairwise at distance >= epsilon."""
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    n = space.size
    close = space.dist < epsilon
    np.fill_diagonal(close, False)
    exact = n <= exact_limit
    if exact:
        conflict = [sum(1 << int(j) for j in np.flatnonzero(row)) for row in close]
        pts = _exact_packing(conflict, n)
    else:
        pts = []
        for i in range(n):
            if not any(close[i, j] for j in pts):
                pts.append(i)
    pts = np.array(sorted(pts), dtype=np.int64)
    if pts.size > 1 and close[np.ix_(pts, pts)].any():
        raise InvariantError("packing certificate has points closer than epsilon")
    return PackingCertificate(float(epsilon), pts, int(pts.size), exact)


def packing_number(space: FiniteMetricSpace, epsilon: float, exact_limit: int = EXACT_LIMIT) -> int:
    return packing(space, epsilon, exact_limit).count


def ball_masses(prior: DiscreteMeasure, epsilon: float) -> np.ndarray:
    """prior(B_epsilon(theta)) for every grid point theta."""
    return (prior.space.dist < epsilon).astype(np.float64) @ prior.weights


def least_mass_center(prior: DiscreteMeasure, space: FiniteMetricSpace, epsilon: float,
                      exact_limit: int = EXACT_LIMIT) -> tuple[int, float]:
    """Grid point whose open epsilon-ball carries the least prior mass.

    When the 2*epsilon covering number can be computed exactly, the returned
    mass is checked against 1 / N_{2 epsilon}.
    """
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    if prior.space is not space:
        raise ConfigError("prior is not on this space")
    masses = ball_masses(prior, epsilon)
    idx = int(np.argmin(masses))
    mass = float(masses[idx])
    if space.size <= exact_limit:
        cover = covering_number(space, 2 * epsilon, exact_limit)
        if mass > 1.0 / cover.count + 1e-12:
            raise InvariantError(f"least ball mass {mass} exceeds 1/N_2eps = {1.0 / cover.count}")
    return idx, mass
