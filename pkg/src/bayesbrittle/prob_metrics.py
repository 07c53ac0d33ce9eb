"""Prokhorov, Ky Fan and second-order Prokhorov distances.

``prokhorov`` is the exact flow-based solver; ``prokhorov_oracle`` evaluates
the defining inequality over every subset of the support and is only used for
cross-checking small instances.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, InvariantError
from .measures import DiscreteMeasure, _same_space, total_variation
from .metric_space import FiniteMetricSpace, TRIANGLE_SLACK, enlarge

ORACLE_MAX_SUPPORT = 15
ORACLE_TOL = 1e-12


def prokhorov_weights(a: np.ndarray, b: np.ndarray, dist: np.ndarray) -> float:
    """Exact Prokhorov distance between weight vectors on a space with distance matrix ``dist``."""
    ia = np.flatnonzero(a > 0)
    ib = np.flatnonzero(b > 0)
    D = np.ascontiguousarray(dist[np.ix_(ia, ib)])
    return float(kernels.prokhorov_dense(np.ascontiguousarray(a[ia]), np.ascontiguousarray(b[ib]), D))


def prokhorov(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    _same_space(mu, nu)
    return prokhorov_weights(mu.weights, nu.weights, mu.space.dist)


# --------------------------------------------------------------------------- oracle

def _subset_table(w: np.ndarray) -> np.ndarray:
    """mass of every subset (bitmask over positions of ``w``)."""
    s = w.size
    table = np.zeros(1 << s)
    for k in range(s):
        step = 1 << k
        table.reshape(-1, 2 * step)[:, step:] += w[k]
    return table


def _max_excess(wa, wb, cross, radius, open_ball):
    """max over subsets A of supp(a) of a(A) - b(A^radius)."""
    s = wa.size
    hit = cross < radius if open_ball else cross <= radius
    nb = (hit.astype(np.int64) << np.arange(hit.shape[1], dtype=np.int64)).sum(axis=1)
    enl = np.zeros(1 << s, dtype=np.int64)
    for k in range(s):
        step = 1 << k
        view = enl.reshape(-1, 2 * step)
        view[:, step:] |= nb[k]
    return _subset_table(wa) - _subset_table(wb)[enl]


def _oracle_one_sided(wa, wb, cross):
    dvals = np.unique(np.concatenate([[0.0], cross.ravel()]))
    # candidate set: distances together with every a(A) - b(A^d)
    cands = [dvals]
    for d in dvals:
        cands.append(_max_excess(wa, wb, cross, d, open_ball=False))
    cands = np.unique(np.concatenate(cands))
    cands = cands[cands >= 0]

    def holds(eps):
        # right limit of the strict-enlargement predicate at eps
        above = dvals[dvals > eps]
        radius = 0.5 * (eps + above[0]) if above.size else eps + 1.0
        return _max_excess(wa, wb, cross, radius, open_ball=True).max() <= eps + ORACLE_TOL

    lo, hi = 0, cands.size - 1
    if not holds(cands[hi]):  # pragma: no cover - the top candidate is always >= 1 or >= max distance
        raise InvariantError("oracle candidate set is incomplete")
    while lo < hi:
        mid = (lo + hi) // 2
        if holds(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


def prokhorov_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Prokhorov distance straight from the definition, by subset enumeration."""
    _same_space(mu, nu)
    ia, ib = mu.support(), nu.support()
    if max(ia.size, ib.size) > ORACLE_MAX_SUPPORT:
        raise ConfigError(f"oracle supports at most {ORACLE_MAX_SUPPORT} support points")
    d = mu.space.dist
    fwd = _oracle_one_sided(mu.weights[ia], nu.weights[ib], d[np.ix_(ia, ib)])
    bwd = _oracle_one_sided(nu.weights[ib], mu.weights[ia], d[np.ix_(ib, ia)])
    return max(fwd, bwd)


# --------------------------------------------------------------------------- Ky Fan

@dataclass(frozen=True)
class PairedDistanceSample:
    distances: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=np.float64).reshape(-1)
        if d.size == 0:
            raise ConfigError("paired distance sample is empty")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ConfigError("distances must be finite and nonnegative")
        object.__setattr__(self, "distances", d)

    def __len__(self):
        return self.distances.size


def ky_fan_empirical(sample) -> float:
    """inf{eps >= 0 : P(d > eps) <= eps} under the empirical law of the distances."""
    if not isinstance(sample, PairedDistanceSample):
        sample = PairedDistanceSample(sample)
    return float(kernels.ky_fan_sorted(np.sort(sample.distances)))


# --------------------------------------------------------------------------- laws of posteriors

class EmpiricalLaw:
    """Uniform empirical law of ``M`` posterior measures on a shared space.

    ``samples`` is an (M, |space|) array of probability weights.
    """

    def __init__(self, space: FiniteMetricSpace, samples):
        s = np.asarray(samples, dtype=np.float64)
        if s.ndim == 1:
            s = s[None, :]
        if s.ndim != 2 or s.shape[0] < 1:
            raise ConfigError("empirical law needs at least one sample")
        if s.shape[1] != space.size:
            raise ConfigError("sample dimension does not match the space")
        s.setflags(write=False)
        self.space = space
        self.samples = s

    @classmethod
    def from_measures(cls, measures):
        measures = list(measures)
        if not measures:
            raise ConfigError("empirical law needs at least one sample")
        space = measures[0].space
        for m in measures[1:]:
            _same_space(measures[0], m)
        return cls(space, np.stack([m.weights for m in measures]))

    @classmethod
    def repeat(cls, measure: DiscreteMeasure, M: int = 1):
        return cls(measure.space, np.tile(measure.weights, (M, 1)))

    def __len__(self):
        return self.samples.shape[0]

    def measure(self, r: int) -> DiscreteMeasure:
        return DiscreteMeasure(self.space, self.samples[r])

    def atoms(self):
        """Distinct samples and their empirical weights (duplicates merged, order deterministic)."""
        uniq, counts = np.unique(self.samples, axis=0, return_counts=True)
        return uniq, counts / self.samples.shape[0]

    def subset(self, rows) -> "EmpiricalLaw":
        return EmpiricalLaw(self.space, self.samples[np.asarray(rows)])


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def cross_prokhorov(P: np.ndarray, Q: np.ndarray, dist: np.ndarray, threads: int = 1,
                    cache: dict | None = None) -> np.ndarray:
    """Matrix of Prokhorov distances between the rows of ``P`` and ``Q``.

    Entries are independent solves, so the result does not depend on
    ``threads``.  ``cache`` maps (row bytes, row bytes) to a solved distance and
    may be shared across calls on the same space.
    """
    def solve(a, b):
        if cache is None:
            return prokhorov_weights(a, b, dist)
        key = (a.tobytes(), b.tobytes())
        val = cache.get(key)
        if val is None:
            val = cache[key] = prokhorov_weights(a, b, dist)
        return val

    def row(i):
        return [solve(P[i], Q[j]) for j in range(Q.shape[0])]

    out = np.array(_map(row, range(P.shape[0]), threads), dtype=np.float64)
    return out.reshape(P.shape[0], Q.shape[0])


def _common_space(law1, law2):
    if law1.space is not law2.space:
        raise ConfigError("laws live on different parameter spaces")


def meta_space(law1: EmpiricalLaw, law2: EmpiricalLaw, threads: int = 1) -> FiniteMetricSpace:
    """Space of the M + M' sampled posteriors with Prokhorov distances between them."""
    _common_space(law1, law2)
    allp = np.vstack([law1.samples, law2.samples])
    d = cross_prokhorov(allp, allp, law1.space.dist, threads)
    d = np.maximum(d, d.T)
    np.fill_diagonal(d, 0.0)
    labels = tuple(("law1", i) for i in range(len(law1))) + tuple(("law2", i) for i in range(len(law2)))
    return FiniteMetricSpace(labels, d)


def meta_prokhorov(law1: EmpiricalLaw, law2: EmpiricalLaw, threads: int = 1, check_metric: bool = False,
                   cache: dict | None = None) -> float:
    """Prokhorov distance between two empirical laws of posteriors.

    Only the cross distances between the two samples enter the coupling
    problem, so identical samples are merged first and the within-law
    distances are computed only when ``check_metric`` is set.
    """
    _common_space(law1, law2)
    if check_metric:
        try:
            meta_space(law1, law2, threads).check_metric(TRIANGLE_SLACK)
        except InvariantError as exc:
            raise InvariantError(f"meta-space is not a metric space: {exc}") from None
    P, wp = law1.atoms()
    Q, wq = law2.atoms()
    cross = cross_prokhorov(P, Q, law1.space.dist, threads, cache)
    return meta_prokhorov_from_cross(wp, wq, cross)


def meta_prokhorov_from_cross(wp, wq, cross) -> float:
    return float(kernels.prokhorov_dense(np.ascontiguousarray(wp, dtype=np.float64),
                                         np.ascontiguousarray(wq, dtype=np.float64),
                                         np.ascontiguousarray(cross)))


def distances_to(law: EmpiricalLaw, target: DiscreteMeasure, threads: int = 1,
                 cache: dict | None = None) -> np.ndarray:
    """Prokhorov distance of every sample of ``law`` to ``target`` (duplicates solved once)."""
    if law.space is not target.space:
        raise ConfigError("law and target live on different spaces")
    uniq, inverse = np.unique(law.samples, axis=0, return_inverse=True)
    d = cross_prokhorov(uniq, target.weights[None, :], law.space.dist, threads, cache)[:, 0]
    return d[np.asarray(inverse).reshape(-1)]


def ky_fan_to_dirac(law: EmpiricalLaw, target: DiscreteMeasure, threads: int = 1,
                    cache: dict | None = None) -> float:
    """Ky Fan distance between the random posterior and the constant ``target``."""
    return ky_fan_empirical(distances_to(law, target, threads, cache))


def lower_bound_from_set(mu: DiscreteMeasure, mu_prime: DiscreteMeasure, B, alpha: float) -> tuple[float, float]:
    """Certified lower bound on prokhorov(mu, mu_prime) from a single set ``B``.

    With delta = sup_{eps < alpha} mu(B^eps) = mu(B^alpha, open), the distance
    is at least min(alpha, mu_prime(B) - delta).  Returns ``(bound, delta)``.
    """
    delta = mu.mass(enlarge(mu.space, B, alpha, open_ball=True))
    return min(alpha, mu_prime.mass(B) - delta), delta


def prokhorov_upper_bounds(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """min(1, diameter of the joint support, total variation): cheap ceiling for prokhorov."""
    idx = np.union1d(mu.support(), nu.support())
    diam = float(mu.space.dist[np.ix_(idx, idx)].max())
    return min(1.0, diam, total_variation(mu, nu)) if diam > 0 else 0.0


__all__ = [
    "EmpiricalLaw",
    "PairedDistanceSample",
    "cross_prokhorov",
    "distances_to",
    "ky_fan_empirical",
    "ky_fan_to_dirac",
    "lower_bound_from_set",
    "meta_prokhorov",
    "meta_prokhorov_from_cross",
    "meta_space",
    "prokhorov",
    "prokhorov_oracle",
    "prokhorov_upper_bounds",
    "prokhorov_weights",
]

