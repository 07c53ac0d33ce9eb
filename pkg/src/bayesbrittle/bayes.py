"""Dominated categorical models on a parameter grid, exact conditioning, and
Monte Carlo sampling of the law of the posterior."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PreconditionError
from .measures import DiscreteMeasure, MASS_TOL, kl_weights
from .metric_space import FiniteMetricSpace, build_grid_space
from .prob_metrics import EmpiricalLaw, PairedDistanceSample, prokhorov_weights


@dataclass(frozen=True, eq=False)
class CategoricalModel:
    """Rows of ``lik`` are the densities p(x | theta_i) over the outcomes 0..m-1."""

    theta_space: FiniteMetricSpace
    lik: np.ndarray
    name: str = "categorical"

    def __post_init__(self):
        lik = np.array(self.lik, dtype=np.float64)
        if lik.ndim != 2 or lik.shape[0] != self.theta_space.size:
            raise ConfigError("likelihood must have one row per parameter point")
        if lik.shape[1] < 2:
            raise ConfigError("model needs at least two outcomes")
        if np.any(lik < 0) or not np.all(np.isfinite(lik)):
            raise ConfigError("likelihood entries must be finite and nonnegative")
        if np.any(np.abs(lik.sum(axis=1) - 1.0) > MASS_TOL):
            raise ConfigError("likelihood rows must sum to one")
        with np.errstate(divide="ignore"):
            loglik = np.log(lik)
        lik.setflags(write=False)
        loglik.setflags(write=False)
        object.__setattr__(self, "lik", lik)
        object.__setattr__(self, "loglik", loglik)

    @property
    def outcomes(self) -> int:
        return self.lik.shape[1]

    def is_injective(self) -> bool:
        return np.unique(self.lik, axis=0).shape[0] == self.lik.shape[0]

    def check_injective(self):
        if not self.is_injective():
            raise ConfigError("model is not injective: two parameter points share a likelihood row")


def bernoulli_grid(grid, coords=None) -> CategoricalModel:
    """Bernoulli model with success probability ``grid[i]``; outcome 1 is a success.

    ``coords`` optionally places the parameters in a different metric space
    (defaults to the success probabilities themselves).
    """
    p = np.asarray(grid, dtype=np.float64)
    if np.any((p < 0) | (p > 1)):
        raise ConfigError("Bernoulli parameters must lie in [0, 1]")
    space = build_grid_space(p if coords is None else coords)
    return CategoricalModel(space, np.column_stack([1.0 - p, p]), name="bernoulli")


def product_bernoulli(theta1, theta2, base2: float = 0.5) -> CategoricalModel:
    """Two independent coins on the grid Theta1 x Theta2.

    Outcome ``2*a + b`` with P(a=1) = theta1 and P(b=1) = base2 + theta2, so the
    slice theta2 = 0 is the restricted model with a fair second coin.
    """
    t1 = np.asarray(theta1, dtype=np.float64)
    t2 = np.asarray(theta2, dtype=np.float64)
    pts = np.array([(x, y) for x in t1 for y in t2])
    pa = pts[:, 0]
    pb = base2 + pts[:, 1]
    if np.any((pa < 0) | (pa > 1) | (pb < 0) | (pb > 1)):
        raise ConfigError("product model probabilities leave [0, 1]")
    lik = np.column_stack([(1 - pa) * (1 - pb), (1 - pa) * pb, pa * (1 - pb), pa * pb])
    return CategoricalModel(build_grid_space(pts), lik, name="product_bernoulli")


def model_kl(model: CategoricalModel, i: int, j: int) -> float:
    """K(theta_i, theta_j) = KL(P_i || P_j)."""
    return kl_weights(model.lik[i], model.lik[j])


def kl_row(model: CategoricalModel, i: int) -> np.ndarray:
    """K(theta_i, theta_j) for every j."""
    return np.array([kl_weights(model.lik[i], model.lik[j]) for j in range(model.lik.shape[0])])


# --------------------------------------------------------------------------- data

def replicate_rng(seed: int, experiment: int = 0, replicate: int = 0) -> np.random.Generator:
    """Independent stream for (seed, experiment, replicate); same ids give the same draws."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(experiment), int(replicate)))
    return np.random.Generator(np.random.Philox(ss))


def _draw(row: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    # inverse-cdf on a uniform stream keeps datasets nested in n
    cdf = np.cumsum(row)
    cdf[-1] = 1.0
    u = rng.random(n)
    return np.minimum(np.searchsorted(cdf, u, side="right"), row.size - 1).astype(np.int64)


def sample_data(model: CategoricalModel, theta_index: int, n: int, seed=0, experiment: int = 0,
                replicate: int = 0) -> np.ndarray:
    """n i.i.d. outcome indices from P_theta.

    ``seed`` may be an integer (stream derived from (seed, experiment,
    replicate)) or a numpy Generator.  For a fixed stream the first k draws do
    not depend on n.
    """
    if not 0 <= theta_index < model.lik.shape[0]:
        raise ConfigError(f"parameter index {theta_index} out of range")
    if n < 0:
        raise ConfigError("sample size must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else replicate_rng(seed, experiment, replicate)
    return _draw(model.lik[theta_index], n, rng)


def _log_posterior(prior_w, model, counts):
    with np.errstate(divide="ignore"):
        lp = np.log(prior_w)
    used = counts > 0
    if used.any():
        lp = lp + model.loglik[:, used] @ counts[used]
    return lp


def posterior_weights(prior_w: np.ndarray, model: CategoricalModel, counts: np.ndarray) -> np.ndarray:
    lp = _log_posterior(prior_w, model, counts)
    top = lp.max()
    if not np.isfinite(top):
        raise PreconditionError("posterior undefined: prior and likelihood are mutually singular on this data")
    w = np.exp(lp - top)
    return w / w.sum()


def posterior(prior: DiscreteMeasure, model: CategoricalModel, data) -> DiscreteMeasure:
    """Exact Bayes update of ``prior`` on the outcomes in ``data``."""
    if prior.space is not model.theta_space:
        raise ConfigError("prior is not on the model's parameter space")
    data = np.asarray(data, dtype=np.int64).reshape(-1)
    if data.size == 0:
        return prior
    if data.min() < 0 or data.max() >= model.outcomes:
        raise ConfigError("data contains invalid outcome indices")
    counts = np.bincount(data, minlength=model.outcomes).astype(np.float64)
    return DiscreteMeasure(model.theta_space, posterior_weights(prior.weights, model, counts))


def _replicate_counts(model, theta_index, n, M, seed, experiment, threads):
    def one(r):
        x = sample_data(model, theta_index, n, seed, experiment, r)
        return np.bincount(x, minlength=model.outcomes).astype(np.float64)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return np.stack(list(ex.map(one, range(M))))
    return np.stack([one(r) for r in range(M)])


def posterior_law(prior: DiscreteMeasure, model: CategoricalModel, data_theta: int, n: int, M: int,
                  seed=0, experiment: int = 0, threads: int = 1, counts=None) -> EmpiricalLaw:
    """Empirical law of the posterior over M independent datasets of size n from P_theta.

    Replicate r always uses the stream (seed, experiment, r), so two calls with
    different priors see the same datasets.
    """
    if M < 1:
        raise ConfigError("need at least one replicate")
    if prior.space is not model.theta_space:
        raise ConfigError("prior is not on the model's parameter space")
    if counts is None:
        counts = _replicate_counts(model, data_theta, n, M, seed, experiment, threads)
    rows = np.stack([posterior_weights(prior.weights, model, c) for c in counts])
    return EmpiricalLaw(model.theta_space, rows)


def coupled_posterior_distances(prior1: DiscreteMeasure, prior2: DiscreteMeasure, model: CategoricalModel,
                                data_theta: int, n: int, M: int, seed=0, experiment: int = 0,
                                threads: int = 1) -> PairedDistanceSample:
    """Prokhorov distance between the two posteriors on each shared dataset."""
    counts = _replicate_counts(model, data_theta, n, M, seed, experiment, threads)
    law1 = posterior_law(prior1, model, data_theta, n, M, counts=counts)
    law2 = posterior_law(prior2, model, data_theta, n, M, counts=counts)
    return paired_distances(law1, law2, threads)


def paired_distances(law1: EmpiricalLaw, law2: EmpiricalLaw, threads: int = 1) -> PairedDistanceSample:
    """Row-by-row Prokhorov distances of two coupled laws (replicate r against replicate r)."""
    if len(law1) != len(law2):
        raise ConfigError("coupled laws must have the same number of replicates")
    dist = law1.space.dist
    keys = [(law1.samples[r].tobytes(), law2.samples[r].tobytes()) for r in range(len(law1))]
    first = {}
    for r, k in enumerate(keys):
        first.setdefault(k, r)
    uniq = list(first.values())

    def solve(r):
        return prokhorov_weights(law1.samples[r], law2.samples[r], dist)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(solve, uniq))
    else:
        vals = [solve(r) for r in uniq]
    solved = {keys[r]: v for r, v in zip(uniq, vals)}
    return PairedDistanceSample(np.array([solved[k] for k in keys]))
