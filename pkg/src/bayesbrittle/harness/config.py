"""Experiment configuration: parsing, model/prior construction, precondition gates."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..bayes import CategoricalModel, bernoulli_grid, product_bernoulli
from ..errors import ConfigError, PreconditionError
from ..measures import DiscreteMeasure, dirac, uniform
from ..metric_space import build_grid_space, diameter

KINDS = (
    "consistency",
    "brittleness",
    "covering_bound",
    "growing_diameter",
    "misspecification_slice",
    "metric_validation",
)

DEFAULT_SCHEDULE = [1, 10, 100, 1000, 5000]
DEFAULT_M = 128
DEFAULT_SEED_GROUPS = 4
POINT_TOL = 1e-9
MAX_SEED = 2**64 - 1


@dataclass
class ExperimentConfig:
    kind: str
    model: dict = field(default_factory=dict)
    prior: dict = field(default_factory=lambda: {"type": "uniform"})
    params: dict = field(default_factory=dict)
    schedule: list = field(default_factory=lambda: list(DEFAULT_SCHEDULE))
    M: int = DEFAULT_M
    seed: int = 0
    seed_groups: int = DEFAULT_SEED_GROUPS
    experiment_id: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not isinstance(self.params, dict) or not isinstance(self.model, dict) or not isinstance(self.prior, dict):
            raise ConfigError("model, prior and params must be JSON objects")
        try:
            self.schedule = [int(n) for n in self.schedule]
            self.M = int(self.M)
            self.seed = int(self.seed)
            self.seed_groups = int(self.seed_groups)
            self.experiment_id = int(self.experiment_id)
        except (TypeError, ValueError):
            raise ConfigError("schedule, M, seed, seed_groups and experiment_id must be integers") from None
        if any(n < 0 for n in self.schedule):
            raise ConfigError("sample sizes must be nonnegative")
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ConfigError("schedule must be strictly increasing")
        if self.kind != "metric_validation" and not self.schedule:
            raise ConfigError("schedule must list at least one sample size")
        if self.M < 1:
            raise ConfigError("M must be at least 1")
        if not 1 <= self.seed_groups <= self.M:
            raise ConfigError("seed_groups must lie in [1, M]")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        if "kind" not in data:
            raise ConfigError("config needs a 'kind'")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def param(self, name, default=None, required=False):
        if name in self.params:
            return self.params[name]
        if required:
            raise ConfigError(f"{self.kind} config needs params.{name}")
        return default

    def groups(self) -> list[np.ndarray]:
        return np.array_split(np.arange(self.M), self.seed_groups)


# --------------------------------------------------------------------------- models and priors

def build_model(spec: dict) -> CategoricalModel:
    kind = spec.get("type", "bernoulli_grid")
    if kind == "bernoulli_grid":
        if "grid" in spec:
            grid = spec["grid"]
        else:
            pts = int(spec.get("points", 101))
            if pts < 2:
                raise ConfigError("bernoulli_grid needs at least two points")
            grid = np.linspace(float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0)), pts)
        model = bernoulli_grid(grid)
    elif kind == "scaled_bernoulli":
        model = scaled_bernoulli(float(spec["length"]), float(spec["spacing"]),
                                 float(spec.get("p_min", 0.05)), float(spec.get("p_max", 0.95)))
    elif kind == "categorical":
        if "coords" not in spec or "rows" not in spec:
            raise ConfigError("categorical model needs 'coords' and 'rows'")
        model = CategoricalModel(build_grid_space(spec["coords"]), np.asarray(spec["rows"], dtype=float))
    elif kind == "product_bernoulli":
        if "theta1" not in spec or "theta2" not in spec:
            raise ConfigError("product_bernoulli model needs 'theta1' and 'theta2'")
        model = product_bernoulli(spec["theta1"], spec["theta2"], float(spec.get("base2", 0.5)))
    else:
        raise ConfigError(f"unknown model type {kind!r}")
    model.check_injective()
    return model


def scaled_bernoulli(length: float, spacing: float, p_min: float = 0.05, p_max: float = 0.95) -> CategoricalModel:
    """Grid 0, spacing, ..., length with a Bernoulli model p = p_min + (p_max - p_min) * theta / length."""
    if length <= 0 or spacing <= 0:
        raise ConfigError("length and spacing must be positive")
    k = int(round(length / spacing))
    if abs(k * spacing - length) > 1e-9 * max(1.0, length):
        raise ConfigError("length must be a multiple of spacing")
    coords = np.arange(k + 1) * spacing
    p = p_min + (p_max - p_min) * coords / length
    return bernoulli_grid(p, coords=coords)


def point_index(model: CategoricalModel, value) -> int:
    """Grid index of the point with coordinates ``value``."""
    coords = model.theta_space.coords
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape != (coords.shape[1],):
        raise ConfigError(f"point {value!r} has the wrong dimension")
    gap = np.sqrt(((coords - v) ** 2).sum(axis=1))
    i = int(np.argmin(gap))
    if gap[i] > POINT_TOL:
        raise ConfigError(f"point {value!r} is not a grid node")
    return i


def build_prior(spec: dict, model: CategoricalModel) -> DiscreteMeasure:
    space = model.theta_space
    kind = spec.get("type", "uniform")
    if kind == "uniform":
        return uniform(space)
    if kind == "dirac":
        return dirac(space, point_index(model, spec["at"]))
    if kind == "weights":
        return DiscreteMeasure(space, spec["weights"])
    if kind == "slice_uniform":
        if space.coords.shape[1] != 2:
            raise ConfigError("slice_uniform prior needs a two-factor parameter grid")
        on = np.abs(space.coords[:, 1] - float(spec.get("theta2", 0.0))) <= POINT_TOL
        if not on.any():
            raise ConfigError("slice_uniform: no grid points on the requested slice")
        return DiscreteMeasure(space, on.astype(float))
    raise ConfigError(f"unknown prior type {kind!r}")


# --------------------------------------------------------------------------- preconditions

def check_preconditions(config: ExperimentConfig) -> dict:
    """Resolve the config and run every precondition gate without sampling.

    Returns the resolved parameters; raises ConfigError or PreconditionError.
    """
    from ..perturbation import DEFAULT_KL_LADDER, has_kl_support

    kind = config.kind
    resolved = {"kind": kind, "schedule": config.schedule, "M": config.M, "seed": config.seed,
                "seed_groups": config.seed_groups}
    if kind == "metric_validation":
        resolved["R"] = int(config.param("R", 500))
        resolved["max_support"] = int(config.param("max_support", 8))
        if resolved["R"] < 0 or not 1 <= resolved["max_support"] <= 15:
            raise ConfigError("metric_validation needs R >= 0 and 1 <= max_support <= 15")
        return resolved
    if kind == "growing_diameter":
        lengths = [float(x) for x in config.param("lengths", required=True)]
        if not lengths or any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise ConfigError("lengths must be a nonempty increasing list")
        eps = float(config.param("epsilon", required=True))
        if eps <= 0:
            raise ConfigError("epsilon must be positive")
        resolved.update(lengths=lengths, spacing=float(config.param("spacing", required=True)), epsilon=eps,
                        rho=float(config.param("rho", 1.0)))
        for L in lengths:
            scaled_bernoulli(L, resolved["spacing"])
        return resolved

    model = build_model(config.model)
    prior = build_prior(config.prior, model)
    D = diameter(model.theta_space)
    resolved.update(model=model.name, grid_size=model.theta_space.size, diameter=D)
    ladder = config.param("kl_ladder", list(DEFAULT_KL_LADDER))

    if kind == "consistency":
        ts = point_index(model, config.param("theta_star", required=True))
        if not has_kl_support(prior, model, ts, ladder):
            raise PreconditionError("consistency run refused: the prior lacks Kullback-Leibler support at theta_star")
        resolved.update(theta_star=ts, neighborhood_radius=float(config.param("neighborhood_radius", 0.05)),
                        conv_epsilon=float(config.param("conv_epsilon", 0.1)))
    elif kind == "brittleness":
        ts = point_index(model, config.param("theta_star", required=True))
        th = point_index(model, config.param("theta", required=True))
        alpha = float(config.param("alpha", required=True))
        rho = float(config.param("rho", required=True))
        delta = float(config.param("delta", rho))
        cap = min(D / 2, 1.0)
        eps_bar = float(config.param("epsilon_bar", cap / 2))
        if not 0 <= alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")
        if not alpha < min(delta, rho):
            raise PreconditionError(
                f"alpha={alpha} violates the proof restriction alpha < min(delta, rho) = {min(delta, rho)}")
        if not 0 < eps_bar < cap:
            raise ConfigError(f"epsilon_bar must lie in (0, min(D/2, 1)) = (0, {cap})")
        if alpha > 0 and not has_kl_support(prior, model, ts, ladder):
            raise PreconditionError("brittleness run refused: the base prior lacks Kullback-Leibler support at theta_star")
        resolved.update(theta_star=ts, theta=th, alpha=alpha, rho=rho, delta=delta, epsilon_bar=eps_bar,
                        neighborhood_radius=float(config.param("neighborhood_radius", 0.05)))
    elif kind == "covering_bound":
        eps = float(config.param("epsilon", required=True))
        if eps <= 0:
            raise ConfigError("epsilon must be positive")
        from ..perturbation import EXACT_LIMIT

        if model.theta_space.size > EXACT_LIMIT and not config.param("allow_inexact", False):
            raise PreconditionError(
                f"exact covering numbers need |Theta| <= {EXACT_LIMIT}; set params.allow_inexact to accept greedy bounds")
        supp = prior.support()
        supp_diam = float(model.theta_space.dist[np.ix_(supp, supp)].max())
        if eps > supp_diam and supp.size > 0:
            raise ConfigError(f"epsilon={eps} exceeds the diameter of the prior's support; evacuation is undefined")
        resolved.update(epsilon=eps, epsilon_prime=float(config.param("epsilon_prime", 0.02)),
                        rho=float(config.param("rho", 1.0)))
    elif kind == "misspecification_slice":
        if model.name != "product_bernoulli":
            raise ConfigError("misspecification_slice needs a product_bernoulli model")
        ts = point_index(model, config.param("theta_star", required=True))
        alpha = float(config.param("alpha", required=True))
        if not 0 <= alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")
        slice_value = float(config.prior.get("theta2", 0.0))
        if config.prior.get("type") != "slice_uniform":
            raise ConfigError("misspecification_slice needs a slice_uniform prior")
        coords = model.theta_space.coords
        on_slice = np.abs(coords[:, 1] - slice_value) <= POINT_TOL
        gap_to_slice = float(model.theta_space.dist[ts, on_slice].min())
        resolved.update(theta_star=ts, alpha=alpha, slice_value=slice_value,
                        misspecified=bool(abs(coords[ts, 1] - slice_value) > POINT_TOL),
                        distance_to_slice=gap_to_slice,
                        lower_gap=float(config.param("lower_gap", 0.5 * min(1.0, gap_to_slice))))
    return resolved
