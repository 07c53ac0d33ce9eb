"""Probability metrics on finite spaces and Monte Carlo demonstrations of
Bayesian consistency and brittleness under prior perturbation."""
from .errors import ConfigError, InvariantError, PreconditionError
from .metric_space import FiniteMetricSpace, build_grid_space, diameter, enlarge
from .measures import DiscreteMeasure, dirac, hellinger, kl_divergence, total_variation, uniform
from .prob_metrics import (
    EmpiricalLaw,
    PairedDistanceSample,
    ky_fan_empirical,
    ky_fan_to_dirac,
    meta_prokhorov,
    prokhorov,
    prokhorov_oracle,
)
from .bayes import (
    CategoricalModel,
    bernoulli_grid,
    coupled_posterior_distances,
    model_kl,
    posterior,
    posterior_law,
    product_bernoulli,
    sample_data,
)
from .perturbation import (
    ball_evacuation,
    covering_number,
    dirac_contamination,
    has_kl_support,
    kl_neighborhood,
    least_mass_center,
    packing_number,
)

__version__ = "0.1.0"
