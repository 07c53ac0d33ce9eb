"""Scenario runners.  Each takes an :class:`ExperimentConfig` and returns a :class:`Report`."""
from __future__ import annotations

import math
import time
from datetime import datetime, timezone

import numpy as np

from .. import kernels
from ..bayes import _replicate_counts, paired_distances, posterior_law
from ..errors import ConfigError
from ..measures import DiscreteMeasure, dirac, hellinger, kl_divergence, total_variation, uniform
from ..metric_space import build_grid_space, open_ball
from ..perturbation import ball_evacuation, covering_number, dirac_contamination, least_mass_center
from ..prob_metrics import (
    EmpiricalLaw,
    distances_to,
    ky_fan_empirical,
    ky_fan_to_dirac,
    lower_bound_from_set,
    meta_prokhorov,
    prokhorov,
    prokhorov_oracle,
)
from .config import ExperimentConfig, build_model, build_prior, check_preconditions, scaled_bernoulli
from .report import Report

SLACK = 1e-12
IDENTITY_TOL = 1e-9


def _new_report(config: ExperimentConfig, resolved: dict) -> Report:
    return Report(kind=config.kind, config=config.to_dict(), resolved=resolved, backend=kernels.backend())


def _quantiles(x):
    q = np.quantile(x, [0.1, 0.5, 0.9])
    return {"mean": float(np.mean(x)), "q10": float(q[0]), "median": float(q[1]), "q90": float(q[2])}


def _check_range(report, name, value, upper=1.0):
    if not (0.0 <= value <= upper + SLACK):
        report.violation("range_violations")


class _Pair:
    """Two coupled posterior laws built on the same datasets."""

    def __init__(self, config, model, prior1, prior2, data_theta, n, threads, experiment_offset=0):
        counts = _replicate_counts(model, data_theta, n, config.M, config.seed,
                                   config.experiment_id + experiment_offset, threads)
        self.law1 = posterior_law(prior1, model, data_theta, n, config.M, counts=counts)
        self.law2 = posterior_law(prior2, model, data_theta, n, config.M, counts=counts)


def _coupled_diagnostics(report, config, n, pair, threads, cache):
    """meta-Prokhorov (overall and per seed group) and Ky Fan of the coupled pair; adds curves."""
    meta = meta_prokhorov(pair.law1, pair.law2, threads, cache=cache)
    ky = ky_fan_empirical(paired_distances(pair.law1, pair.law2, threads))
    groups = [meta_prokhorov(pair.law1.subset(g), pair.law2.subset(g), threads, cache=cache)
              for g in config.groups()]
    if meta > ky + SLACK:
        report.violation("dudley_violations")
    for v in (meta, ky, *groups):
        _check_range(report, "meta", v)
    report.curve(n, "meta_prokhorov", meta)
    for gi, v in enumerate(groups):
        report.curve(n, "meta_prokhorov", v, gi)
    report.curve(n, "ky_fan", ky)
    return {"meta_prokhorov": meta, "ky_fan": ky, "meta_prokhorov_groups": groups,
            "meta_prokhorov_spread": float(max(groups) - min(groups))}


def _neighborhood_mass(law, space, center, radius):
    U = open_ball(space, center, radius)
    return law.samples[:, U].sum(axis=1)


# --------------------------------------------------------------------------- scenarios

def run_consistency(config: ExperimentConfig, threads: int = 1) -> Report:
    res = check_preconditions(config)
    model = build_model(config.model)
    prior = build_prior(config.prior, model)
    space = model.theta_space
    ts = res["theta_star"]
    target = dirac(space, ts)
    target_law = EmpiricalLaw.repeat(target, 1)
    report = _new_report(config, res)
    cache = {}
    for n in config.schedule:
        law = posterior_law(prior, model, ts, n, config.M, config.seed, config.experiment_id, threads)
        mass = _neighborhood_mass(law, space, ts, res["neighborhood_radius"])
        d = distances_to(law, target, threads, cache)
        ky = ky_fan_empirical(d)
        meta = meta_prokhorov(law, target_law, threads, cache=cache)
        groups = [meta_prokhorov(law.subset(g), target_law, threads, cache=cache) for g in config.groups()]
        frac = float(np.mean(d > res["conv_epsilon"]))
        gap = abs(ky - meta)
        if gap > IDENTITY_TOL:
            report.violation("identity_violations")
        if meta > ky + SLACK:
            report.violation("dudley_violations")
        for v in (ky, meta, frac, *groups):
            _check_range(report, "consistency", v)
        row = {"n": n, "neighborhood_mass": _quantiles(mass), "conv_prob_fraction": frac,
               "ky_fan_to_dirac": ky, "meta_prokhorov": meta, "meta_prokhorov_groups": groups,
               "meta_prokhorov_spread": float(max(groups) - min(groups)), "identity_gap": gap}
        report.rows.append(row)
        report.curve(n, "neighborhood_mass_median", row["neighborhood_mass"]["median"])
        report.curve(n, "conv_prob_fraction", frac)
        report.curve(n, "ky_fan", ky)
        report.curve(n, "meta_prokhorov", meta)
        for gi, v in enumerate(groups):
            report.curve(n, "meta_prokhorov", v, gi)
    last = report.rows[-1]
    medians = [r["neighborhood_mass"]["median"] for r in report.rows]
    report.summary = {
        "final_n": last["n"],
        "final_neighborhood_mass_median": last["neighborhood_mass"]["median"],
        "final_meta_prokhorov": last["meta_prokhorov"],
        "final_meta_prokhorov_spread": last["meta_prokhorov_spread"],
        "final_conv_prob_fraction": last["conv_prob_fraction"],
        "median_mass_nondecreasing": bool(all(b >= a - 1e-12 for a, b in zip(medians, medians[1:]))),
    }
    return report


def run_brittleness(config: ExperimentConfig, threads: int = 1) -> Report:
    res = check_preconditions(config)
    model = build_model(config.model)
    prior = build_prior(config.prior, model)
    space = model.theta_space
    ts, th, alpha = res["theta_star"], res["theta"], res["alpha"]
    contaminated = dirac_contamination(prior, th, alpha)
    point = dirac(space, th)
    tv = total_variation(contaminated, point)
    report = _new_report(config, res)
    if tv > alpha + SLACK:
        report.violation("tv_bound_violations")
    cache = {}
    for n in config.schedule:
        pair = _Pair(config, model, contaminated, point, ts, n, threads)
        row = {"n": n, "tv_priors": tv}
        row.update(_coupled_diagnostics(report, config, n, pair, threads, cache))
        mass = _neighborhood_mass(pair.law1, space, ts, res["neighborhood_radius"])
        row["perturbed_neighborhood_mass"] = _quantiles(mass)
        report.rows.append(row)
        report.curve(n, "tv_priors", tv)
    limit = min(float(space.dist[ts, th]), 1.0)
    final = report.rows[-1]["meta_prokhorov"]
    report.summary = {
        "tv_priors": tv,
        "alpha": alpha,
        "limit": limit,
        "final_meta_prokhorov": final,
        "final_ky_fan": report.rows[-1]["ky_fan"],
        "final_meta_prokhorov_spread": report.rows[-1]["meta_prokhorov_spread"],
        "epsilon_bar": res["epsilon_bar"],
        "brittle": bool(final > res["epsilon_bar"]),
    }
    return report


def _covering_mechanism(report, config, model, prior, epsilon, eps_prime, threads, label="", exact_limit=24):
    space = model.theta_space
    ts, mass = least_mass_center(prior, space, epsilon, exact_limit)
    evacuated = ball_evacuation(prior, ts, epsilon)
    cover = covering_number(space, 2 * epsilon, exact_limit)
    tv = total_variation(prior, evacuated)
    if tv > mass + SLACK:
        report.violation("tv_bound_violations")
    if cover.exact and mass > 1.0 / cover.count + SLACK:
        report.violation("tv_bound_violations")
    cache = {}
    rows = []
    for n in config.schedule:
        pair = _Pair(config, model, prior, evacuated, ts, n, threads)
        sub = Report(kind="", config={}, resolved={})
        sub.checks = report.checks
        row = {"n": n, "tv_priors": tv}
        row.update(_coupled_diagnostics(sub, config, n, pair, threads, cache))
        for n_, diag, v, g in sub.curves:
            report.curve(n_, diag + label, v, g)
        report.curve(n, "tv_priors" + label, tv)
        rows.append(row)
    final = rows[-1]["meta_prokhorov"]
    info = {
        "theta_star": ts,
        "theta_star_coords": space.coords[ts].tolist(),
        "ball_mass": mass,
        "covering_number_2eps": cover.count,
        "covering_exact": cover.exact,
        "inverse_covering": 1.0 / cover.count,
        "tv_priors": tv,
        "final_meta_prokhorov": final,
        "gap_threshold": epsilon - eps_prime,
        "gap_holds": bool(final >= epsilon - eps_prime),
    }
    return rows, info


def run_covering_bound(config: ExperimentConfig, threads: int = 1) -> Report:
    res = check_preconditions(config)
    model = build_model(config.model)
    prior = build_prior(config.prior, model)
    report = _new_report(config, res)
    rows, info = _covering_mechanism(report, config, model, prior, res["epsilon"], res["epsilon_prime"], threads)
    report.rows = rows
    info["bound"] = min(info["inverse_covering"], res["rho"])
    report.summary = info
    return report


def run_growing_diameter(config: ExperimentConfig, threads: int = 1) -> Report:
    res = check_preconditions(config)
    report = _new_report(config, res)
    eps, rho = res["epsilon"], res["rho"]
    grids = []
    for L in res["lengths"]:
        model = scaled_bernoulli(L, res["spacing"])
        prior = uniform(model.theta_space)
        label = f"@L={L:g}"
        rows, info = _covering_mechanism(report, config, model, prior, eps, float(config.param("epsilon_prime", 0.02)),
                                         threads, label)
        info.update(length=L, grid_size=model.theta_space.size, bound=min(info["inverse_covering"], rho))
        for r in rows:
            r["length"] = L
        report.rows.extend(rows)
        grids.append(info)
    bounds = [g["bound"] for g in grids]
    report.summary = {
        "grids": grids,
        "bounds": bounds,
        "bound_nonincreasing": bool(all(b <= a + SLACK for a, b in zip(bounds, bounds[1:]))),
    }
    return report


def run_misspecification_slice(config: ExperimentConfig, threads: int = 1) -> Report:
    res = check_preconditions(config)
    model = build_model(config.model)
    prior = build_prior(config.prior, model)
    ts, alpha = res["theta_star"], res["alpha"]
    # move a small mass alpha from the slice prior onto theta_star
    perturbed = dirac_contamination(prior, ts, 1.0 - alpha)
    tv = total_variation(prior, perturbed)
    report = _new_report(config, res)
    if tv > alpha + SLACK:
        report.violation("tv_bound_violations")
    cache = {}
    for n in config.schedule:
        pair = _Pair(config, model, prior, perturbed, ts, n, threads)
        row = {"n": n, "tv_priors": tv}
        row.update(_coupled_diagnostics(report, config, n, pair, threads, cache))
        report.rows.append(row)
        report.curve(n, "tv_priors", tv)
    final = report.rows[-1]["meta_prokhorov"]
    report.summary = {
        "tv_priors": tv,
        "misspecified": res["misspecified"],
        "limit": min(1.0, res["distance_to_slice"]) if alpha > 0 else 0.0,
        "final_meta_prokhorov": final,
        "lower_gap": res["lower_gap"],
        "bounded_below": bool(final >= res["lower_gap"]),
    }
    return report


# --------------------------------------------------------------------------- metric validation

def _random_space(rng, max_points):
    npts = int(rng.integers(2, max_points + 1))
    dim = int(rng.integers(1, 4))
    return build_grid_space(rng.random((npts, dim)) * rng.uniform(0.2, 3.0))


def _random_measure(rng, space, full=False):
    n = space.size
    w = rng.dirichlet(np.full(n, 0.7))
    if not full:
        keep = rng.random(n) < 0.6
        if not keep.any():
            keep[rng.integers(n)] = True
        w = np.where(keep, w, 0.0)
        if w.sum() == 0:
            w[np.flatnonzero(keep)[0]] = 1.0
    else:
        w = np.maximum(w, 1e-6)
    return DiscreteMeasure(space, w)


def metric_validation_sweep(R: int, max_support: int, rng: np.random.Generator) -> dict:
    """Property sweep over R random instances; returns violation counts and deviations."""
    checks = {k: 0 for k in (
        "oracle_violations", "dirac_violations", "pinsker_violations", "prokhorov_tv_violations",
        "hellinger_sandwich_violations", "metric_axiom_violations", "lower_bound_violations",
        "identity_violations")}
    max_dev = 0.0
    for _ in range(R):
        space = _random_space(rng, max_support)
        mu, nu, xi = (_random_measure(rng, space) for _ in range(3))

        dev = abs(prokhorov(mu, nu) - prokhorov_oracle(mu, nu))
        max_dev = max(max_dev, dev)
        if dev > 1e-9:
            checks["oracle_violations"] += 1

        i, j = (int(x) for x in rng.integers(space.size, size=2))
        if prokhorov(dirac(space, i), dirac(space, j)) != min(1.0, float(space.dist[i, j])):
            checks["dirac_violations"] += 1

        p, q = _random_measure(rng, space, full=True), _random_measure(rng, space, full=True)
        tv, h = total_variation(p, q), hellinger(p, q)
        if kl_divergence(p, q) < 0.5 * tv * tv - SLACK:
            checks["pinsker_violations"] += 1
        if prokhorov(p, q) > tv + SLACK:
            checks["prokhorov_tv_violations"] += 1
        if not (h * h <= tv + SLACK and tv <= math.sqrt(2) * h + SLACK):
            checks["hellinger_sandwich_violations"] += 1

        for dfun in (total_variation, hellinger, prokhorov):
            ab, ba = dfun(mu, nu), dfun(nu, mu)
            if abs(ab - ba) > 1e-9 or dfun(mu, mu) != 0.0:
                checks["metric_axiom_violations"] += 1
            if ab > dfun(mu, xi) + dfun(xi, nu) + 1e-9:
                checks["metric_axiom_violations"] += 1

        B = np.flatnonzero(rng.random(space.size) < 0.5)
        alpha = float(rng.uniform(0.0, space.dist.max() + 0.1))
        bound, _ = lower_bound_from_set(mu, nu, B, alpha)
        if prokhorov(mu, nu) < bound - 1e-9:
            checks["lower_bound_violations"] += 1

        law = EmpiricalLaw.from_measures([_random_measure(rng, space) for _ in range(5)])
        kf = ky_fan_to_dirac(law, xi)
        mp = meta_prokhorov(law, EmpiricalLaw.repeat(xi, 1))
        if abs(kf - mp) > 1e-9:
            checks["identity_violations"] += 1
    checks["oracle_max_abs_deviation"] = max_dev
    return checks


def run_metric_validation(config: ExperimentConfig, threads: int = 1) -> Report:
    res = check_preconditions(config)
    report = _new_report(config, res)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(config.experiment_id,)))
    checks = metric_validation_sweep(res["R"], res["max_support"], rng)
    report.checks.update(checks)
    for name, value in sorted(checks.items()):
        report.curve("", name, value)
    report.summary = {"instances": res["R"], "total_violations": report.violations}
    return report


RUNNERS = {
    "consistency": run_consistency,
    "brittleness": run_brittleness,
    "covering_bound": run_covering_bound,
    "growing_diameter": run_growing_diameter,
    "misspecification_slice": run_misspecification_slice,
    "metric_validation": run_metric_validation,
}


def run(config: ExperimentConfig, threads: int = 1) -> Report:
    if config.kind not in RUNNERS:
        raise ConfigError(f"no runner for {config.kind!r}")
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    report = RUNNERS[config.kind](config, threads)
    report.timing = {"started": started, "wall_time_s": round(time.perf_counter() - t0, 3), "threads": threads}
    return report
