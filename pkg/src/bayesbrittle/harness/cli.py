"""Command line entry point.

    bayesbrittle run <config.json> [--out DIR] [--threads K] [--seed U64]
    bayesbrittle validate <config.json>
    bayesbrittle oracle <measures.json>

Exit codes: 0 success, 1 configuration error, 2 precondition violation,
3 internal invariant failure.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..errors import BayesBrittleError, ConfigError, InvariantError
from ..measures import DiscreteMeasure, hellinger, kl_divergence, total_variation
from ..metric_space import FiniteMetricSpace, build_grid_space
from ..prob_metrics import ORACLE_MAX_SUPPORT, ky_fan_empirical, prokhorov, prokhorov_oracle
from .config import ExperimentConfig, check_preconditions
from .report import _plain
from .runners import run

log = logging.getLogger("bayesbrittle")


def _parser():
    p = argparse.ArgumentParser(prog="bayesbrittle", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run an experiment and write report.json / curves.csv"),
                        ("validate", "check a config and its preconditions without sampling"),
                        ("oracle", "ad-hoc metric computations on measures from a JSON file")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("path", nargs="?", help="config or measures file")
        sp.add_argument("--config", dest="config_path", help="same as the positional path")
        if name == "run":
            sp.add_argument("--out", help="output directory (defaults to config 'output' or ./out)")
            sp.add_argument("--threads", type=int, default=1)
            sp.add_argument("--seed", type=int, help="override the config seed")
        if name == "validate":
            sp.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _path(args) -> str:
    path = args.path or args.config_path
    if not path:
        raise ConfigError("no input file given")
    return path


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(_path(args))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        cfg.__post_init__()
    return cfg


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    resolved = check_preconditions(cfg)
    print(json.dumps(_plain(resolved), indent=2, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    out = args.out or cfg.output or "out"
    report = run(cfg, threads=args.threads)
    rp, cp = report.write(out)
    print(json.dumps(_plain({"report": str(rp), "curves": str(cp), "summary": report.summary,
                             "violations": report.violations}), indent=2, sort_keys=True))
    if report.violations:
        raise InvariantError(f"{report.violations} invariant violation(s); see {rp}")
    return 0


def _load_space(spec) -> FiniteMetricSpace:
    if "coords" in spec:
        return build_grid_space(spec["coords"])
    if "dist" in spec:
        d = np.asarray(spec["dist"], dtype=float)
        space = FiniteMetricSpace(tuple(range(d.shape[0])), d)
        space.check_metric()
        return space
    raise ConfigError("space needs 'coords' or 'dist'")


def cmd_oracle(args) -> int:
    path = _path(args)
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    out = {}
    if "measures" in data:
        space = _load_space(data.get("space", {}))
        measures = {name: DiscreteMeasure(space, w) for name, w in data["measures"].items()}
        pairs = data.get("pairs") or list(itertools.combinations(measures, 2))
        results = []
        for a, b in pairs:
            if a not in measures or b not in measures:
                raise ConfigError(f"unknown measure in pair {a!r}, {b!r}")
            mu, nu = measures[a], measures[b]
            row = {"pair": [a, b], "total_variation": total_variation(mu, nu), "hellinger": hellinger(mu, nu),
                   "kl": kl_divergence(mu, nu), "prokhorov": prokhorov(mu, nu)}
            if max(mu.support().size, nu.support().size) <= ORACLE_MAX_SUPPORT:
                row["prokhorov_oracle"] = prokhorov_oracle(mu, nu)
            results.append(row)
        out["pairs"] = results
    if "distances" in data:
        out["ky_fan"] = ky_fan_empirical(data["distances"])
    if not out:
        raise ConfigError("measures file needs 'measures' and/or 'distances'")
    print(json.dumps(_plain(out), indent=2, sort_keys=True))
    return 0


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except BayesBrittleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
