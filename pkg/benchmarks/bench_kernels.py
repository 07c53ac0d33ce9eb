"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 20 50 101] [--reps 20]

Each backend runs in its own interpreter because the choice is made at import
time from BAYESBRITTLE_NO_NUMBA.  Numba compile time is paid in a warm-up call
and excluded from the timings.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

WORKER = "--worker"


def worker(sizes, reps, seed):
    from bayesbrittle import kernels
    from bayesbrittle.harness.config import ExperimentConfig
    from bayesbrittle.harness.runners import run

    rng = np.random.default_rng(seed)
    out = {"backend": kernels.backend(), "prokhorov_ms": {}, "ky_fan_ms": None}
    for n in sizes:
        x = np.sort(rng.random(n))
        D = np.round(np.abs(x[:, None] - x[None, :]), 12)
        cases = [(rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))) for _ in range(reps)]
        kernels.prokhorov_dense(cases[0][0], cases[0][1], D)  # warm-up / compile
        t0 = time.perf_counter()
        for a, b in cases:
            kernels.prokhorov_dense(a, b, D)
        out["prokhorov_ms"][str(n)] = 1e3 * (time.perf_counter() - t0) / reps
    d = np.sort(rng.random(100_000))
    kernels.ky_fan_sorted(d[:10])
    t0 = time.perf_counter()
    kernels.ky_fan_sorted(d)
    out["ky_fan_ms"] = 1e3 * (time.perf_counter() - t0)

    cfg = ExperimentConfig.from_dict({
        "kind": "covering_bound", "model": {"type": "bernoulli_grid", "points": 21},
        "prior": {"type": "uniform"}, "params": {"epsilon": 0.1, "epsilon_prime": 0.02, "rho": 0.5},
        "schedule": [10, 100, 1000], "M": 64, "seed": seed})
    run(cfg)
    t0 = time.perf_counter()
    run(cfg)
    out["covering_run_s"] = time.perf_counter() - t0
    print(json.dumps(out))


def launch(no_numba, args):
    env = dict(os.environ)
    env.pop("BAYESBRITTLE_NO_NUMBA", None)
    if no_numba:
        env["BAYESBRITTLE_NO_NUMBA"] = "1"
    cmd = [sys.executable, __file__, WORKER, "--reps", str(args.reps), "--seed", str(args.seed),
           "--sizes", *map(str, args.sizes)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 101])
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument(WORKER, action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.sizes, args.reps, args.seed)
        return
    fast, slow = launch(False, args), launch(True, args)
    print(f"{'case':<24}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    rows = [(f"prokhorov n={n} [ms]", fast["prokhorov_ms"][n], slow["prokhorov_ms"][n]) for n in fast["prokhorov_ms"]]
    rows.append(("ky_fan 1e5 [ms]", fast["ky_fan_ms"], slow["ky_fan_ms"]))
    rows.append(("covering run [s]", fast["covering_run_s"], slow["covering_run_s"]))
    for name, f, s in rows:
        print(f"{name:<24}{f:>12.3f}{s:>12.3f}{s / f:>9.1f}x")


if __name__ == "__main__":
    main()
