import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bayesbrittle import kernels
from bayesbrittle.prob_metrics import prokhorov_weights


def brute_deficiency(a, b, D, t):
    """max_A a(A) - b(N_t(A)) by enumerating subsets of the left side."""
    best = 0.0
    p = a.size
    for mask in range(1 << p):
        A = [i for i in range(p) if mask >> i & 1]
        if not A:
            continue
        nb = (D[A] <= t).any(axis=0)
        best = max(best, a[A].sum() - b[nb].sum())
    return best


def test_deficiency_matches_hall_enumeration(rng):
    for _ in range(300):
        p, q = rng.integers(1, 8, size=2)
        a = rng.dirichlet(np.ones(p))
        b = rng.dirichlet(np.ones(q))
        D = np.round(rng.random((p, q)), 2)
        t = float(rng.choice(D.ravel()))
        assert kernels.transport_deficiency(a, b, D, t) == pytest.approx(brute_deficiency(a, b, D, t), abs=1e-12)


def test_deficiency_edge_cases():
    a = np.array([1.0])
    b = np.array([1.0])
    assert kernels.transport_deficiency(a, b, np.array([[0.5]]), 0.4) == 1.0
    assert kernels.transport_deficiency(a, b, np.array([[0.5]]), 0.5) == 0.0


SCRIPT = """
import json, numpy as np
from bayesbrittle import kernels
from bayesbrittle.prob_metrics import prokhorov_weights
rng = np.random.default_rng(5)
out = []
for _ in range(25):
    n = 9
    x = rng.random((n, 2))
    d = np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1))
    a = rng.dirichlet(np.ones(n)); b = rng.dirichlet(np.ones(n))
    out.append(prokhorov_weights(a, b, d))
out.append(float(kernels.ky_fan_sorted(np.sort(rng.random(40)))))
print(json.dumps({"backend": kernels.backend(), "values": out}))
"""


def _run(no_numba):
    env = dict(os.environ)
    env.pop("BAYESBRITTLE_NO_NUMBA", None)
    if no_numba:
        env["BAYESBRITTLE_NO_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def test_python_fallback_agrees_with_numba():
    fast, slow = _run(False), _run(True)
    assert fast["backend"] == "numba"
    assert slow["backend"] == "python"
    np.testing.assert_allclose(fast["values"], slow["values"], rtol=0, atol=1e-12)


def test_posterior_sized_solve_is_exact_at_ties():
    g = np.round(np.linspace(0, 1, 101), 12)
    d = np.round(np.abs(g[:, None] - g[None]), 12)
    a = np.zeros(101)
    a[70] = 1.0
    b = np.zeros(101)
    b[20] = 1.0
    assert prokhorov_weights(a, b, d) == 0.5
