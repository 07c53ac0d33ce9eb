import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayesbrittle.bayes import bernoulli_grid
from bayesbrittle.errors import ConfigError, PreconditionError
from bayesbrittle.measures import DiscreteMeasure, dirac, total_variation, uniform
from bayesbrittle.metric_space import build_grid_space, diameter
from bayesbrittle.perturbation import (
    ball_evacuation,
    covering_number,
    dirac_contamination,
    has_kl_support,
    kl_neighborhood,
    least_mass_center,
    packing,
    packing_number,
)


def brute_cover(space, eps):
    n = space.size
    balls = [set(np.flatnonzero(space.dist[c] < eps)) for c in range(n)]
    for k in range(1, n + 1):
        for cs in itertools.combinations(range(n), k):
            if set().union(*(balls[c] for c in cs)) == set(range(n)):
                return k


def brute_pack(space, eps):
    n = space.size
    for k in range(n, 0, -1):
        for ps in itertools.combinations(range(n), k):
            if all(space.dist[i, j] >= eps for i, j in itertools.combinations(ps, 2)):
                return k


def bern_kl(a, b):
    s = 0.0
    for p, q in ((a, b), (1 - a, 1 - b)):
        if p > 0:
            if q == 0:
                return math.inf
            s += p * math.log(p / q)
    return s


@pytest.fixture
def grid101():
    return bernoulli_grid(np.round(np.linspace(0, 1, 101), 12))


def test_kl_neighborhood(grid101):
    assert kl_neighborhood(grid101, 50, 0.0).members.tolist() == [50]
    assert kl_neighborhood(grid101, 50, math.inf).members.tolist() == list(range(101))
    members = kl_neighborhood(grid101, 50, 0.02).members
    expected = [i for i in range(101) if bern_kl(0.5, i / 100) <= 0.02]
    assert members.tolist() == expected
    assert (members[0], members[-1]) == (41, 59)


def test_has_kl_support(grid101):
    s = grid101.theta_space
    assert has_kl_support(dirac(s, 70), grid101, 70)
    assert not has_kl_support(dirac(s, 20), grid101, 70)
    assert has_kl_support(dirac_contamination(uniform(s), 20, 0.01), grid101, 70)
    with pytest.raises(ConfigError):
        has_kl_support(uniform(s), grid101, 70, [0.1, 0.5])
    with pytest.raises(ConfigError):
        has_kl_support(uniform(s), grid101, 70, [])


def test_dirac_contamination():
    s = build_grid_space(np.linspace(0, 1, 101))
    pi = uniform(s)
    np.testing.assert_array_equal(dirac_contamination(pi, 20, 0.0).weights, dirac(s, 20).weights)
    np.testing.assert_allclose(dirac_contamination(pi, 20, 1.0).weights, pi.weights, rtol=1e-15)
    c = dirac_contamination(pi, 20, 0.01)
    assert c.weights[20] == pytest.approx(0.99 + 0.01 / 101, rel=1e-14)
    assert c.weights[0] == pytest.approx(9.900990099009902e-05, rel=1e-12)
    assert total_variation(c, dirac(s, 20)) <= 0.01
    with pytest.raises(ConfigError):
        dirac_contamination(pi, 20, 1.5)


def test_ball_evacuation(line3):
    pi = uniform(line3)
    np.testing.assert_array_equal(ball_evacuation(pi, 0, 0.6).weights, [0, 0, 1])
    skewed = DiscreteMeasure(line3, [0, 0.3, 0.7])
    assert ball_evacuation(skewed, 0, 0.4) .weights.tolist() == skewed.weights.tolist()
    with pytest.raises(PreconditionError):
        ball_evacuation(pi, 1, 2.0)


def test_ball_evacuation_tv_identity(rng):
    s = build_grid_space(rng.random((15, 2)))
    for _ in range(50):
        pi = DiscreteMeasure(s, rng.random(15))
        c, eps = int(rng.integers(15)), float(rng.uniform(0.05, 0.6))
        ball = np.flatnonzero(s.dist[c] < eps)
        if pi.mass(ball) >= 1 - 1e-9:
            continue
        ev = ball_evacuation(pi, c, eps)
        assert ev.weights[ball].sum() == 0
        assert total_variation(ev, pi) == pytest.approx(pi.mass(ball), abs=1e-12)


def test_covering_examples():
    s = build_grid_space([0, 1, 2])
    assert covering_number(s, 3.5).count == 1
    cert = covering_number(s, 1.5)
    assert cert.count == 1 and cert.centers.tolist() == [1]
    assert covering_number(s, 1.0).count == 3
    with pytest.raises(ConfigError):
        covering_number(s, 0)


def test_packing_examples():
    s = build_grid_space([0, 1, 2])
    assert packing_number(s, 3.0) == 1
    assert packing_number(s, 1.0) == 3
    assert packing_number(s, 2.5) == 1


def test_exact_against_brute_force(rng):
    for _ in range(30):
        s = build_grid_space(rng.random((int(rng.integers(2, 9)), 2)))
        eps = float(rng.uniform(0.05, 0.8))
        assert covering_number(s, eps).count == brute_cover(s, eps)
        assert packing_number(s, eps) == brute_pack(s, eps)


def test_greedy_beyond_limit():
    s = build_grid_space(np.linspace(0, 1, 30))
    cov = covering_number(s, 0.1)
    pack = packing(s, 0.1)
    assert not cov.exact and not pack.exact
    assert covering_number(s, 0.1, exact_limit=30).count <= cov.count


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=14, unique=True),
       st.floats(0.02, 0.7))
def test_kolmogorov_tikhomirov(pts, eps):
    s = build_grid_space(pts)
    assert packing_number(s, 2 * eps) <= covering_number(s, eps).count <= packing_number(s, eps)


def test_least_mass_center():
    s = build_grid_space(np.round(np.linspace(0, 1, 101), 12))
    idx, mass = least_mass_center(uniform(s), s, 0.05)
    assert idx in (0, 100)
    assert mass == pytest.approx(5 / 101)
    idx, mass = least_mass_center(dirac(s, 50), s, 0.05)
    assert mass == 0 and s.dist[idx, 50] >= 0.05


def test_least_mass_center_eq_n(rng):
    for _ in range(20):
        s = build_grid_space(rng.random((int(rng.integers(3, 16)), 2)))
        pi = DiscreteMeasure(s, rng.random(s.size))
        eps = float(rng.uniform(0.05, 0.5))
        _, mass = least_mass_center(pi, s, eps)
        assert mass <= 1 / covering_number(s, 2 * eps).count + 1e-12


def test_covering_count_on_21_grid():
    s = build_grid_space(np.linspace(0, 1, 21))
    assert covering_number(s, 0.2).count == 3
    assert brute_cover(s, 0.2) == 3
