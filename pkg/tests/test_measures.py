import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayesbrittle.errors import ConfigError
from bayesbrittle.measures import DiscreteMeasure, dirac, hellinger, kl_divergence, total_variation, uniform
from bayesbrittle.metric_space import build_grid_space

two = build_grid_space([0, 1])


def m(w, space=two):
    return DiscreteMeasure(space, w)


def test_dirac(line3):
    np.testing.assert_array_equal(dirac(line3, 0).weights, [1, 0, 0])
    assert total_variation(dirac(line3, 0), dirac(line3, 0)) == 0
    with pytest.raises(ConfigError):
        dirac(line3, 3)


def test_renormalizes_and_validates():
    assert m([2, 2]).weights.tolist() == [0.5, 0.5]
    for bad in ([0, 0], [-1, 2], [1, np.nan], [1, 2, 3]):
        with pytest.raises(ConfigError):
            m(bad)


def test_total_variation_examples():
    assert total_variation(m([0.3, 0.7]), m([0.3, 0.7])) == 0
    assert total_variation(m([1, 0]), m([0, 1])) == 1
    # subset enumeration: sup_A |mu(A) - nu(A)| = 0.2
    assert total_variation(m([0.7, 0.3]), m([0.5, 0.5])) == pytest.approx(0.2, abs=1e-15)


def test_kl_examples():
    assert kl_divergence(m([0.4, 0.6]), m([0.4, 0.6])) == 0
    assert kl_divergence(m([1, 0]), m([0, 1])) == math.inf
    assert kl_divergence(m([0.5, 0.5]), m([0.25, 0.75])) == pytest.approx(0.14384103622589042, rel=1e-12)


def test_hellinger_examples():
    assert hellinger(m([0.4, 0.6]), m([0.4, 0.6])) == 0
    assert hellinger(m([1, 0]), m([0, 1])) == 1
    # sqrt(1/2 ((sqrt .5 - sqrt .25)^2 + (sqrt .5 - sqrt .75)^2))
    assert hellinger(m([0.5, 0.5]), m([0.25, 0.75])) == pytest.approx(0.1845919112825145, rel=1e-12)


def test_space_mismatch():
    other = build_grid_space([0, 1])
    with pytest.raises(ConfigError):
        total_variation(m([1, 0]), DiscreteMeasure(other, [1, 0]))


def test_tv_matches_subset_enumeration(rng):
    s = build_grid_space(np.arange(6))
    for _ in range(20):
        a, b = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
        brute = max(abs(a[list(A)].sum() - b[list(A)].sum())
                    for r in range(7) for A in itertools.combinations(range(6), r))
        assert total_variation(DiscreteMeasure(s, a), DiscreteMeasure(s, b)) == pytest.approx(brute, abs=1e-14)


six = build_grid_space(np.arange(6))
weights = st.lists(st.floats(1e-3, 1.0), min_size=6, max_size=6)


@settings(max_examples=150, deadline=None)
@given(weights, weights, weights)
def test_metric_properties(a, b, c):
    mu, nu, xi = (DiscreteMeasure(six, w) for w in (a, b, c))
    for d in (total_variation, hellinger):
        assert d(mu, nu) == pytest.approx(d(nu, mu), abs=1e-15)
        assert d(mu, mu) == 0
        assert d(mu, nu) <= d(mu, xi) + d(xi, nu) + 1e-12
    tv, h, kl = total_variation(mu, nu), hellinger(mu, nu), kl_divergence(mu, nu)
    assert kl >= 0.5 * tv * tv - 1e-12
    assert h * h <= tv + 1e-12
    assert tv <= math.sqrt(2) * h + 1e-12
    assert kl >= 0
    assert kl_divergence(mu, mu) == 0


def test_uniform():
    assert uniform(six).weights.tolist() == [1 / 6] * 6
