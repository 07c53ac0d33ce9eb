import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayesbrittle.errors import ConfigError
from bayesbrittle.measures import DiscreteMeasure, dirac, total_variation
from bayesbrittle.metric_space import FiniteMetricSpace, build_grid_space
from bayesbrittle.prob_metrics import (
    EmpiricalLaw,
    PairedDistanceSample,
    ky_fan_empirical,
    ky_fan_to_dirac,
    lower_bound_from_set,
    meta_prokhorov,
    meta_space,
    prokhorov,
    prokhorov_oracle,
)


def random_pair(rng, max_points=8):
    n = int(rng.integers(2, max_points + 1))
    space = build_grid_space(rng.random((n, int(rng.integers(1, 3)))) * rng.uniform(0.3, 3))

    def meas():
        w = rng.random(n) * (rng.random(n) < 0.6)
        if w.sum() == 0:
            w[rng.integers(n)] = 1.0
        return DiscreteMeasure(space, w)

    return space, meas(), meas()


def test_identical_measures(line3):
    mu = DiscreteMeasure(line3, [0.2, 0.3, 0.5])
    assert prokhorov(mu, mu) == 0
    assert prokhorov_oracle(mu, mu) == 0


@pytest.mark.parametrize("d, expected", [(0.3, 0.3), (2.0, 1.0), (1.0, 1.0), (0.999, 0.999)])
def test_dirac_closed_form(d, expected):
    s = build_grid_space([0.0, d])
    assert prokhorov(dirac(s, 0), dirac(s, 1)) == expected
    assert prokhorov_oracle(dirac(s, 0), dirac(s, 1)) == expected


def test_oracle_mass_deficiency_example():
    # only nontrivial enlargement needs eps > 1, so the answer is the 0.4 mass gap
    s = build_grid_space([0, 1])
    mu, nu = DiscreteMeasure(s, [0.7, 0.3]), DiscreteMeasure(s, [0.3, 0.7])
    assert prokhorov_oracle(mu, nu) == pytest.approx(0.4, abs=1e-15)
    assert prokhorov(mu, nu) == pytest.approx(0.4, abs=1e-15)


def test_flow_matches_oracle(rng):
    for _ in range(200):
        _, mu, nu = random_pair(rng)
        assert prokhorov(mu, nu) == pytest.approx(prokhorov_oracle(mu, nu), abs=1e-9)


def test_oracle_support_cap():
    s = build_grid_space(np.arange(16))
    u = DiscreteMeasure(s, np.ones(16))
    with pytest.raises(ConfigError):
        prokhorov_oracle(u, u)


def test_prokhorov_range_and_symmetry(rng):
    for _ in range(100):
        space, mu, nu = random_pair(rng, 12)
        d = prokhorov(mu, nu)
        assert 0 <= d <= min(1.0, space.dist.max())
        assert d == pytest.approx(prokhorov(nu, mu), abs=1e-12)
        assert d <= total_variation(mu, nu) + 1e-12


unit = st.floats(1e-3, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 2), st.floats(0, 2)), min_size=2, max_size=7, unique=True),
       st.data())
def test_prokhorov_triangle(pts, data):
    s = build_grid_space(pts)
    n = s.size
    ws = [data.draw(st.lists(unit, min_size=n, max_size=n)) for _ in range(3)]
    a, b, c = (DiscreteMeasure(s, w) for w in ws)
    assert prokhorov(a, b) <= prokhorov(a, c) + prokhorov(c, b) + 1e-9


def test_lower_bound_lemma(rng):
    for _ in range(200):
        space, mu, nu = random_pair(rng)
        B = np.flatnonzero(rng.random(space.size) < 0.5)
        alpha = float(rng.uniform(0, space.dist.max() + 0.2))
        bound, delta = lower_bound_from_set(mu, nu, B, alpha)
        assert prokhorov(mu, nu) >= bound - 1e-9


def ky_fan_brute(d):
    """Scan every candidate value and test the defining inequality directly."""
    d = np.asarray(d, dtype=float)
    n = d.size
    cands = sorted({0.0, *d.tolist(), *(k / n for k in range(n + 1))})
    return min(e for e in cands if np.count_nonzero(d > e) / n <= e)


def test_ky_fan_examples():
    assert ky_fan_empirical([0, 0, 0]) == 0
    assert ky_fan_empirical([0.37] * 5) == 0.37
    assert ky_fan_empirical([5.0] * 4) == 1.0
    with pytest.raises(ConfigError):
        ky_fan_empirical([])
    with pytest.raises(ConfigError):
        PairedDistanceSample([-1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(st.floats(0, 3), st.sampled_from([0.0, 0.25, 0.5])), min_size=1, max_size=30))
def test_ky_fan_matches_brute_force(d):
    k = ky_fan_empirical(d)
    assert k == pytest.approx(ky_fan_brute(d), abs=1e-15)
    assert k <= 1.0
    assert k <= max(d)


def test_meta_prokhorov_of_dirac_laws():
    s = build_grid_space(np.linspace(0, 1, 11))
    law1 = EmpiricalLaw.repeat(dirac(s, 7), 5)
    law2 = EmpiricalLaw.repeat(dirac(s, 2), 5)
    assert meta_prokhorov(law1, law1) == 0
    assert meta_prokhorov(law1, law2) == 0.5
    s2 = build_grid_space([0.0, 3.0])
    assert meta_prokhorov(EmpiricalLaw.repeat(dirac(s2, 0), 3), EmpiricalLaw.repeat(dirac(s2, 1), 3)) == 1.0


def test_meta_prokhorov_matches_oracle_on_meta_space(rng):
    for _ in range(30):
        space, _, _ = random_pair(rng)
        laws = [EmpiricalLaw.from_measures([random_pair_measure(rng, space) for _ in range(3)]) for _ in range(2)]
        ms = meta_space(*laws)
        ms.check_metric()
        u1 = DiscreteMeasure(ms, [1, 1, 1, 0, 0, 0])
        u2 = DiscreteMeasure(ms, [0, 0, 0, 1, 1, 1])
        assert meta_prokhorov(*laws, check_metric=True) == pytest.approx(prokhorov_oracle(u1, u2), abs=1e-9)


def random_pair_measure(rng, space):
    w = rng.random(space.size) * (rng.random(space.size) < 0.6)
    if w.sum() == 0:
        w[0] = 1
    return DiscreteMeasure(space, w)


def test_ky_fan_to_dirac_identity(rng):
    s = build_grid_space(np.linspace(0, 1, 7))
    target = dirac(s, 3)
    assert ky_fan_to_dirac(EmpiricalLaw.repeat(target, 4), target) == 0
    law = EmpiricalLaw.repeat(dirac(s, 0), 4)
    assert ky_fan_to_dirac(law, target) == pytest.approx(0.5)
    for _ in range(30):
        law = EmpiricalLaw.from_measures([random_pair_measure(rng, s) for _ in range(5)])
        tgt = random_pair_measure(rng, s)
        assert ky_fan_to_dirac(law, tgt) == pytest.approx(meta_prokhorov(law, EmpiricalLaw.repeat(tgt, 1)), abs=1e-9)


def test_threads_do_not_change_results(rng):
    s = build_grid_space(np.linspace(0, 1, 15))
    l1 = EmpiricalLaw.from_measures([random_pair_measure(rng, s) for _ in range(6)])
    l2 = EmpiricalLaw.from_measures([random_pair_measure(rng, s) for _ in range(6)])
    assert meta_prokhorov(l1, l2, threads=1) == meta_prokhorov(l1, l2, threads=3)


def test_laws_on_different_spaces():
    a, b = build_grid_space([0, 1]), build_grid_space([0, 1])
    with pytest.raises(ConfigError):
        meta_prokhorov(EmpiricalLaw.repeat(dirac(a, 0)), EmpiricalLaw.repeat(dirac(b, 0)))


def test_meta_space_check_rejects_non_metric():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    s = FiniteMetricSpace((0, 1, 2), d)
    law = EmpiricalLaw.repeat(dirac(s, 0))
    # meta-space of Prokhorov distances is always a metric, so the check passes even on a bad base space
    assert meta_prokhorov(law, EmpiricalLaw.repeat(dirac(s, 2)), check_metric=True) == 1.0
