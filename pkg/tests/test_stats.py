import math

import numpy as np
import pytest

from ranklab.model import ParetoSpec, pareto_sample
from ranklab.stats import (RankSample, default_hill_k, ecdf, hill_tail_index, ks_critical_value,
                           ks_distance, loglog_slope, tail_points, tail_points_csv, wasserstein1)


def test_rank_sample_validation():
    s = RankSample([1.0, 2.0], source="sfpe", seed=3)
    assert len(s) == 2 and not s.values.flags.writeable
    with pytest.raises(ValueError):
        RankSample([])
    with pytest.raises(ValueError):
        RankSample([1.0], source="forest")


def test_ecdf():
    assert ecdf(RankSample([5.0]), 4.9) == 0.0
    assert ecdf(RankSample([5.0]), 5.0) == 1.0
    assert ecdf([1, 2, 3], 2) == pytest.approx(2 / 3)
    rng = np.random.default_rng(0)
    v, x = rng.normal(size=500), rng.normal(size=50)
    assert np.allclose(ecdf(v, x), [(v <= xi).mean() for xi in x])


def test_ks_distance():
    a = np.random.default_rng(1).exponential(size=300)
    assert ks_distance(a, a) == 0.0
    assert ks_distance([0.0], [1.0]) == 1.0
    b = np.random.default_rng(2).exponential(size=200)
    assert ks_distance(a, b) == ks_distance(b, a)
    grid = np.concatenate([a, b])
    brute = np.max(np.abs(ecdf(a, grid) - ecdf(b, grid)))
    assert ks_distance(a, b) == pytest.approx(brute)


def test_ks_same_law_below_critical_value():
    crit = ks_critical_value(10 ** 4, 10 ** 4, 0.01)
    below = 0
    for r in range(100):
        ra, rb = np.random.default_rng([7, r]).spawn(2)
        a = pareto_sample(ParetoSpec(1.5, 2.0), ra, 10 ** 4)
        b = pareto_sample(ParetoSpec(1.5, 2.0), rb, 10 ** 4)
        below += ks_distance(a, b) < crit
    assert below >= 95


def test_wasserstein():
    assert wasserstein1([2.0], [5.5]) == pytest.approx(3.5)
    rng = np.random.default_rng(3)
    a, b, c = rng.normal(size=(3, 400))
    assert wasserstein1(a, a) == 0.0
    assert wasserstein1(a, b) == pytest.approx(np.abs(np.sort(a) - np.sort(b)).mean())
    for _ in range(50):
        a, b, c = rng.standard_cauchy(size=(3, 100))
        assert wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-12


def test_hill_on_pareto():
    x = pareto_sample(ParetoSpec(1.5, 1.0), np.random.default_rng(4), 10 ** 5)
    assert hill_tail_index(x, 1000) == pytest.approx(1.5, abs=0.15)
    assert default_hill_k(15000) == 320


def test_hill_rejections():
    with pytest.raises(ValueError):
        hill_tail_index(np.full(100, 2.0), 20)
    with pytest.raises(ValueError):
        hill_tail_index(np.arange(100.0), 9)
    with pytest.raises(ValueError):
        hill_tail_index(np.arange(20.0), 20)
    with pytest.raises(ValueError):
        hill_tail_index(np.concatenate([np.zeros(50), np.ones(5)]), 10)


def test_hill_on_light_tail_is_large():
    x = np.random.default_rng(5).exponential(size=10 ** 5)
    assert hill_tail_index(x, 1000) > 3


def test_tail_points():
    s = RankSample([1.0, 2.0, 3.0, 4.0])
    assert tail_points(s, [2.0]) == [(math.log10(2), math.log10(0.5))]
    assert tail_points(s, [4.0, 10.0]) == []  # no exceedances
    v = np.random.default_rng(6).exponential(size=1000)
    for x, lp in tail_points(v, [0.5, 1, 2]):
        assert 10 ** lp == pytest.approx((v > 10 ** x).mean())
    text = tail_points_csv([(0.0, -1.0)])
    assert text == "log10x,log10p\n0,-1\n"


def test_loglog_slope():
    pts = [(x, -1.5 * x + 0.2) for x in (0.0, 0.5, 1.0)]
    assert loglog_slope(pts) == pytest.approx(-1.5)
    with pytest.raises(ValueError):
        loglog_slope([(0, 0)])
