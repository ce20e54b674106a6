import math

import mpmath
import numpy as np
import pytest

from ranklab.degrees import (MixingLaw, QuadConfig, degree_correlation, degree_mean,
                             empirical_degree_fit, mixed_poisson_pmf, mixed_poisson_sf,
                             mixed_poisson_table, mixed_poisson_tail_mean, mixing_law)
from ranklab.errors import QuadratureError
from ranklab.graphs import Digraph, sample_digraph
from ranklab.model import (Constant, EmpiricalList, ExperimentConfig, ModelKind, ParetoSpec,
                           replication_rng, sample_types)

FIG2A_IN = MixingLaw(ParetoSpec(1.5, 2.0), (25 / 3) / (6 + 25 / 3))


def pareto_pmf_oracle(k, shape, scale, lam):
    """alpha (lam sigma)^alpha Gamma(k - alpha, lam sigma) / k!, in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    a, x = mpmath.mpf(shape), mpmath.mpf(lam) * mpmath.mpf(scale)
    return float(a * x ** a * mpmath.gammainc(k - a, x) / mpmath.factorial(k))


@pytest.mark.parametrize("k", [0, 1, 2, 5, 17, 60, 200, 1000])
@pytest.mark.parametrize("shape,scale,lam", [(1.5, 2.0, 0.5814), (1.8, 40 / 9, 0.3), (3.0, 1.0, 2.0)])
def test_pareto_pmf_matches_closed_form(k, shape, scale, lam):
    law = MixingLaw(ParetoSpec(shape, scale), lam)
    assert mixed_poisson_pmf(k, law) == pytest.approx(pareto_pmf_oracle(k, shape, scale, lam),
                                                      rel=1e-9, abs=1e-13)


def test_constant_base_is_poisson():
    law = MixingLaw(Constant(3.0), 0.5)
    assert mixed_poisson_pmf(0, law) == pytest.approx(math.exp(-1.5), rel=1e-14)
    assert mixed_poisson_pmf(4, law) == pytest.approx(math.exp(-1.5) * 1.5 ** 4 / 24, rel=1e-13)


def test_erdos_renyi_mixing_is_constant():
    cfg = ExperimentConfig(n=10, model=ModelKind.erdos_renyi(3.0))
    law = mixing_law(cfg, "in")
    assert law.mean() == pytest.approx(1.5)
    assert mixed_poisson_pmf(2, law) == pytest.approx(math.exp(-1.5) * 1.5 ** 2 / 2)
    assert degree_mean(Constant(3.0), Constant(3.0)) == 1.5


def test_fig2a_mass_and_mean_with_tail():
    table = mixed_poisson_table(FIG2A_IN, kmax=200)
    tail = mixed_poisson_sf(200, FIG2A_IN)
    assert table.sum() + tail == pytest.approx(1.0, abs=1e-9)
    # the mass beyond 200 is about 4e-4 for this heavy tail
    assert 1e-4 < tail < 1e-3
    mean = float(np.arange(201) @ table) + mixed_poisson_tail_mean(200, FIG2A_IN)
    assert mean == pytest.approx(3.49, abs=0.01)
    assert mean == pytest.approx(FIG2A_IN.mean(), abs=1e-7)


def test_sf_and_tail_mean_identities():
    law = MixingLaw(ParetoSpec(1.8, 40 / 9), 0.3)
    table = mixed_poisson_table(law, kmax=50)
    for k in (0, 3, 20, 50):
        assert mixed_poisson_sf(k, law) == pytest.approx(1 - table[:k + 1].sum(), abs=1e-9)
    assert mixed_poisson_sf(-1, law) == 1.0
    assert mixed_poisson_tail_mean(0, law) == pytest.approx(law.mean(), rel=1e-9)


def test_light_tail_table_sums_to_one():
    for law in (MixingLaw(Constant(4.0), 0.5), MixingLaw(EmpiricalList((1.0, 2.0, 9.0)), 1.0),
                MixingLaw(ParetoSpec(6.0, 1.0), 2.0)):
        table = mixed_poisson_table(law)
        assert abs(table.sum() - 1) <= 1e-8 + 10 * QuadConfig().epsabs * len(table)


def test_monotone_mean():
    means = []
    for r in np.linspace(0.05, 2.0, 12):
        law = MixingLaw(ParetoSpec(2.5, 1.0), float(r))
        t = mixed_poisson_table(law, kmax=300)
        means.append(float(np.arange(len(t)) @ t) + mixed_poisson_tail_mean(300, law))
    assert np.all(np.diff(means) > 0)


def test_degree_means():
    assert degree_mean(ParetoSpec(1.5, 2.0), ParetoSpec(2.5, 5.0)) == pytest.approx(3.48837, abs=1e-5)
    assert degree_mean(ParetoSpec(1.8, 40 / 9), ParetoSpec(2.8, 45 / 7)) == pytest.approx(5.0, abs=1e-12)
    assert degree_mean(ParetoSpec(1.0, 1.0), Constant(1.0)) == math.inf


def test_quadrature_failure_reports_estimate():
    law = MixingLaw(ParetoSpec(1.5, 2.0), 0.6)
    with pytest.raises(QuadratureError) as exc:
        mixed_poisson_pmf(40, law, QuadConfig(epsabs=1e-300, limit=20))
    assert exc.value.error_estimate > 0


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        mixed_poisson_pmf(-1, FIG2A_IN)
    with pytest.raises(ValueError):
        MixingLaw(Constant(1.0), -0.1)


def test_erdos_renyi_fit():
    cfg = ExperimentConfig(n=2000, model=ModelKind.erdos_renyi(3.0))
    graphs = []
    for r in range(200):
        rng = replication_rng(41, r)
        graphs.append(sample_digraph(cfg.model, sample_types(cfg, rng), rng))
    fit = empirical_degree_fit(graphs, "in", mixing_law(cfg, "in"))
    assert fit.tv <= 0.01
    # ER in-degree is Binomial(n-1, lam/2n), mean slightly below lam/2
    assert abs(fit.mean - 1999 * 3 / 4000) < 4 * fit.mean_se
    lines = fit.to_csv().splitlines()
    assert lines[0] == "k,empirical,theoretical" and len(lines) == len(fit.empirical) + 1


def test_empty_graph_fit():
    fit = empirical_degree_fit([Digraph.empty(5)], "out", MixingLaw(Constant(0.0), 1.0))
    assert fit.empirical.tolist() == [1.0]
    assert fit.tv == 0.0 and fit.z_score() == 0.0


def test_fit_rejects_bad_side():
    with pytest.raises(ValueError):
        empirical_degree_fit([Digraph.empty(2)], "both", FIG2A_IN)


def test_conditional_independence_constant_weights():
    cfg = ExperimentConfig(n=400, model=ModelKind("chung_lu"), w_plus_law=Constant(2.0),
                           w_minus_law=Constant(3.0))
    graphs = []
    for r in range(2000):
        rng = replication_rng(43, r)
        graphs.append(sample_digraph(cfg.model, sample_types(cfg, rng), rng))
    corr, se = degree_correlation(graphs)
    assert abs(corr) < 4 * se
