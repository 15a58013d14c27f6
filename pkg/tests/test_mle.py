import math

import numpy as np
import pytest
from scipy import stats

from hiercop.copula import Family, GroupLikelihood, GroupSpec, bounds_for, psi_from_gamma
from hiercop.distributions import make_rng
from hiercop.errors import ConfigError, DomainError
from hiercop.mcmc import McmcConfig
from hiercop.mle import (
    GAMMA_BRACKET,
    MseReport,
    SimStudyConfig,
    fit_mle,
    replication_seeds,
    run_simulation_study,
    sample_copula_data,
    sample_true_params,
)


def kendall_brute(x, y):
    n = len(x)
    s = 0
    for i in range(n):
        s += np.sum(np.sign(x[i] - x[i + 1:]) * np.sign(y[i] - y[i + 1:]))
    return s / (n * (n - 1) / 2)


def test_true_params_support_and_reproducibility():
    g, nu, d = sample_true_params(make_rng(1), m=10_000)
    assert nu.min() >= 1 and nu.max() <= 35 and set(np.unique(nu)) == set(range(1, 36))
    assert d.min() >= 2 and d.max() <= 5
    assert abs(g.mean()) < 3 / math.sqrt(g.size)
    g2, nu2, d2 = sample_true_params(make_rng(1), m=10_000)
    assert np.array_equal(g, g2) and np.array_equal(nu, nu2) and np.array_equal(d, d2)


def test_copula_data_independence_and_range():
    u = sample_copula_data(0.0, 4, 3, 20_000, make_rng(2))
    assert np.all((u > 0) & (u < 1))
    r = np.corrcoef(stats.t.ppf(u, 4).T)
    assert np.all(np.abs(r[np.triu_indices(3, 1)]) < 0.03)


def test_near_comonotone_kendall_tau():
    u = sample_copula_data(0.999, 6, 2, 2_000, make_rng(3))
    assert kendall_brute(u[:, 0], u[:, 1]) > 0.9


def test_copula_data_rejects_invalid_correlation():
    with pytest.raises(DomainError):
        sample_copula_data(-0.5, 3, 4, 10, make_rng(0))


def test_mle_consistency_at_large_n():
    u = sample_copula_data(0.9, 5, 2, 5000, make_rng(4))
    fit = fit_mle(u, "t")
    rho = psi_from_gamma(fit.gamma, bounds_for("t", 2))
    assert abs(rho - 0.9) < 0.02
    assert 3 <= fit.nu <= 8


def test_mle_dominates_the_truth():
    rng = make_rng(5)
    for _ in range(5):
        u = sample_copula_data(0.4, 7, 3, 20, rng)
        fit = fit_mle(u, "t")
        lik = GroupLikelihood(GroupSpec("t", u))
        assert fit.loglik >= lik(0.4, 7) - 1e-9
        assert fit.loglik == pytest.approx(lik(psi_from_gamma(fit.gamma, lik.bounds), fit.nu))


def test_mle_single_observation_stays_in_bracket():
    fit = fit_mle(np.array([[0.3, 0.7]]), "gaussian")
    assert GAMMA_BRACKET[0] <= fit.gamma <= GAMMA_BRACKET[1]
    assert fit.nu is None and math.isfinite(fit.loglik)


def test_mle_archimedean():
    rng = np.random.default_rng(6)
    # Clayton(theta = 2) by conditional inversion
    n, th = 4000, 2.0
    u, w = rng.uniform(size=n), rng.uniform(size=n)
    v = (u ** -th * (w ** (-th / (1 + th)) - 1) + 1) ** (-1 / th)
    fit = fit_mle(np.column_stack([u, v]), "clayton")
    assert psi_from_gamma(fit.gamma, bounds_for("clayton", 2)) == pytest.approx(0.5, abs=0.03)


def test_mle_needs_data():
    with pytest.raises(DomainError):
        fit_mle(np.empty((0, 2)), "gaussian")


def test_replication_streams_are_fixed():
    a = replication_seeds(3, 2)
    b = replication_seeds(3, 2)
    assert a[2] == b[2]
    assert np.array_equal(a[0].random(3), b[0].random(3))
    assert replication_seeds(3, 1)[2] != a[2]


def test_sim_config_validation():
    with pytest.raises(ConfigError) as exc:
        SimStudyConfig(replications=0, obs=0, dim_range=(1, 5))
    assert len(exc.value.problems) == 3


def test_report_with_perfect_estimator_is_zero():
    r = MseReport(bayes=np.zeros(5), mle=np.zeros(5))
    assert r.bayes_mean == 0.0 and r.mle_mean == 0.0


def test_tiny_study_is_reproducible():
    cfg = SimStudyConfig(replications=2, groups=2, obs=10,
                         mcmc=McmcConfig(chains=1, scans=200, burn_in=50, delta_gamma=0.1, delta_xi=0.5))
    a = run_simulation_study(cfg)
    b = run_simulation_study(cfg)
    assert a.bayes.shape == (2,) and a.mle.shape == (2,)
    assert np.array_equal(a.bayes, b.bayes) and np.array_equal(a.mle, b.mle)
    assert not a.failures and a.replications == 2
