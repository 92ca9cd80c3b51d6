import numpy as np
from numpy.testing import assert_allclose, assert_raises
from scipy import integrate, stats

from dplab import dp_metrics
from dplab.analysis import chernoff_only_epsilons, compliance_sets
from dplab.constants import METRICS_EPSILONS, METRICS_MULTIPLIERS
from dplab.dp_metrics import (GaussianModel, PriorWeight, chernoff_gaussians, chernoff_information, compliance, delta_rule,
                              divergence_report, figure1_sweep, kl_gaussians, renyi_gaussians)
from dplab.mechanism import PrivacyBudget, calibrate_noise
from dplab.utils import DegenerateError, DomainError


SIGMA_REFERENCE = calibrate_noise(PrivacyBudget(1.0, 0.05), 4.0)


def random_pairs(count=20, seed=404):
    random = np.random.RandomState(seed)
    pairs = []
    for i in range(count):
        f0 = GaussianModel(random.uniform(-2.0, 2.0), random.uniform(0.7, 2.5))
        f1 = GaussianModel(random.uniform(-2.0, 2.0), random.uniform(0.7, 2.5))
        pairs.append((f0, f1))
    return pairs


def _integration_limits(f0, f1):
    lower = min(f0.mu - 12.0 * f0.sigma, f1.mu - 12.0 * f1.sigma)
    upper = max(f0.mu + 12.0 * f0.sigma, f1.mu + 12.0 * f1.sigma)
    return lower, upper


def kl_by_quadrature(f0, f1):
    def integrand(x):
        return stats.norm.pdf(x, f0.mu, f0.sigma) * (stats.norm.logpdf(x, f0.mu, f0.sigma) - stats.norm.logpdf(x, f1.mu, f1.sigma))
    lower, upper = _integration_limits(f0, f1)
    value, _ = integrate.quad(integrand, lower, upper, points=[f0.mu, f1.mu], epsabs=1e-12, epsrel=1e-12, limit=200)
    return value


def renyi_by_quadrature(f0, f1, a):
    def integrand(x):
        return np.exp(a * stats.norm.logpdf(x, f0.mu, f0.sigma) + (1.0 - a) * stats.norm.logpdf(x, f1.mu, f1.sigma))
    lower, upper = _integration_limits(f0, f1)
    value, _ = integrate.quad(integrand, lower, upper, points=[f0.mu, f1.mu], epsabs=0.0, epsrel=1e-13, limit=200)
    return np.log(value) / (a - 1.0)


def test_kl_examples():
    f = GaussianModel(1.0, 2.0)
    assert kl_gaussians(f, f) == 0.0
    assert_allclose(kl_gaussians(GaussianModel(0.0, 3.0), GaussianModel(5.0, 3.0)), 25.0 / 18.0, rtol=1e-14)
    assert_allclose(kl_gaussians(GaussianModel(0.0, 1.0), GaussianModel(1.0, np.sqrt(2.0))), np.log(np.sqrt(2.0)), rtol=1e-14)


def test_renyi_examples():
    f = GaussianModel(-1.0, 0.7)
    for a in [0.1, 0.5, 0.9]:
        assert_allclose(renyi_gaussians(f, f, a), 0.0, atol=1e-15)
    assert_allclose(renyi_gaussians(GaussianModel(0.0, 2.0), GaussianModel(3.0, 2.0), 0.5), 9.0 / 16.0, rtol=1e-14)
    expected = np.log(np.sqrt(2.0)) - np.log(4.0 / 3.0) + 1.0 / 6.0
    assert_allclose(renyi_gaussians(GaussianModel(0.0, 1.0), GaussianModel(1.0, np.sqrt(2.0)), 0.5), expected, rtol=1e-13)
    assert_allclose(expected, 0.2256, atol=1e-4)


def test_prior_weight():
    prior = PriorWeight(0.3)
    assert_allclose(prior.a + prior.b, 1.0)
    for a in [0.0, 1.0, -0.2, np.nan]:
        assert_raises(DomainError, PriorWeight, a)
    f0, f1 = GaussianModel(0.0, 1.0), GaussianModel(1.0, 1.0)
    assert_raises(DomainError, renyi_gaussians, f0, f1, 0.0)
    assert_raises(DomainError, chernoff_gaussians, f0, f1, 1.0)
    assert renyi_gaussians(f0, f1, prior) == renyi_gaussians(f0, f1, 0.3)


def test_chernoff_examples():
    assert_allclose(chernoff_gaussians(GaussianModel(0.0, 2.0), GaussianModel(3.0, 2.0), 0.5), 9.0 / 32.0, rtol=1e-14)
    f = GaussianModel(2.0, 1.0)
    assert chernoff_gaussians(f, f, 0.5) == 0.0
    value = chernoff_gaussians(GaussianModel(0.0, SIGMA_REFERENCE), GaussianModel(8.0, SIGMA_REFERENCE), 0.5)
    assert_allclose(value, 64.0 / (8.0 * SIGMA_REFERENCE ** 2), rtol=1e-14)
    assert_allclose(value, 0.0777, atol=1e-4)


def test_equal_variance_identity():
    for sigma in [0.3, 1.0, 10.149, 50.0]:
        for delta_mu in [-7.0, 0.01, 1.0, 8.0, 64.0]:
            f0, f1 = GaussianModel(0.0, sigma), GaussianModel(delta_mu, sigma)
            assert_allclose(chernoff_gaussians(f0, f1, 0.5), kl_gaussians(f0, f1) / 4.0, rtol=1e-12)


def test_divergences_nonnegative():
    for f0, f1 in random_pairs(50, seed=7):
        assert kl_gaussians(f0, f1) >= 0.0
        for a in np.linspace(0.05, 0.95, 19):
            assert renyi_gaussians(f0, f1, a) >= 0.0
            assert chernoff_gaussians(f0, f1, a) >= 0.0


def test_kl_matches_quadrature():
    for f0, f1 in random_pairs():
        assert_allclose(kl_gaussians(f0, f1), kl_by_quadrature(f0, f1), atol=1e-8)


def test_renyi_matches_quadrature():
    for f0, f1 in random_pairs():
        for a in [0.25, 0.5, 0.75]:
            assert_allclose(renyi_gaussians(f0, f1, a), renyi_by_quadrature(f0, f1, a), atol=1e-8)


def test_chernoff_information_equal_variance():
    info = chernoff_information(GaussianModel(0.0, 2.0), GaussianModel(5.0, 2.0))
    assert info.a_star == 0.5
    assert_allclose(info.value, 25.0 / 32.0, rtol=1e-14)


def test_chernoff_information_matches_grid_scan():
    grid = np.linspace(0.0, 1.0, 10 ** 5 + 2)[1:-1]
    pairs = [(GaussianModel(0.0, 1.0), GaussianModel(0.0, 2.0))] + random_pairs(5, seed=11)
    for f0, f1 in pairs:
        info = chernoff_information(f0, f1)
        scan = float(np.max(dp_metrics._chernoff(f0, f1, grid)))
        assert_allclose(info.value, scan, atol=1e-8)
        assert info.value >= scan - 1e-12
        assert 0.0 < info.a_star < 1.0
    assert abs(chernoff_information(GaussianModel(0.0, 1.0), GaussianModel(0.0, 2.0)).a_star - 0.5) > 1e-3


def test_chernoff_information_dominates_fixed_prior():
    for f0, f1 in random_pairs(10, seed=3):
        info = chernoff_information(f0, f1)
        for a in np.linspace(0.1, 0.9, 9):
            assert info.value >= chernoff_gaussians(f0, f1, a) - 1e-12


def test_chernoff_information_degenerate():
    f = GaussianModel(1.0, 1.0)
    assert_raises(DegenerateError, chernoff_information, f, f)
    try:
        chernoff_information(f, f)
    except DegenerateError as error:
        assert error.value == 0.0


def test_compliance():
    assert compliance(0.0, 0.3)
    assert compliance(np.exp(1.0), 1.0)
    assert not compliance(np.nextafter(np.exp(1.0), np.inf), 1.0)
    kl = kl_gaussians(GaussianModel(0.0, SIGMA_REFERENCE), GaussianModel(8.0, SIGMA_REFERENCE))
    assert_allclose(kl, 0.3107, atol=1e-4)
    assert compliance(kl, 1.0)
    assert_raises(DomainError, compliance, -0.1, 1.0)
    assert_raises(DomainError, compliance, np.nan, 1.0)


def test_divergence_report():
    f0, f1 = GaussianModel(0.0, SIGMA_REFERENCE), GaussianModel(8.0, SIGMA_REFERENCE)
    report = divergence_report(f0, f1, 1.0)
    assert_allclose(report.chernoff_a, report.kl / 4.0, rtol=1e-12)
    assert_allclose(report.chernoff_opt, report.chernoff_a, rtol=1e-14)
    assert report.a_star == 0.5
    assert_allclose(report.budget_bound, np.e)
    assert report.kl_complies and report.chernoff_complies

    same = divergence_report(f0, f0, 1.0)
    assert same.chernoff_opt == 0.0
    assert np.isnan(same.a_star)


def test_delta_rule():
    assert_allclose(delta_rule("eps/20")(1.0), 0.05)
    assert_allclose(delta_rule(" eps / 10 ")(2.0), 0.2)
    assert delta_rule("0.01")(3.0) == 0.01
    assert delta_rule(0.02)(3.0) == 0.02
    assert_raises(DomainError, delta_rule, "eps*2")
    assert_raises(DomainError, delta_rule, "eps/0")


def test_metric_sweep_structure():
    table = figure1_sweep(4.0, METRICS_EPSILONS, METRICS_MULTIPLIERS)
    assert list(table.columns) == ["epsilon", "delta", "delta_mu", "kl", "chernoff_half", "bound_exp_eps", "kl_complies", "chernoff_complies"]
    assert len(table) == len(METRICS_EPSILONS) * len(METRICS_MULTIPLIERS)
    assert sorted(set(table["delta_mu"])) == [8.0, 16.0]
    assert_allclose(table["delta"], table["epsilon"] / 20.0)
    assert_allclose(table["chernoff_half"], table["kl"] / 4.0, rtol=1e-12)
    assert (table["chernoff_half"] <= table["kl"]).all()
    for delta_mu, group in table.groupby("delta_mu"):
        assert np.all(np.diff(group["kl"].values) > 0.0)
        assert np.all(np.diff(group["chernoff_half"].values) > 0.0)


def test_metric_sweep_compliance_sets_nested():
    table = figure1_sweep(4.0, METRICS_EPSILONS, METRICS_MULTIPLIERS)
    for delta_mu, (kl_set, chernoff_set) in compliance_sets(table).items():
        assert kl_set <= chernoff_set


def test_chernoff_complies_where_kl_does_not():
    # a large impact separates the two predicates at moderate epsilon
    table = figure1_sweep(4.0, [0.5, 1.0, 2.0], [8.0])
    only = chernoff_only_epsilons(table)
    assert 1.0 in set(only["epsilon"])
    row = table[table["epsilon"] == 1.0].iloc[0]
    assert row["kl"] > np.e and row["chernoff_half"] <= np.e


def test_metric_sweep_preconditions():
    assert_raises(DomainError, figure1_sweep, 4.0, [], [2.0])
    assert_raises(DomainError, figure1_sweep, 4.0, [1.0], [])
    assert_raises(DomainError, figure1_sweep, 0.0, [1.0], [2.0])
    assert_raises(DomainError, figure1_sweep, 4.0, [30.0], [2.0])
