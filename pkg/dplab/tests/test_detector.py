import numpy as np
from numpy.testing import assert_allclose, assert_raises
from scipy import integrate, stats

from dplab import detector, dummympi
from dplab.analysis import binomial_band
from dplab.constants import VALIDATION_ALPHAS, VALIDATION_EPSILONS, VALIDATION_IMPACTS, ROC_ALPHA_GRID
from dplab.detector import (Decision, DetectorDesign, HypothesisPair, decide, decision_threshold, monte_carlo_rates, power,
                            roc_curve, roc_scenarios, threshold_k, threshold_k_bar)
from dplab.dummympi import DummyMPIComm
from dplab.gauss_special import RandomStream, q_inverse
from dplab.mechanism import PrivacyBudget, calibrate_noise
from dplab.utils import DegenerateError, DomainError


SIGMA_REFERENCE = calibrate_noise(PrivacyBudget(1.0, 0.05), 4.0)  # ~10.149


def validation_sigmas():
    return [calibrate_noise(PrivacyBudget(eps, eps / 20.0), 4.0) for eps in VALIDATION_EPSILONS]


def test_threshold_k_reference():
    assert_allclose(threshold_k(8.0, SIGMA_REFERENCE, 0.05), 2.680, atol=2e-3)
    assert_allclose(threshold_k_bar(-8.0, SIGMA_REFERENCE, 0.05), 2.680, atol=2e-3)
    assert_allclose(threshold_k(8.0, SIGMA_REFERENCE, 0.05), threshold_k_bar(-8.0, SIGMA_REFERENCE, 0.05), rtol=1e-12)


def test_threshold_k_limits():
    sigma_z = 3.0
    for delta_mu in [0.5, 2.0, 7.0]:
        expected = np.exp(-delta_mu ** 2 / (2.0 * sigma_z ** 2))
        assert_allclose(threshold_k(delta_mu, sigma_z, 0.5), expected, rtol=1e-14)
        assert_allclose(threshold_k_bar(-delta_mu, sigma_z, 0.5), expected, rtol=1e-14)
    for alpha in [0.01, 0.3, 0.9]:
        assert_allclose(threshold_k(1e-9, sigma_z, alpha), 1.0, atol=1e-8)
        assert_allclose(threshold_k_bar(-1e-9, sigma_z, alpha), 1.0, atol=1e-8)


def test_threshold_preconditions():
    assert_raises(DomainError, threshold_k, 0.0, 1.0, 0.05)
    assert_raises(DomainError, threshold_k, -1.0, 1.0, 0.05)
    assert_raises(DomainError, threshold_k_bar, 1.0, 1.0, 0.05)
    assert_raises(DomainError, threshold_k, 1.0, 1.0, 0.0)
    assert_raises(DomainError, threshold_k, 1.0, 1.0, 1.0)
    assert_raises(DomainError, threshold_k, 1.0, 0.0, 0.5)


def test_decision_threshold_examples():
    assert decision_threshold(-2.0, 2.0, 1.7, 1.0) == 0.0
    delta_mu = 4.0
    assert_allclose(decision_threshold(0.0, delta_mu, 2.0, np.e), 1.0 + delta_mu / 2.0, rtol=1e-15)
    assert_raises(DegenerateError, decision_threshold, 1.0, 1.0, 1.0, 2.0)
    assert_raises(DomainError, decision_threshold, 0.0, 1.0, 1.0, 0.0)


def test_threshold_identity_grid():
    for sigma_z in validation_sigmas():
        for delta_mu in VALIDATION_IMPACTS:
            for alpha in VALIDATION_ALPHAS:
                k = threshold_k(delta_mu, sigma_z, alpha)
                assert abs(decision_threshold(0.0, delta_mu, sigma_z, k) - sigma_z * q_inverse(alpha)) <= 1e-10


def test_design_negative_bias():
    design = DetectorDesign.create(-3.0, 2.0, 0.1, mu0=1.0)
    assert design.pair == HypothesisPair(1.0, -2.0, 2.0)
    assert_allclose(design.k_tilde, 1.0 + 2.0 * q_inverse(0.9), rtol=1e-12)
    assert decide(design.k_tilde - 1.0, design) == Decision.ATTACK_DETECTED
    assert decide(design.k_tilde + 1.0, design) == Decision.NO_ATTACK


def test_decide_boundary():
    design = DetectorDesign.create(8.0, SIGMA_REFERENCE, 0.05)
    assert decide(design.k_tilde, design) == Decision.NO_ATTACK
    assert decide(design.k_tilde + 1.0, design) == Decision.ATTACK_DETECTED
    assert decide(SIGMA_REFERENCE * q_inverse(0.05) - 0.001, design) == Decision.NO_ATTACK


def test_degenerate_design():
    assert_raises(DegenerateError, DetectorDesign.create, 0.0, 1.0, 0.05)
    design = DetectorDesign.create(0.0, 2.0, 0.05, allow_degenerate=True)
    assert design.k == 1.0
    assert_allclose(design.k_tilde, 2.0 * q_inverse(0.05), rtol=1e-15)


def test_power_reference():
    assert_allclose(power(0.05, 8.0, SIGMA_REFERENCE), 0.196, atol=1e-3)
    # quadrature oracle of Pr[z > k_tilde | H1]
    design = DetectorDesign.create(8.0, SIGMA_REFERENCE, 0.05)
    tail, _ = integrate.quad(lambda z: stats.norm.pdf(z, 8.0, SIGMA_REFERENCE), design.k_tilde, np.inf, epsabs=1e-13)
    assert_allclose(power(0.05, 8.0, SIGMA_REFERENCE), tail, atol=1e-10)


def test_power_limits():
    for alpha in [0.01, 0.05, 0.3]:
        assert_allclose(power(alpha, 1e-9, 1.0), alpha, atol=1e-8)
        assert_allclose(power(alpha, 60.0, 1.0), 1.0, atol=1e-12)
    assert_raises(DegenerateError, power, 0.05, 0.0, 1.0)
    assert power(0.05, 0.0, 1.0, allow_degenerate=True) == 0.05
    try:
        power(0.2, 0.0, 1.0)
    except DegenerateError as error:
        assert error.value == 0.2


def test_power_sign_symmetry():
    alphas = np.linspace(0.01, 0.99, 99)
    for delta_mu in [0.1, 1.0, 3.0, 8.0]:
        assert_allclose(power(alphas, -delta_mu, 2.5), power(alphas, delta_mu, 2.5), atol=1e-12)


def test_power_at_least_size():
    alphas = np.array(ROC_ALPHA_GRID)
    for delta_mu in [0.5, 2.0, 16.0]:
        assert np.all(power(alphas, delta_mu, 4.0) >= alphas)


def test_power_monotone_in_impact_and_epsilon():
    for alpha in VALIDATION_ALPHAS:
        by_impact = [power(alpha, delta_mu, 5.0) for delta_mu in np.linspace(0.1, 30.0, 100)]
        assert np.all(np.diff(by_impact) >= 0.0)
        for delta_mu in VALIDATION_IMPACTS:
            by_epsilon = [power(alpha, delta_mu, sigma_z) for sigma_z in validation_sigmas()]
            assert np.all(np.diff(by_epsilon) >= 0.0)


def test_roc_curve_structure():
    sigma_z = SIGMA_REFERENCE
    curves = dict((label, roc_curve(delta_mu, sigma_z, ROC_ALPHA_GRID, epsilon=1.0, delta=0.05, s=4.0))
                  for label, delta_mu in roc_scenarios(4.0, [2.0, 1.0, 0.5]))
    assert sorted(curves) == ["eq_1s", "gt_2s", "lt_0.5s"]
    for curve in curves.values():
        assert curve.is_nondecreasing()
        assert curve.above_diagonal()
        assert 0.5 <= curve.area() <= 1.0
    assert curves["gt_2s"].dominates(curves["eq_1s"])
    assert curves["eq_1s"].dominates(curves["lt_0.5s"])
    assert not curves["lt_0.5s"].dominates(curves["gt_2s"])


def test_roc_curve_near_diagonal():
    curve = roc_curve(1e-9, 1.0, ROC_ALPHA_GRID)
    assert_allclose(curve.beta_bars, curve.alphas, atol=1e-8)


def test_roc_curve_frame():
    curve = roc_curve(8.0, SIGMA_REFERENCE, [0.01, 0.05, 0.1], epsilon=1.0, delta=0.05, s=4.0)
    frame = curve.to_frame()
    assert list(frame.columns) == ["alpha", "beta_bar", "delta_mu", "sigma_z", "epsilon", "delta", "s"]
    assert len(frame) == 3
    assert (frame["epsilon"] == 1.0).all()
    assert len(curve.points) == 3
    assert np.isnan(roc_curve(8.0, 1.0, [0.5]).to_frame()["epsilon"][0])


def test_roc_curve_preconditions():
    assert_raises(DomainError, roc_curve, 1.0, 1.0, [0.1, 0.1])
    assert_raises(DomainError, roc_curve, 1.0, 1.0, [0.0, 0.5])
    assert_raises(DomainError, roc_curve, 1.0, 1.0, [])
    assert_raises(DegenerateError, roc_curve, 0.0, 1.0, [0.5])
    assert_raises(DegenerateError, roc_scenarios, 4.0, [0.0])


def test_roc_scenario_labels_are_distinct():
    labels = [label for label, _ in roc_scenarios(4.0, [2.0, 2.0000001, -2.0, 0.25])]
    assert labels == ["gt_2s", "gt_2.0000001s", "gt_-2s", "lt_0.25s"]


def test_monte_carlo_within_band():
    trials = 200000
    stream = RandomStream(31)
    for delta_mu in [4.0, -4.0]:
        for alpha in [0.05, 0.3]:
            design = DetectorDesign.create(delta_mu, SIGMA_REFERENCE, alpha)
            rates = monte_carlo_rates(design, trials, stream, block_size=1 << 15)
            beta_bar = power(alpha, delta_mu, SIGMA_REFERENCE)
            assert abs(rates.alpha_hat - alpha) <= binomial_band(alpha, trials, 4.0)
            assert abs(rates.beta_bar_hat - beta_bar) <= binomial_band(beta_bar, trials, 4.0)


def test_monte_carlo_degenerate():
    design = DetectorDesign.create(0.0, 1.0, 0.1, allow_degenerate=True)
    rates = monte_carlo_rates(design, 100000, RandomStream(5))
    assert abs(rates.alpha_hat - rates.beta_bar_hat) <= 2.0 * binomial_band(0.1, 100000)


def test_monte_carlo_deterministic():
    design = DetectorDesign.create(2.0, 1.0, 0.05)
    a = monte_carlo_rates(design, 50000, RandomStream(17), block_size=4096)
    b = monte_carlo_rates(design, 50000, RandomStream(17), block_size=4096)
    assert a == b
    assert_raises(DomainError, monte_carlo_rates, design, 0, RandomStream(17))


def test_monte_carlo_independent_of_worker_count():
    design = DetectorDesign.create(3.0, 2.0, 0.1)
    stream = RandomStream(23)
    trials, block_size = 70001, 4096
    n_blocks = (trials + block_size - 1) // block_size
    serial = detector.count_blocks(design, trials, stream, range(n_blocks), block_size)
    for size in [2, 3, 5]:
        pieces = [detector.count_blocks(design, trials, stream, range(rank, n_blocks, size), block_size) for rank in range(size)]
        assert sorted(entry for piece in pieces for entry in piece) == serial

    rates = monte_carlo_rates(design, trials, stream, mpicomm=DummyMPIComm(), block_size=block_size)
    assert rates.alpha_hat == sum(entry[1] for entry in serial) / float(trials)
    assert rates.beta_bar_hat == sum(entry[2] for entry in serial) / float(trials)


def test_communicator():
    comm = DummyMPIComm()
    assert (comm.rank, comm.size) == (0, 1)
    assert comm.allgather([(0, 1, 2)]) == [[(0, 1, 2)]]
    comm = dummympi.get_communicator()
    assert comm.allgather(comm.rank)[comm.rank] == comm.rank
