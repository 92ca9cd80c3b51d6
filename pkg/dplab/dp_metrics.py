#=============================================================================================
# MODULE DOCSTRING
#=============================================================================================

"""
Divergences between univariate Gaussians and divergence-based DP predicates.

DESCRIPTION

For f0 = N(mu0, sigma0^2) and f1 = N(mu1, sigma1^2):

* kl_gaussians        D(f0 || f1)
* renyi_gaussians     D_a(f0 || f1), order a in (0, 1)
* chernoff_gaussians  C_a = (1 - a) D_a, the nonnegative Chernoff exponent
* chernoff_information  max_a C_a and the maximizing a*

A mechanism complies with epsilon-KL-DP (resp. epsilon-Chernoff-DP) when the
divergence between the output distributions on neighbouring datasets is at
most exp(epsilon).  The bound exp(epsilon) is applied as stated; it is
recorded in every report so that results can be reinterpreted against a
bound of epsilon.

figure1_sweep tabulates both metrics for the Gaussian mechanism over a grid
of epsilons and attack impacts.

"""

#=============================================================================================
# GLOBAL IMPORTS
#=============================================================================================

import collections
import numbers

import numpy as np
import pandas as pd
from scipy import optimize

from dplab.constants import METRICS_MULTIPLIERS
from dplab.mechanism import DEFAULT_CALIBRATION_MODE, PrivacyBudget, calibrate_noise
from dplab.utils import DegenerateError, DomainError, check_finite, check_positive

import logging
logger = logging.getLogger(__name__)

#=============================================================================================
# MODULE CONSTANTS
#=============================================================================================

SWEEP_COLUMNS = ["epsilon", "delta", "delta_mu", "kl", "chernoff_half", "bound_exp_eps", "kl_complies", "chernoff_complies"]

DEFAULT_DELTA_RULE = "eps/20"

_OPTIMIZER_XATOL = 1e-10

#=============================================================================================
# Domain types
#=============================================================================================


class GaussianModel(collections.namedtuple("GaussianModel", ["mu", "sigma"])):
    """A univariate normal distribution N(mu, sigma^2)."""
    __slots__ = ()

    def __new__(cls, mu, sigma):
        mu = check_finite("mu", mu)
        sigma = check_positive("sigma", sigma)
        return super(GaussianModel, cls).__new__(cls, mu, sigma)

    @property
    def variance(self):
        return self.sigma ** 2


class PriorWeight(collections.namedtuple("PriorWeight", ["a"])):
    """Prior probability a of f0, with b = 1 - a for f1."""
    __slots__ = ()

    def __new__(cls, a):
        a = float(a)
        if np.isnan(a) or not (0.0 < a < 1.0):
            raise DomainError("a", "prior weight must lie in the open interval (0, 1), got %r" % a)
        return super(PriorWeight, cls).__new__(cls, a)

    @property
    def b(self):
        return 1.0 - self.a


def _as_prior(prior):
    if isinstance(prior, PriorWeight):
        return prior
    return PriorWeight(prior)


ChernoffInformation = collections.namedtuple("ChernoffInformation", ["value", "a_star"])

DivergenceReport = collections.namedtuple("DivergenceReport",
                                          ["kl", "renyi_a", "chernoff_a", "chernoff_opt", "a_star",
                                           "budget_bound", "kl_complies", "chernoff_complies"])

#=============================================================================================
# Divergence kernels
#=============================================================================================


def kl_gaussians(f0, f1):
    """Kullback-Leibler divergence D(f0 || f1) in nats.

    D = log(sigma1/sigma0) + sigma0^2/(2 sigma1^2) + (mu1 - mu0)^2/(2 sigma1^2) - 1/2

    Examples
    --------
    >>> kl_gaussians(GaussianModel(0.0, 1.0), GaussianModel(0.0, 1.0))
    0.0
    """
    ratio = f0.variance / f1.variance
    delta_mu = f1.mu - f0.mu
    kl = np.log(f1.sigma / f0.sigma) + 0.5 * (ratio - 1.0) + delta_mu ** 2 / (2.0 * f1.variance)
    return float(max(kl, 0.0))


def _renyi(f0, f1, a):
    mixed_variance = a * f1.variance + (1.0 - a) * f0.variance
    delta_mu = f0.mu - f1.mu
    return np.log(f1.sigma / f0.sigma) \
        + np.log(f1.variance / mixed_variance) / (2.0 * (a - 1.0)) \
        + 0.5 * a * delta_mu ** 2 / mixed_variance


def _chernoff(f0, f1, a):
    return (1.0 - a) * _renyi(f0, f1, a)


def renyi_gaussians(f0, f1, prior):
    """Renyi divergence of order a, D_a(f0 || f1), in nats.

    Parameters
    ----------
    f0, f1 : GaussianModel
    prior : PriorWeight or float
        Order a, strictly inside (0, 1).

    Returns
    -------
    d_a : float
        log(sigma1/sigma0) + log(sigma1^2 / s_a^2) / (2 (a - 1)) + a (mu0 - mu1)^2 / (2 s_a^2)
        with s_a^2 = a sigma1^2 + (1 - a) sigma0^2.
    """
    prior = _as_prior(prior)
    return float(max(_renyi(f0, f1, prior.a), 0.0))


def chernoff_gaussians(f0, f1, prior):
    """Chernoff exponent C_a = (1 - a) D_a(f0 || f1); zero iff f0 == f1.

    Examples
    --------
    >>> round(chernoff_gaussians(GaussianModel(0.0, 1.0), GaussianModel(2.0, 1.0), 0.5), 12)
    0.5
    """
    prior = _as_prior(prior)
    return float(max(_chernoff(f0, f1, prior.a), 0.0))


def chernoff_information(f0, f1):
    """Chernoff information max_a C_a(f0 || f1).

    Returns
    -------
    info : ChernoffInformation
        (value, a_star).  For equal variances a_star is exactly 1/2 and the
        value (mu1 - mu0)^2 / (8 sigma^2).

    Raises
    ------
    DegenerateError
        If f0 == f1; the error's value is 0 and a_star is undefined.
    """
    if f0 == f1:
        raise DegenerateError("f1", "coincides with f0; the Chernoff information is 0 and a_star undefined", value=0.0)

    if f0.sigma == f1.sigma:
        return ChernoffInformation(float((f1.mu - f0.mu) ** 2 / (8.0 * f0.variance)), 0.5)

    # C_a is concave in a and vanishes at both ends of (0, 1)
    result = optimize.minimize_scalar(lambda a: -_chernoff(f0, f1, a), bounds=(0.0, 1.0), method='bounded',
                                      options=dict(xatol=_OPTIMIZER_XATOL))
    if not result.success:
        logger.warning("Chernoff optimizer did not converge: %s" % result.message)
    logger.debug("Chernoff information of %r vs %r: a*=%.10f after %d evaluations" % (f0, f1, result.x, result.nfev))
    return ChernoffInformation(float(max(-result.fun, 0.0)), float(result.x))

#=============================================================================================
# Compliance predicates
#=============================================================================================


def compliance(metric_value, epsilon):
    """True if a divergence complies with the bound exp(epsilon), boundary included.

    Raises
    ------
    DomainError
        If metric_value is negative or NaN.
    """
    metric_value = float(metric_value)
    if np.isnan(metric_value) or metric_value < 0.0:
        raise DomainError("metric_value", "divergence must be >= 0, got %r" % metric_value)
    epsilon = check_finite("epsilon", epsilon)
    return bool(metric_value <= np.exp(epsilon))


def divergence_report(f0, f1, epsilon, prior=0.5):
    """All divergences between f0 and f1 together with both compliance flags.

    Chernoff-DP compliance is judged on C_a at the given prior.  When
    f0 == f1 the optimal Chernoff information is 0 and a_star is NaN.
    """
    prior = _as_prior(prior)
    kl = kl_gaussians(f0, f1)
    chernoff_a = chernoff_gaussians(f0, f1, prior)
    try:
        chernoff_opt, a_star = chernoff_information(f0, f1)
    except DegenerateError as error:
        chernoff_opt, a_star = error.value, np.nan
    return DivergenceReport(kl=kl,
                            renyi_a=renyi_gaussians(f0, f1, prior),
                            chernoff_a=chernoff_a,
                            chernoff_opt=chernoff_opt,
                            a_star=a_star,
                            budget_bound=float(np.exp(epsilon)),
                            kl_complies=compliance(kl, epsilon),
                            chernoff_complies=compliance(chernoff_a, epsilon))

#=============================================================================================
# Metric sweeps
#=============================================================================================


def delta_rule(rule):
    """Turn a delta rule into a function of epsilon.

    Parameters
    ----------
    rule : str, float or callable
        'eps/<k>' for delta = epsilon / k, a number (or numeric string) for a
        constant delta, or a callable returned unchanged.

    Examples
    --------
    >>> delta_rule('eps/20')(1.0)
    0.05
    >>> delta_rule(0.01)(4.0)
    0.01
    """
    if callable(rule):
        return rule
    if isinstance(rule, numbers.Real):
        constant = float(rule)
        return lambda epsilon: constant

    text = str(rule).strip().replace(" ", "")
    if text.startswith("eps/"):
        try:
            divisor = float(text[len("eps/"):])
        except ValueError:
            raise DomainError("delta_rule", "cannot parse divisor in %r" % rule)
        divisor = check_positive("delta_rule", divisor)
        return lambda epsilon: epsilon / divisor
    try:
        constant = float(text)
    except ValueError:
        raise DomainError("delta_rule", "expected 'eps/<k>' or a constant, got %r" % rule)
    return lambda epsilon: constant


def figure1_sweep(s, epsilons, impact_multipliers=METRICS_MULTIPLIERS, rule=DEFAULT_DELTA_RULE,
                  calibration_mode=DEFAULT_CALIBRATION_MODE):
    """KL and Chernoff(1/2) of the Gaussian mechanism over (epsilon, delta_mu).

    Parameters
    ----------
    s : float
        L2 global sensitivity.
    epsilons : list of float
        Privacy losses, nonempty.
    impact_multipliers : list of float, optional
        The attack impact is delta_mu = m * s for each m.
    rule : str, float or callable, optional, default='eps/20'
        delta as a function of epsilon, see delta_rule().
    calibration_mode : str, optional

    Returns
    -------
    table : pd.DataFrame
        One row per (epsilon, delta_mu), ordered by epsilon then multiplier,
        with columns SWEEP_COLUMNS.
    """
    s = check_positive("s", s)
    if len(epsilons) == 0:
        raise DomainError("eps", "epsilon grid must be nonempty")
    if len(impact_multipliers) == 0:
        raise DomainError("multipliers", "impact grid must be nonempty")
    rule = delta_rule(rule)
    logger.debug("Metric sweep over %d epsilons x %d impacts" % (len(epsilons), len(impact_multipliers)))

    rows = []
    for epsilon in epsilons:
        budget = PrivacyBudget(epsilon, rule(epsilon))
        sigma_z = calibrate_noise(budget, s, calibration_mode)
        f0 = GaussianModel(0.0, sigma_z)
        for multiplier in impact_multipliers:
            delta_mu = float(multiplier) * s
            f1 = GaussianModel(delta_mu, sigma_z)
            kl = kl_gaussians(f0, f1)
            chernoff_half = chernoff_gaussians(f0, f1, 0.5)
            rows.append((budget.epsilon, budget.delta, delta_mu, kl, chernoff_half, float(np.exp(budget.epsilon)),
                         compliance(kl, budget.epsilon), compliance(chernoff_half, budget.epsilon)))

    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
