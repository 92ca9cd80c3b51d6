"""
Mutual-information bounds on the variance an attacker can inject.

DESCRIPTION

An adversary adds a record X_a ~ N(0, sigma2_xa) to a population of n
records with total variance sum_var.  Two expansions of the mutual
information between neighbouring datasets and the mechanism output are
available:

    first  = 1/2 log(1 + sum_var / sigma2_xa)
    second = 1/2 log((2 pi e)^(n-1) sum_var / s^2)

Requiring first >= second yields a lower bound on the sensitivity,

    s_min^2 = (2 pi e)^(n-1) sum_var sigma2_xa / (sum_var + sigma2_xa),

and, inverted, a ceiling on the attack variance,

    sigma2_xa <= sum_var / ((2 pi e)^(n-1) sum_var / s^2 - 1).

(2 pi e)^(n-1) overflows a double near n = 250, so every quantity is
carried as a natural logarithm and only exponentiated on request.

"""

import collections
import enum

import numpy as np

from dplab.constants import LOG_2, LOG_2PI_E
from dplab.mechanism import DEFAULT_CALIBRATION_MODE, sensitivity_squared_from_noise
from dplab.utils import InfeasibleBound, check_finite, check_integer, check_positive

import logging
logger = logging.getLogger(__name__)


_EXPM1_LOG_CUTOFF = 30.0


class QuantityKind(enum.Enum):
    MUTUAL_INFORMATION_NATS = "MutualInformationNats"
    SENSITIVITY_LOWER = "SensitivityLower"
    VARIANCE_CEILING = "VarianceCeiling"


class LogQuantity(collections.namedtuple("LogQuantity", ["log_value", "context"])):
    """A positive quantity stored as its natural logarithm."""
    __slots__ = ()

    def __new__(cls, log_value, context):
        log_value = check_finite("log_value", log_value)
        return super(LogQuantity, cls).__new__(cls, log_value, QuantityKind(context))

    @property
    def value(self):
        """exp(log_value); may underflow to 0 or overflow to inf."""
        with np.errstate(over='ignore', under='ignore'):
            value = float(np.exp(self.log_value))
        if value == 0.0 or np.isinf(value):
            logger.warning("%s = exp(%.6g) is not representable as a float" % (self.context.value, self.log_value))
        return value


class PopulationStats(collections.namedtuple("PopulationStats", ["n", "sum_var"])):
    """Dataset dimension n and the sum of the record variances."""
    __slots__ = ()

    def __new__(cls, n, sum_var):
        n = check_integer("n", n, 1)
        sum_var = check_positive("sum_var", sum_var)
        return super(PopulationStats, cls).__new__(cls, n, sum_var)

    @classmethod
    def from_dataset(cls, data):
        """Aggregate the generative variances of a mechanism.Dataset."""
        return cls(data.n, float(np.sum(data.record_variances)))

    @property
    def log_sum_var(self):
        return float(np.log(self.sum_var))


class AttackVariance(object):
    """The variance sigma2_xa of the injected record, held in log domain.

    Parameters
    ----------
    log_sigma2_xa : float
        Natural log of the variance.  Use AttackVariance.from_value() to
        build one from a plain variance.
    """
    def __init__(self, log_sigma2_xa):
        self.log_sigma2_xa = check_finite("log_sigma2_xa", log_sigma2_xa)

    @classmethod
    def from_value(cls, sigma2_xa):
        return cls(np.log(check_positive("sigma2_xa", sigma2_xa)))

    @property
    def sigma2_xa(self):
        return LogQuantity(self.log_sigma2_xa, QuantityKind.VARIANCE_CEILING).value

    def __eq__(self, other):
        return isinstance(other, AttackVariance) and self.log_sigma2_xa == other.log_sigma2_xa

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self.log_sigma2_xa)

    def __repr__(self):
        return "AttackVariance(log_sigma2_xa=%r)" % self.log_sigma2_xa


def _log_expm1(x):
    """log(exp(x) - 1) for x > 0 without overflow."""
    if x > _EXPM1_LOG_CUTOFF:
        return x + np.log1p(-np.exp(-x))
    return np.log(np.expm1(x))


def _log_mi_exponent(stats, log_s):
    """(n-1) log(2 pi e) + log(sum_var) - 2 log(s), twice the second expansion."""
    return (stats.n - 1) * LOG_2PI_E + stats.log_sum_var - 2.0 * log_s


def nats_to_bits(nats):
    """Convert an information quantity from nats to bits."""
    return nats / LOG_2


def mi_first_expansion(stats, attack):
    """Mutual information due to the attack, 1/2 log(1 + sum_var / sigma2_xa), in nats.

    Examples
    --------
    >>> round(mi_first_expansion(PopulationStats(1, 2.0), AttackVariance.from_value(2.0)), 4)
    0.3466
    """
    return float(0.5 * np.logaddexp(0.0, stats.log_sum_var - attack.log_sigma2_xa))


def mi_second_expansion(stats, s):
    """Mutual information through the sensitivity, in nats.

    Parameters
    ----------
    stats : PopulationStats
    s : float
        L2 global sensitivity, > 0.

    Returns
    -------
    mi : float
        1/2 [(n-1) log(2 pi e) + log(sum_var) - 2 log(s)].  Negative when the
        sensitivity exceeds what the population variance supports.
    """
    s = check_positive("s", s)
    return float(0.5 * _log_mi_exponent(stats, np.log(s)))


def sensitivity_lower_bound(stats, attack):
    """Smallest sensitivity consistent with the attack staying undetected.

    Returns
    -------
    s_min : LogQuantity
        log of s_min, where
        s_min^2 = (2 pi e)^(n-1) sum_var sigma2_xa / (sum_var + sigma2_xa).
    """
    log_s2 = (stats.n - 1) * LOG_2PI_E + stats.log_sum_var + attack.log_sigma2_xa \
        - np.logaddexp(stats.log_sum_var, attack.log_sigma2_xa)
    return LogQuantity(0.5 * log_s2, QuantityKind.SENSITIVITY_LOWER)


def _ceiling_from_log_s(stats, log_s):
    exponent = _log_mi_exponent(stats, log_s)
    if exponent <= 0.0:
        raise InfeasibleBound("s", "unbounded: log((2 pi e)^(n-1) sum_var / s^2) = %.6g <= 0, the constraint imposes no ceiling" % exponent)
    return AttackVariance(stats.log_sum_var - _log_expm1(exponent))


def attack_variance_ceiling(stats, s):
    """Largest attack variance for which first >= second expansion holds.

    Parameters
    ----------
    stats : PopulationStats
    s : float
        L2 global sensitivity, > 0.

    Returns
    -------
    ceiling : AttackVariance
        sum_var / ((2 pi e)^(n-1) sum_var / s^2 - 1), held in log domain.

    Raises
    ------
    InfeasibleBound
        If (2 pi e)^(n-1) sum_var / s^2 <= 1; any attack variance passes.

    Examples
    --------
    >>> round(attack_variance_ceiling(PopulationStats(1, 4.0), np.sqrt(2.0)).sigma2_xa, 9)
    4.0
    """
    s = check_positive("s", s)
    return _ceiling_from_log_s(stats, np.log(s))


def ceiling_from_budget(stats, sigma_z, budget, calibration_mode=DEFAULT_CALIBRATION_MODE):
    """Attack-variance ceiling for a mechanism with noise scale sigma_z.

    The sensitivity is recovered from sigma_z and the budget by inverting the
    noise calibration, then passed to attack_variance_ceiling.
    """
    s2 = sensitivity_squared_from_noise(sigma_z, budget, calibration_mode)
    logger.debug("Sensitivity implied by sigma_z=%g at %r: s^2=%g" % (sigma_z, budget, s2))
    return _ceiling_from_log_s(stats, 0.5 * np.log(s2))
