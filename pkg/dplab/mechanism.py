"""
The (epsilon, delta) Gaussian mechanism over an aggregation query.

DESCRIPTION

A dataset X^n of real records is released as Y = sum_i X_i + Z with
Z ~ N(0, sigma_z^2).  The noise scale is calibrated from the privacy budget
and the L2 sensitivity s of the query.  Two calibrations are available:

* 'definition3' (default): sigma_z^2 = 2 s^2 log(1.25/delta) / epsilon^2,
  the standard Gaussian-mechanism calibration.
* 'theorem1': sigma_z^2 = s^2 log(1.25/delta)^2 / epsilon^2, the variant
  stated alongside the detection threshold.

All logarithms are natural logarithms.

"""

import collections

import numpy as np
import pandas as pd

from dplab.gauss_special import sample_std_normal
from dplab.utils import DomainError, check_finite, check_positive

import logging
logger = logging.getLogger(__name__)


CALIBRATION_MODES = ('definition3', 'theorem1')
DEFAULT_CALIBRATION_MODE = 'definition3'


class PrivacyBudget(collections.namedtuple("PrivacyBudget", ["epsilon", "delta"])):
    """The pair (epsilon, delta) governing the mechanism noise.

    Parameters
    ----------
    epsilon : float
        Privacy loss, > 0.
    delta : float
        Failure probability, in the open interval (0, 1).
    """
    __slots__ = ()

    def __new__(cls, epsilon, delta):
        epsilon = check_positive("epsilon", epsilon)
        delta = check_finite("delta", delta)
        if not (0.0 < delta < 1.0):
            raise DomainError("delta", "must satisfy 0 < delta < 1, got %r" % delta)
        return super(PrivacyBudget, cls).__new__(cls, epsilon, delta)

    @property
    def log_term(self):
        """log(1.25 / delta), strictly positive for a valid budget."""
        return np.log(1.25 / self.delta)


class Dataset(collections.namedtuple("Dataset", ["records", "record_variances"])):
    """Real-valued records together with their generative variances.

    The variances sigma^2_{X_i} are model parameters, not estimates from the
    records.  Both arrays are stored read-only.
    """
    __slots__ = ()

    def __new__(cls, records, record_variances):
        records = np.array(records, dtype=np.float64, ndmin=1)
        record_variances = np.array(record_variances, dtype=np.float64, ndmin=1)
        if records.ndim != 1 or len(records) < 1:
            raise DomainError("records", "dataset must contain at least one record")
        if records.shape != record_variances.shape:
            raise DomainError("record_variances", "must have one variance per record (%d != %d)" % (len(record_variances), len(records)))
        if not np.all(np.isfinite(records)):
            raise DomainError("records", "all records must be finite")
        if not np.all(record_variances > 0.0) or not np.all(np.isfinite(record_variances)):
            raise DomainError("record_variances", "all variances must be finite and > 0")
        records.setflags(write=False)
        record_variances.setflags(write=False)
        return super(Dataset, cls).__new__(cls, records, record_variances)

    @property
    def n(self):
        return len(self.records)


def _check_mode(calibration_mode):
    if calibration_mode not in CALIBRATION_MODES:
        raise DomainError("calibration_mode", "must be one of %s, got %r" % ("|".join(CALIBRATION_MODES), calibration_mode))


def calibrate_noise(budget, s, calibration_mode=DEFAULT_CALIBRATION_MODE):
    """Noise scale sigma_z for a Gaussian mechanism.

    Parameters
    ----------
    budget : PrivacyBudget
        The (epsilon, delta) pair.
    s : float
        L2 global sensitivity of the query, > 0.
    calibration_mode : str, optional, default='definition3'
        'definition3' gives sigma_z = s sqrt(2 log(1.25/delta)) / epsilon,
        'theorem1' gives sigma_z = s log(1.25/delta) / epsilon.

    Returns
    -------
    sigma_z : float
        Standard deviation of the additive noise.

    Examples
    --------
    >>> round(calibrate_noise(PrivacyBudget(1.0, 0.05), 4.0), 3)
    10.149
    """
    _check_mode(calibration_mode)
    s = check_positive("s", s)
    if calibration_mode == 'definition3':
        sigma_z = s * np.sqrt(2.0 * budget.log_term) / budget.epsilon
    else:
        sigma_z = s * budget.log_term / budget.epsilon
    return float(sigma_z)


def sensitivity_squared_from_noise(sigma_z, budget, calibration_mode=DEFAULT_CALIBRATION_MODE):
    """Invert calibrate_noise: the squared sensitivity implied by sigma_z.

    Parameters
    ----------
    sigma_z : float
        Noise scale, > 0.
    budget : PrivacyBudget
    calibration_mode : str, optional, default='definition3'

    Returns
    -------
    s2 : float
        sigma_z^2 epsilon^2 / (2 log(1.25/delta)) under 'definition3',
        sigma_z^2 epsilon^2 / log(1.25/delta)^2 under 'theorem1'.
    """
    _check_mode(calibration_mode)
    sigma_z = check_positive("sigma_z", sigma_z)
    scaled = (sigma_z * budget.epsilon) ** 2
    if calibration_mode == 'definition3':
        return float(scaled / (2.0 * budget.log_term))
    return float(scaled / budget.log_term ** 2)


def aggregate_query(data):
    """The noiseless query q(X) = sum_i X_i."""
    return float(np.sum(data.records))


def release(data, sigma_z, stream):
    """One noisy release Y = q(X) + sigma_z * z.

    Parameters
    ----------
    data : Dataset
    sigma_z : float
        Noise scale, > 0.
    stream : RandomStream
        The first standard normal draw of this stream is used.
    """
    sigma_z = check_positive("sigma_z", sigma_z)
    z = sample_std_normal(stream, 1)[0]
    return aggregate_query(data) + sigma_z * z


def release_many(data, sigma_z, stream, count):
    """`count` independent releases of the same dataset, as an array."""
    sigma_z = check_positive("sigma_z", sigma_z)
    return aggregate_query(data) + sigma_z * sample_std_normal(stream, count)


def generate_dataset(n, sigma2_x, stream):
    """Draw n i.i.d. zero-mean Gaussian records with variance sigma2_x.

    Parameters
    ----------
    n : int
        Number of records, >= 1.
    sigma2_x : float
        Generative variance of every record, > 0.
    stream : RandomStream

    Returns
    -------
    data : Dataset
        Records sqrt(sigma2_x) * z_i; record_variances filled with sigma2_x.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n", "must be >= 1, got %d" % n)
    sigma2_x = check_positive("sigma2_x", sigma2_x)
    records = np.sqrt(sigma2_x) * sample_std_normal(stream, n)
    return Dataset(records, np.full(n, sigma2_x))


def load_dataset_csv(filename, record_variance):
    """Read a one-column CSV file (header `value`) into a Dataset.

    Parameters
    ----------
    filename : str
        Path of the CSV file.
    record_variance : float
        Generative variance assigned to every record.  It is a model
        parameter and cannot be estimated from a single sample.
    """
    record_variance = check_positive("record_variance", record_variance)
    try:
        frame = pd.read_csv(filename)
    except (IOError, OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise DomainError("dataset", "cannot read %s (%s)" % (filename, error))
    if 'value' not in frame.columns:
        raise DomainError("value", "dataset CSV %s has no 'value' column (found %s)" % (filename, list(frame.columns)))
    try:
        records = frame['value'].to_numpy(dtype=np.float64)
    except (TypeError, ValueError):
        raise DomainError("value", "dataset CSV %s has non-numeric records" % filename)
    logger.info("Read %d records from %s" % (len(records), filename))
    return Dataset(records, np.full(len(records), record_variance))
