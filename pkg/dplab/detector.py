#=============================================================================================
# MODULE DOCSTRING
#=============================================================================================

"""
Likelihood-ratio detection of an injected record under Gaussian DP noise.

DESCRIPTION

The defender observes z = Y - q(X), the noise of a Gaussian mechanism, and
tests

    H0 : z ~ N(mu0, sigma_z^2)   (no attack, the defender fails to detect)
    H1 : z ~ N(mu1, sigma_z^2)   (the attack shifts the noise by delta_mu)

with delta_mu = mu1 - mu0.  The most powerful test of size alpha thresholds
the likelihood ratio at k (delta_mu > 0) or k_bar (delta_mu < 0); in the
z domain this is a comparison with

    k_tilde = sigma_z^2 log(k) / delta_mu + (mu1 + mu0) / 2.

For delta_mu > 0 an attack is flagged when z > k_tilde, for delta_mu < 0
when z < k_tilde.  z equal to k_tilde is assigned to H0.

The defender is assumed to know q(X); no estimator for the noiseless query
is provided.

CAPABILITIES
* thresholds k, k_bar and k_tilde
* the decision rule and the power of the test
* analytic ROC curves
* a Monte Carlo harness estimating size and power, parallel over MPI ranks

"""

#=============================================================================================
# GLOBAL IMPORTS
#=============================================================================================

import collections
import enum

import numpy as np
import pandas as pd

from dplab import dummympi
from dplab.analysis import CurveAnalyzer
from dplab.gauss_special import q_function, q_inverse, sample_std_normal
from dplab.timing import benchmark
from dplab.utils import (DegenerateError, DomainError, check_finite, check_open_unit, check_positive, check_strictly_increasing,
                         format_number)

import logging
logger = logging.getLogger(__name__)

#=============================================================================================
# MODULE CONSTANTS
#=============================================================================================

ROC_COLUMNS = ["alpha", "beta_bar", "delta_mu", "sigma_z", "epsilon", "delta", "s"]

DEFAULT_BLOCK_SIZE = 1 << 17  # Monte Carlo trials per substream

#=============================================================================================
# Domain types
#=============================================================================================


class Decision(enum.Enum):
    NO_ATTACK = "NoAttack"
    ATTACK_DETECTED = "AttackDetected"


class HypothesisPair(collections.namedtuple("HypothesisPair", ["mu0", "mu1", "sigma_z"])):
    """Noise locations under H0 and H1 with a common scale sigma_z."""
    __slots__ = ()

    def __new__(cls, mu0, mu1, sigma_z):
        mu0 = check_finite("mu0", mu0)
        mu1 = check_finite("mu1", mu1)
        sigma_z = check_positive("sigma_z", sigma_z)
        return super(HypothesisPair, cls).__new__(cls, mu0, mu1, sigma_z)

    @property
    def delta_mu(self):
        """The impact of the attack, mu1 - mu0."""
        return self.mu1 - self.mu0

    @property
    def is_degenerate(self):
        return self.mu1 == self.mu0


class DetectorDesign(collections.namedtuple("DetectorDesign", ["pair", "alpha", "k", "k_tilde"])):
    """A size-alpha likelihood-ratio detector for a HypothesisPair.

    Fields
    ------
    pair : HypothesisPair
    alpha : float
        Size of the test (false-alarm probability).
    k : float
        Likelihood-ratio threshold, k (delta_mu > 0) or k_bar (delta_mu < 0).
    k_tilde : float
        The equivalent threshold on z.

    Use DetectorDesign.create() rather than the constructor.
    """
    __slots__ = ()

    @classmethod
    def create(cls, delta_mu, sigma_z, alpha, mu0=0.0, allow_degenerate=False):
        """Build the most powerful size-alpha detector.

        Parameters
        ----------
        delta_mu : float
            Impact of the attack; mu1 = mu0 + delta_mu.
        sigma_z : float
            Noise scale.
        alpha : float
            Size of the test, in (0, 1).
        mu0 : float, optional, default=0
            Location of the noise without attack.
        allow_degenerate : bool, optional, default=False
            If True, delta_mu = 0 yields the limiting detector k = 1,
            k_tilde = mu0 + sigma_z Q^{-1}(alpha) instead of raising.
        """
        alpha = check_open_unit("alpha", alpha)
        pair = HypothesisPair(mu0, float(mu0) + float(delta_mu), sigma_z)

        if pair.is_degenerate:
            if not allow_degenerate:
                raise DegenerateError("delta_mu", "must be nonzero; the hypotheses coincide", value=alpha)
            return cls(pair, alpha, 1.0, pair.mu0 + pair.sigma_z * q_inverse(alpha))

        if pair.delta_mu > 0.0:
            k = threshold_k(pair.delta_mu, pair.sigma_z, alpha)
        else:
            k = threshold_k_bar(pair.delta_mu, pair.sigma_z, alpha)
        k_tilde = decision_threshold(pair.mu0, pair.mu1, pair.sigma_z, k)
        return cls(pair, alpha, k, k_tilde)

#=============================================================================================
# Thresholds
#=============================================================================================


def threshold_k(delta_mu, sigma_z, alpha):
    """Likelihood-ratio threshold of the size-alpha test for a positive bias.

    k = exp{ (delta_mu / sigma_z) (Q^{-1}(alpha) - delta_mu / (2 sigma_z)) }

    Parameters
    ----------
    delta_mu : float
        Impact of the attack, > 0.
    sigma_z : float
        Noise scale, > 0.
    alpha : float
        Size of the test, in (0, 1).

    Raises
    ------
    DomainError
        If delta_mu <= 0 (use threshold_k_bar) or alpha is outside (0, 1).
    """
    delta_mu = check_finite("delta_mu", delta_mu)
    if delta_mu <= 0.0:
        raise DomainError("delta_mu", "must be > 0 for threshold_k (use threshold_k_bar for a negative bias)")
    sigma_z = check_positive("sigma_z", sigma_z)
    alpha = check_open_unit("alpha", alpha)
    ratio = delta_mu / sigma_z
    return float(np.exp(ratio * (q_inverse(alpha) - 0.5 * ratio)))


def threshold_k_bar(delta_mu, sigma_z, alpha):
    """Likelihood-ratio threshold of the size-alpha test for a negative bias.

    k_bar = exp{ (delta_mu / sigma_z) (Q^{-1}(1 - alpha) - delta_mu / (2 sigma_z)) }
    """
    delta_mu = check_finite("delta_mu", delta_mu)
    if delta_mu >= 0.0:
        raise DomainError("delta_mu", "must be < 0 for threshold_k_bar (use threshold_k for a positive bias)")
    sigma_z = check_positive("sigma_z", sigma_z)
    alpha = check_open_unit("alpha", alpha)
    ratio = delta_mu / sigma_z
    return float(np.exp(ratio * (q_inverse(1.0 - alpha) - 0.5 * ratio)))


def decision_threshold(mu0, mu1, sigma_z, k):
    """Threshold on z equivalent to the likelihood-ratio threshold k.

    k_tilde = sigma_z^2 log(k) / delta_mu + (mu1 + mu0) / 2
    """
    mu0 = check_finite("mu0", mu0)
    mu1 = check_finite("mu1", mu1)
    sigma_z = check_positive("sigma_z", sigma_z)
    k = check_positive("k", k)
    delta_mu = mu1 - mu0
    if delta_mu == 0.0:
        raise DegenerateError("delta_mu", "must be nonzero; the decision threshold divides by it")
    return float(sigma_z ** 2 * np.log(k) / delta_mu + 0.5 * (mu1 + mu0))


def _attack_mask(z, design):
    """Vectorised decision rule: True where an attack is flagged."""
    if design.pair.delta_mu < 0.0:
        return z < design.k_tilde
    return z > design.k_tilde


def decide(z, design):
    """Classify one observed noise value z = Y - q(X).

    Returns
    -------
    decision : Decision
        ATTACK_DETECTED if z > k_tilde (delta_mu > 0) or z < k_tilde
        (delta_mu < 0); NO_ATTACK otherwise, including z == k_tilde.
    """
    if _attack_mask(float(z), design):
        return Decision.ATTACK_DETECTED
    return Decision.NO_ATTACK

#=============================================================================================
# Power and ROC curves
#=============================================================================================


def power(alpha, delta_mu, sigma_z, allow_degenerate=False):
    """Detection probability beta_bar = 1 - beta of the size-alpha test.

    beta_bar = Q(Q^{-1}(alpha) - delta_mu / sigma_z)              for delta_mu > 0
    beta_bar = 1 - Q(Q^{-1}(1 - alpha) - delta_mu / sigma_z)      for delta_mu < 0

    Parameters
    ----------
    alpha : float or array_like
        Size(s) of the test, in (0, 1).
    delta_mu : float
        Impact of the attack, nonzero.
    sigma_z : float
        Noise scale, > 0.
    allow_degenerate : bool, optional, default=False
        If True, delta_mu = 0 returns alpha (the test has no power beyond
        its size) instead of raising DegenerateError.
    """
    alpha_arr = np.asarray(alpha, dtype=np.float64)
    delta_mu = check_finite("delta_mu", delta_mu)
    sigma_z = check_positive("sigma_z", sigma_z)
    if np.any(np.isnan(alpha_arr)) or np.any(alpha_arr <= 0.0) or np.any(alpha_arr >= 1.0):
        raise DomainError("alpha", "must lie in the open interval (0, 1)")

    if delta_mu == 0.0:
        if not allow_degenerate:
            raise DegenerateError("delta_mu", "must be nonzero; power collapses to the size alpha", value=alpha)
        beta_bar = alpha_arr
    elif delta_mu > 0.0:
        beta_bar = q_function(q_inverse(alpha_arr) - delta_mu / sigma_z)
    else:
        beta_bar = 1.0 - q_function(q_inverse(1.0 - alpha_arr) - delta_mu / sigma_z)

    if np.ndim(alpha) == 0:
        return float(beta_bar)
    return np.asarray(beta_bar)


class RocCurve(CurveAnalyzer):
    """Analytic ROC curve of the detector for one (delta_mu, sigma_z).

    Parameters
    ----------
    alphas : np.ndarray
        Strictly increasing sizes in (0, 1).
    beta_bars : np.ndarray
        Power at each size.
    metadata : dict
        delta_mu, sigma_z and, when known, epsilon, delta and s.
    """
    def __init__(self, alphas, beta_bars, metadata):
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.beta_bars = np.asarray(beta_bars, dtype=np.float64)
        self.metadata = dict(metadata)

    @property
    def points(self):
        return list(zip(self.alphas.tolist(), self.beta_bars.tolist()))

    def to_frame(self):
        """Return the curve as a DataFrame with the fixed ROC column order."""
        frame = pd.DataFrame({"alpha": self.alphas, "beta_bar": self.beta_bars})
        for key in ROC_COLUMNS[2:]:
            value = self.metadata.get(key)
            frame[key] = np.nan if value is None else value
        return frame[ROC_COLUMNS]


def roc_curve(delta_mu, sigma_z, alphas, epsilon=None, delta=None, s=None):
    """Evaluate the power of the detector over a grid of sizes.

    Parameters
    ----------
    delta_mu : float
        Impact of the attack, nonzero.
    sigma_z : float
        Noise scale.
    alphas : array_like
        Strictly increasing grid inside (0, 1).
    epsilon, delta, s : float, optional
        Mechanism parameters recorded in the curve metadata.

    Returns
    -------
    curve : RocCurve
    """
    alphas = check_strictly_increasing("alpha_grid", alphas)
    if alphas[0] <= 0.0 or alphas[-1] >= 1.0:
        raise DomainError("alpha_grid", "all sizes must lie in the open interval (0, 1)")
    beta_bars = power(alphas, delta_mu, sigma_z)
    metadata = dict(delta_mu=float(delta_mu), sigma_z=float(sigma_z), epsilon=epsilon, delta=delta, s=s)
    return RocCurve(alphas, beta_bars, metadata)


def roc_scenarios(s, multipliers):
    """Impacts delta_mu = m * s for each multiplier m, labelled against s.

    Returns
    -------
    scenarios : list of (str, float)
        ('gt', 'eq' or 'lt' for delta_mu greater than, equal to or less than
        s, followed by the multiplier) with the impact.
    """
    s = check_positive("s", s)
    scenarios = []
    for multiplier in multipliers:
        delta_mu = float(multiplier) * s
        if delta_mu == 0.0:
            raise DegenerateError("dmu", "a zero impact has no ROC curve")
        if abs(delta_mu) > s:
            relation = "gt"
        elif abs(delta_mu) == s:
            relation = "eq"
        else:
            relation = "lt"
        scenarios.append(("%s_%ss" % (relation, format_number(multiplier)), delta_mu))
    return scenarios

#=============================================================================================
# Monte Carlo validation
#=============================================================================================

MonteCarloRates = collections.namedtuple("MonteCarloRates", ["alpha_hat", "beta_bar_hat"])


def _block_sizes(trials, block_size):
    n_blocks = (trials + block_size - 1) // block_size
    return [min(block_size, trials - block * block_size) for block in range(n_blocks)]


def count_blocks(design, trials, stream, block_indices, block_size=DEFAULT_BLOCK_SIZE):
    """Count flagged trials under H0 and H1 for the given blocks.

    Block b draws H0 noise from stream.split(0).split(b) and H1 noise from
    stream.split(1).split(b), so its counts do not depend on which worker
    evaluates it.

    Returns
    -------
    counts : list of (int, int, int)
        (block index, false alarms under H0, detections under H1).
    """
    sizes = _block_sizes(trials, block_size)
    pair = design.pair
    h0_stream, h1_stream = stream.split(0), stream.split(1)

    counts = []
    for block in block_indices:
        m = sizes[block]
        z0 = pair.mu0 + pair.sigma_z * sample_std_normal(h0_stream.split(block), m)
        z1 = pair.mu1 + pair.sigma_z * sample_std_normal(h1_stream.split(block), m)
        counts.append((block, int(np.count_nonzero(_attack_mask(z0, design))), int(np.count_nonzero(_attack_mask(z1, design)))))
    return counts


@benchmark
def monte_carlo_rates(design, trials, stream, mpicomm=None, block_size=DEFAULT_BLOCK_SIZE):
    """Empirical size and power of a detector.

    Parameters
    ----------
    design : DetectorDesign
    trials : int
        Number of simulated observations under each hypothesis, >= 1.
    stream : RandomStream
    mpicomm : mpi4py communicator, optional
        Communicator (real or dummy) across which blocks are distributed.
    block_size : int, optional
        Trials per substream.  Changing it changes the draws.

    Returns
    -------
    rates : MonteCarloRates
        (alpha_hat, beta_bar_hat), the fractions of flagged trials under H0
        and H1.  Identical for every communicator size.
    """
    trials = int(trials)
    if trials < 1:
        raise DomainError("trials", "must be >= 1, got %d" % trials)
    if mpicomm is None:
        mpicomm = dummympi.COMM_WORLD

    n_blocks = len(_block_sizes(trials, block_size))
    my_blocks = range(mpicomm.rank, n_blocks, mpicomm.size)
    logger.debug("Node %d/%d simulating %d of %d blocks (%d trials)" % (mpicomm.rank, mpicomm.size, len(my_blocks), n_blocks, trials))

    gathered = mpicomm.allgather(count_blocks(design, trials, stream, my_blocks, block_size))
    counts = sorted(entry for node_counts in gathered for entry in node_counts)
    if [entry[0] for entry in counts] != list(range(n_blocks)):
        raise(RuntimeError("Monte Carlo blocks were lost or duplicated while gathering."))

    false_alarms = sum(entry[1] for entry in counts)
    detections = sum(entry[2] for entry in counts)
    return MonteCarloRates(false_alarms / float(trials), detections / float(trials))
