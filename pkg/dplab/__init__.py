"""dplab: Gaussian-mechanism differential privacy seen from the attacker's side.

Calibrates the noise of the Gaussian mechanism, designs the likelihood-ratio
detector that tells an injected record from plain noise (thresholds, power,
ROC curves, Monte Carlo validation), bounds the variance an attacker can
inject via mutual-information arguments, and compares KL-DP with
Chernoff-DP.
"""

from dplab.gauss_special import RandomStream, q_function, q_inverse, sample_std_normal
from dplab.mechanism import Dataset, PrivacyBudget, calibrate_noise, release
from dplab.detector import DetectorDesign, HypothesisPair, power, roc_curve
from dplab.info_bounds import AttackVariance, PopulationStats, attack_variance_ceiling
from dplab.dp_metrics import GaussianModel, PriorWeight, chernoff_information, kl_gaussians
from dplab.experiment import Experiment
from dplab.utils import DegenerateError, DomainError, InfeasibleBound
from dplab.version import version as __version__


def _set_logging():
    """Set the logging based on comm.rank.

    Notes
    -----
    This function will be hidden from the namespace.
    """
    import logging
    from dplab import dummympi
    if dummympi.get_communicator().rank == 0:
        logging.basicConfig(level=logging.INFO)
    else:  # By default, silence output from worker nodes
        logging.basicConfig(level=logging.ERROR)

_set_logging()
