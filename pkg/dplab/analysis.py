import numpy as np
import pandas as pd
from scipy import integrate

import logging
logger = logging.getLogger(__name__)


LOW_POWER_TRIALS = 10 ** 4  # below this many trials validation bands are too wide to be informative


class CurveAnalyzer(object):
    """A MixIn class giving structural checks to ROC curves.

    The host class must expose `alphas` and `beta_bars` as equal-length
    arrays, with alphas strictly increasing.
    """

    def is_nondecreasing(self, atol=0.0):
        """True if beta_bar never decreases along the alpha grid."""
        return bool(np.all(np.diff(self.beta_bars) >= -atol))

    def dominates(self, other, atol=0.0):
        """True if this curve lies pointwise on or above `other`.

        Parameters
        ----------
        other : CurveAnalyzer
            A curve evaluated on the same alpha grid.
        atol : float, default=0
            Slack allowed for rounding.
        """
        if len(self.alphas) != len(other.alphas) or np.any(self.alphas != other.alphas):
            raise(ValueError("Curves must share the same alpha grid to be compared."))
        return bool(np.all(self.beta_bars >= other.beta_bars - atol))

    def above_diagonal(self, atol=0.0):
        """True if the detector never does worse than guessing (beta_bar >= alpha)."""
        return bool(np.all(self.beta_bars >= self.alphas - atol))

    def area(self):
        """Trapezoidal area under the curve over the evaluated alpha range."""
        return float(integrate.trapezoid(self.beta_bars, self.alphas))


def binomial_band(p, trials, n_sigma=3.0):
    """Half-width of the n_sigma band of a binomial proportion.

    Parameters
    ----------
    p : float or array_like
        True success probability.
    trials : int
        Number of Bernoulli trials.
    n_sigma : float, default=3
        Band half-width in standard errors.
    """
    p = np.asarray(p, dtype=np.float64)
    return n_sigma * np.sqrt(p * (1.0 - p) / float(trials))


def validation_table(rows, trials, n_sigma=3.0):
    """Assemble Monte Carlo versus analytic rates into a pass/fail table.

    Parameters
    ----------
    rows : list of dict
        Each with keys epsilon, delta, delta_mu, sigma_z, alpha, beta_bar,
        alpha_hat, beta_bar_hat.
    trials : int
        Trials per hypothesis used for every row.
    n_sigma : float, default=3

    Returns
    -------
    table : pd.DataFrame
        The input columns plus alpha_band, beta_bar_band and passed.
    """
    table = pd.DataFrame(rows, columns=["epsilon", "delta", "delta_mu", "sigma_z", "alpha", "beta_bar", "alpha_hat", "beta_bar_hat"])
    table["alpha_band"] = binomial_band(table["alpha"].values, trials, n_sigma)
    table["beta_bar_band"] = binomial_band(table["beta_bar"].values, trials, n_sigma)
    alpha_ok = np.abs(table["alpha_hat"] - table["alpha"]) <= table["alpha_band"]
    beta_ok = np.abs(table["beta_bar_hat"] - table["beta_bar"]) <= table["beta_bar_band"]
    table["passed"] = alpha_ok & beta_ok

    n_failed = int((~table["passed"]).sum())
    if n_failed > 0:
        logger.warning("%d / %d Monte Carlo rows fall outside the %.1f-sigma binomial band." % (n_failed, len(table), n_sigma))
    return table


def compliance_sets(table):
    """Epsilons at which KL-DP and Chernoff-DP comply, per impact.

    Parameters
    ----------
    table : pd.DataFrame
        A metric sweep with columns epsilon, delta_mu, kl_complies and
        chernoff_complies.

    Returns
    -------
    sets : dict
        delta_mu -> (set of epsilons where KL complies,
                     set of epsilons where Chernoff complies)
    """
    sets = {}
    for delta_mu, group in table.groupby("delta_mu", sort=True):
        kl = set(group.loc[group["kl_complies"], "epsilon"])
        chernoff = set(group.loc[group["chernoff_complies"], "epsilon"])
        sets[delta_mu] = (kl, chernoff)
    return sets


def chernoff_only_epsilons(table):
    """Rows where Chernoff-DP complies but KL-DP does not."""
    mask = table["chernoff_complies"] & ~table["kl_complies"]
    return table.loc[mask, ["epsilon", "delta_mu"]]
