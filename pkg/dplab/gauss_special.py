#=============================================================================================
# MODULE DOCSTRING
#=============================================================================================

"""
Standard-normal special functions and reproducible Gaussian sampling.

DESCRIPTION

Everything else in dplab leans on four primitives:

* std_normal_pdf - the standard normal density
* q_function - the upper-tail probability Q(x) = Pr[Z > x]
* q_inverse - its inverse Q^{-1}(p)
* sample_std_normal - i.i.d. standard normal draws from a RandomStream

Q is evaluated through the complementary error function so that tail
probabilities keep full relative precision (naive 1 - CDF loses every
digit beyond x ~ 8).  Q^{-1} starts from a rational approximation and is
polished with two Newton steps on Q, which makes the roundtrip
Q(Q^{-1}(p)) = p hold to ~1e-16 regardless of the raw accuracy of the
starting point.

RandomStream is a value: a seed plus a spawn key.  Splitting it by an
integer index yields an independent, counter-addressable substream, so the
same trial block always sees the same numbers whichever worker draws it.

EXAMPLES

>>> q_function(0.0)
0.5
>>> round(q_inverse(0.05), 4)
1.6449
>>> stream = RandomStream(1)
>>> len(sample_std_normal(stream, 3))
3

"""

#=============================================================================================
# GLOBAL IMPORTS
#=============================================================================================

import numpy as np
from scipy import special

from dplab.utils import DomainError

import logging
logger = logging.getLogger(__name__)

#=============================================================================================
# MODULE CONSTANTS
#=============================================================================================

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_INV_SQRT_2 = 1.0 / np.sqrt(2.0)

# Rational approximation of the standard normal quantile (central and tail regions).
_A = [-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00]
_B = [-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01]
_C = [-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00]
_D = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00]
_P_LOW = 0.02425

_NEWTON_STEPS = 2

#=============================================================================================
# Special functions
#=============================================================================================


def _as_output(values, like):
    """Return a Python float for scalar input, an ndarray otherwise."""
    if np.ndim(like) == 0:
        return float(values)
    return values


def std_normal_pdf(x):
    """Standard normal density (2 pi)^(-1/2) exp(-x^2/2).

    Parameters
    ----------
    x : float or array_like
        Evaluation point(s).

    Returns
    -------
    density : float or np.ndarray
    """
    x_arr = np.asarray(x, dtype=np.float64)
    return _as_output(_INV_SQRT_2PI * np.exp(-0.5 * x_arr * x_arr), x)


def q_function(x):
    """Gaussian Q-function, Pr[Z > x] for a standard normal Z.

    Parameters
    ----------
    x : float or array_like
        Evaluation point(s).

    Returns
    -------
    q : float or np.ndarray
        Upper-tail probability.

    Notes
    -----
    For x >= 0 the tail is computed directly as erfc(x / sqrt(2)) / 2, which
    keeps full relative precision out to the underflow limit.  Negative
    arguments use the reflection Q(x) = 1 - Q(-x), which makes
    Q(x) + Q(-x) = 1 hold to the rounding of a single subtraction.
    """
    x_arr = np.asarray(x, dtype=np.float64)
    upper = 0.5 * special.erfc(np.abs(x_arr) * _INV_SQRT_2)
    q = np.where(x_arr >= 0.0, upper, 1.0 - upper)
    return _as_output(q, x)


def _rational_lower_quantile(p):
    """Initial guess for the standard normal quantile Phi^{-1}(p), p in (0, 1)."""
    z = np.empty_like(p)

    low = p < _P_LOW
    high = p > 1.0 - _P_LOW
    central = ~(low | high)

    if np.any(low):
        q = np.sqrt(-2.0 * np.log(p[low]))
        z[low] = (((((_C[0]*q + _C[1])*q + _C[2])*q + _C[3])*q + _C[4])*q + _C[5]) / \
                 ((((_D[0]*q + _D[1])*q + _D[2])*q + _D[3])*q + 1.0)
    if np.any(central):
        q = p[central] - 0.5
        r = q * q
        z[central] = (((((_A[0]*r + _A[1])*r + _A[2])*r + _A[3])*r + _A[4])*r + _A[5]) * q / \
                     (((((_B[0]*r + _B[1])*r + _B[2])*r + _B[3])*r + _B[4])*r + 1.0)
    if np.any(high):
        q = np.sqrt(-2.0 * np.log1p(-p[high]))
        z[high] = -(((((_C[0]*q + _C[1])*q + _C[2])*q + _C[3])*q + _C[4])*q + _C[5]) / \
                  ((((_D[0]*q + _D[1])*q + _D[2])*q + _D[3])*q + 1.0)
    return z


def q_inverse(p):
    """Inverse Q-function: the z-score with Q(z) = p.

    Parameters
    ----------
    p : float or array_like
        Tail probability (or probabilities) strictly inside (0, 1).

    Returns
    -------
    z : float or np.ndarray
        Standard normal quantile(s) with Pr[Z > z] = p.

    Raises
    ------
    DomainError
        If any p is outside the open interval (0, 1) or NaN.
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if np.any(np.isnan(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("p", "must lie in the open interval (0, 1)")

    # Q^{-1}(p) = -Phi^{-1}(p)
    z = -_rational_lower_quantile(p_arr)

    # Newton on f(z) = Q(z) - p, f'(z) = -pdf(z)
    for step in range(_NEWTON_STEPS):
        z = z + (q_function(z) - p_arr) / std_normal_pdf(z)

    if np.ndim(p) == 0:
        return float(z[0])
    return z

#=============================================================================================
# Reproducible sampling
#=============================================================================================


class RandomStream(object):
    """A splittable, counter-based source of random numbers.

    Parameters
    ----------
    seed : int
        Root entropy of the stream.
    key : tuple of int, optional
        Spawn key identifying the substream.  The root stream has key ().

    Notes
    -----
    A RandomStream never carries mutable state: every call to generator()
    starts the same Philox sequence, so equal streams yield equal draws.
    Use split(index) to obtain independent substreams, e.g. one per Monte
    Carlo block.

    Examples
    --------
    >>> root = RandomStream(7)
    >>> root.split(3) == RandomStream(7, (3,))
    True
    """
    def __init__(self, seed, key=()):
        seed = int(seed)
        if seed < 0:
            raise DomainError("seed", "must be a nonnegative integer, got %d" % seed)
        self.seed = seed
        self.key = tuple(int(k) for k in key)

    def split(self, index):
        """Return the independent substream number `index`."""
        if int(index) < 0:
            raise DomainError("index", "substream index must be nonnegative")
        return RandomStream(self.seed, self.key + (int(index),))

    def generator(self):
        """Return a fresh numpy Generator positioned at the start of this stream."""
        seed_sequence = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(seed_sequence))

    def __eq__(self, other):
        return isinstance(other, RandomStream) and (self.seed, self.key) == (other.seed, other.key)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.seed, self.key))

    def __repr__(self):
        return "RandomStream(seed=%d, key=%r)" % (self.seed, self.key)


def sample_std_normal(stream, count):
    """Draw `count` i.i.d. standard normal variates from `stream`.

    Parameters
    ----------
    stream : RandomStream
        Source of randomness; the result is a pure function of it.
    count : int
        Number of variates (>= 0).

    Returns
    -------
    z : np.ndarray, shape=(count,)
    """
    count = int(count)
    if count < 0:
        raise DomainError("count", "must be >= 0, got %d" % count)
    if count == 0:
        return np.zeros(0, dtype=np.float64)
    return stream.generator().standard_normal(count)
