import collections
import hashlib

import numpy as np

import logging
logger = logging.getLogger(__name__)


class DomainError(ValueError):
    """A precondition of a dplab operation was violated.

    Parameters
    ----------
    field : str
        Name of the offending input (used by the CLI error line).
    constraint : str
        Human-readable statement of the violated precondition.
    """
    def __init__(self, field, constraint):
        self.field = field
        self.constraint = constraint
        super(DomainError, self).__init__("%s: %s" % (field, constraint))


class DegenerateError(DomainError):
    """The two hypotheses (or distributions) coincide.

    `value` holds what the quantity degenerates to, e.g. the size alpha for
    the power of a test with zero impact, or 0 for Chernoff information.
    """
    def __init__(self, field, constraint, value=None):
        super(DegenerateError, self).__init__(field, constraint)
        self.value = value


class InfeasibleBound(DomainError):
    """The mutual-information constraint imposes no ceiling on the attack variance."""
    pass


def dict_to_named_tuple(options):
    named_tuple = collections.namedtuple("Parameters", sorted(options.keys()))(**options)
    return named_tuple


def merge_parameters(default_parameters, parameters):
    """Fill in missing user parameters with defaults.

    Parameters
    ----------
    default_parameters : dict
        Defaults declared by the caller.
    parameters : dict
        User-supplied parameters.  Keys set to None are treated as missing.

    Returns
    -------
    options : dict
        Defaults overridden by every non-None user value.  User keys with no
        default are kept, so subclasses can accept extra options.
    """
    options = {}
    for key in default_parameters:
        value = parameters.get(key)
        options[key] = default_parameters[key] if value is None else value

    for key in parameters.keys():
        if key not in options and parameters[key] is not None:
            options[key] = parameters[key]

    return options


def to_float(field, value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise DomainError(field, "must be a number, got %r" % (value,))


def check_integer(field, value, minimum):
    """Coerce an integral value (3 or 3.0, not 3.5 or "3") and bound it from below."""
    if isinstance(value, (bool, np.bool_, str)):
        raise DomainError(field, "must be an integer >= %d, got %r" % (minimum, value))
    number = to_float(field, value)
    if not np.isfinite(number) or number != int(number) or number < minimum:
        raise DomainError(field, "must be an integer >= %d, got %r" % (minimum, value))
    return int(number)


def check_finite(field, value):
    value = to_float(field, value)
    if not np.isfinite(value):
        raise DomainError(field, "must be finite, got %r" % value)
    return value


def check_positive(field, value):
    value = check_finite(field, value)
    if value <= 0.0:
        raise DomainError(field, "must be > 0, got %r" % value)
    return value


def check_open_unit(field, value):
    """Validate a probability strictly inside (0, 1)."""
    value = to_float(field, value)
    if np.isnan(value) or not (0.0 < value < 1.0):
        raise DomainError(field, "must lie in the open interval (0, 1), got %r" % value)
    return value


def check_strictly_increasing(field, values):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) == 0:
        raise DomainError(field, "must be a nonempty one-dimensional grid")
    if np.any(np.diff(values) <= 0.0):
        raise DomainError(field, "must be strictly increasing")
    return values


def format_number(value):
    """Shortest text for value that reads back to the same float.

    "%g" is used when it is exact (1 -> "1", 0.5 -> "0.5"), repr otherwise
    (1.0000001 -> "1.0000001" where "%g" would give "1").
    """
    value = float(value)
    text = "%g" % value
    if float(text) == value:
        return text
    return repr(value)


def sha256_file(filename, chunk_size=1 << 16):
    """Return the hex SHA-256 digest of a file."""
    digest = hashlib.sha256()
    with open(filename, 'rb') as handle:
        for chunk in iter(lambda: handle.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def all_subclasses(cls):
    """Lists all subclasses (including cls) of cls."""
    return [cls] + [g for s in cls.__subclasses__() for g in all_subclasses(s)]


def find_matching_subclass(cls, command):
    """Look for a subclass (or the base class) of cls whose `command` matches."""
    for sub in all_subclasses(cls):
        if getattr(sub, "command", None) == command:
            return sub
    raise(TypeError("Cannot find a %s subclass for command '%s'!" % (cls.__name__, command)))
