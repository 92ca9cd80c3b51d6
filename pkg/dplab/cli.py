"""
Command-line entry point: dplab {calibrate,roc,validate,bounds,metrics}.

Parameters come from the experiment defaults, then a JSON file given with
--config, then flags; later sources win.  Exit codes: 0 on success, 1 when
the Monte Carlo validation fails, 2 when an input violates a precondition.

The detector is evaluated on z = Y - q(X), i.e. the noiseless query is
assumed known to the defender.
"""

import argparse
import json
import logging
import sys

from dplab import dummympi
from dplab.experiment import Experiment
from dplab.mechanism import CALIBRATION_MODES
from dplab.utils import DomainError
from dplab.version import version as __version__

logger = logging.getLogger(__name__)


EXIT_SUCCESS = 0
EXIT_ACCEPTANCE_FAILURE = 1
EXIT_VALIDATION_FAILURE = 2


def _add_budget_flags(parser):
    parser.add_argument("--eps", type=str, default=None, help="privacy loss(es) epsilon, comma separated")
    parser.add_argument("--delta", type=float, default=None, help="constant delta (overrides --delta-rule)")
    parser.add_argument("--delta-rule", dest="delta_rule", type=str, default=None, help="delta as a function of epsilon, e.g. eps/20")
    parser.add_argument("--s", type=float, default=None, help="L2 global sensitivity")


class DplabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors become DomainError, so they exit 2 with the usual error line."""

    def error(self, message):
        field, constraint = "arguments", message
        if message.startswith("argument "):
            option, _, constraint = message[len("argument "):].partition(": ")
            field = option.split("/")[0].lstrip("-").replace("-", "_")
        raise DomainError(field, constraint)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root seed (default: $DPLAB_SEED, then a fixed value)")
    common.add_argument("--out", type=str, default=None, help="output directory for CSV files and manifest.json")
    common.add_argument("--config", type=str, default=None, help="JSON file of parameters; flags override it")
    common.add_argument("--calibration-mode", dest="calibration_mode", choices=CALIBRATION_MODES, default=None)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    verbosity.add_argument("--quiet", action="store_true", help="log warnings and errors only")

    parser = DplabArgumentParser(prog="dplab", description="Gaussian-mechanism DP calibration, attack detection and divergence metrics")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command")
    sub.required = True

    calibrate = sub.add_parser("calibrate", parents=[common], help="noise scale sigma_z for (epsilon, delta, s)")
    _add_budget_flags(calibrate)

    roc = sub.add_parser("roc", parents=[common], help="analytic ROC curves of the attack detector")
    _add_budget_flags(roc)
    roc.add_argument("--dmu", type=str, default=None, help="attack impacts delta_mu, comma separated")
    roc.add_argument("--multipliers", type=str, default=None, help="impacts as multiples of s (default 2,1,0.5)")
    roc.add_argument("--alpha-grid", dest="alpha_grid", type=str, default=None, help="increasing sizes in (0, 1)")

    validate = sub.add_parser("validate", parents=[common], help="Monte Carlo check of size and power")
    _add_budget_flags(validate)
    validate.add_argument("--dmu", type=str, default=None, help="attack impacts delta_mu, comma separated")
    validate.add_argument("--alpha-grid", dest="alpha_grid", type=str, default=None, help="sizes in (0, 1)")
    validate.add_argument("--trials", type=int, default=None, help="trials per hypothesis")

    bounds = sub.add_parser("bounds", parents=[common], help="mutual-information bounds on the attack variance")
    bounds.add_argument("--n", type=int, default=None, help="number of records")
    bounds.add_argument("--sum-var", dest="sum_var", type=float, default=None, help="sum of record variances")
    bounds.add_argument("--dataset", type=str, default=None, help="one-column CSV (header value); overrides --n and --sum-var")
    bounds.add_argument("--record-variance", dest="record_variance", type=float, default=None, help="generative variance of each dataset record")
    bounds.add_argument("--s", type=float, default=None, help="L2 global sensitivity")
    bounds.add_argument("--s2", type=float, default=None, help="squared sensitivity (overrides --s)")
    bounds.add_argument("--sigma-z", dest="sigma_z", type=float, default=None, help="noise scale; with --eps and --delta implies s")
    bounds.add_argument("--eps", type=str, default=None)
    bounds.add_argument("--delta", type=float, default=None)
    bounds.add_argument("--attack-var", dest="attack_var", type=float, default=None, help="attack variance to evaluate")
    bounds.add_argument("--units", choices=("nats", "bits"), default=None)

    metrics = sub.add_parser("metrics", parents=[common], help="KL-DP versus Chernoff-DP compliance sweep")
    _add_budget_flags(metrics)
    metrics.add_argument("--multipliers", type=str, default=None, help="impacts as multiples of s (default 2,4)")

    return parser


def _load_config(filename):
    try:
        with open(filename) as handle:
            config = json.load(handle)
    except (IOError, OSError, ValueError) as error:
        raise DomainError("config", "cannot read JSON config %s (%s)" % (filename, error))
    if not isinstance(config, dict):
        raise DomainError("config", "JSON config must be an object of parameters")
    return config


def parameters_from_args(args):
    """Merge the --config file and the flags into one parameter dict."""
    parameters = {}
    if args.config is not None:
        parameters.update(_load_config(args.config))
    for key, value in vars(args).items():
        if key in ("command", "config", "verbose", "quiet") or value is None:
            continue
        parameters[key] = value
    return parameters


def _set_verbosity(args):
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.WARNING)


def _report(result, stream):
    stream.write(result.summary.to_string(index=False) + "\n")
    if result.command == "validate" and not result.passed:
        stream.write("FAILED: Monte Carlo estimates outside the binomial band\n")
    if result.command == "bounds" and (result.summary["status"] == "unbounded").any():
        stream.write("attack variance: unbounded (infeasible constraint)\n")


def main(argv=None, mpicomm=None):
    """Run one dplab command.

    Parameters
    ----------
    argv : list of str, optional
        Arguments without the program name; defaults to sys.argv[1:].
    mpicomm : mpi4py communicator, optional
        Defaults to mpi4py's COMM_WORLD when available.

    Returns
    -------
    exit_code : int
    """
    if mpicomm is None:
        mpicomm = dummympi.get_communicator()

    try:
        args = build_parser().parse_args(argv)
        _set_verbosity(args)
        experiment = Experiment.create(args.command, parameters_from_args(args), mpicomm=mpicomm)
        result = experiment.run()
    except DomainError as error:
        sys.stderr.write("error: %s: %s\n" % (error.field, error.constraint))
        return EXIT_VALIDATION_FAILURE

    if mpicomm.rank == 0:
        _report(result, sys.stdout)
    if not result.passed:
        return EXIT_ACCEPTANCE_FAILURE
    return EXIT_SUCCESS


if __name__ == "__main__":
    sys.exit(main())
