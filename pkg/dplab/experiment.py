import collections
import os

import numpy as np
import pandas as pd

from dplab import analysis, csv_io, dummympi
from dplab import detector, dp_metrics, info_bounds, mechanism
from dplab.constants import (DEFAULT_SEED, METRICS_EPSILONS, METRICS_MULTIPLIERS, VALIDATION_ALPHAS, VALIDATION_EPSILONS,
                             VALIDATION_IMPACTS, ROC_ALPHA_GRID, ROC_SCENARIO_MULTIPLIERS, SEED_ENVIRONMENT_VARIABLE,
                             VALIDATION_TRIALS)
from dplab.gauss_special import RandomStream
from dplab.timing import TimeContext
from dplab.utils import (DegenerateError, DomainError, InfeasibleBound, check_finite, check_integer, check_open_unit, check_positive,
                         check_strictly_increasing, dict_to_named_tuple, find_matching_subclass, format_number,
                         merge_parameters)

import logging
logger = logging.getLogger(__name__)


ExperimentResult = collections.namedtuple("ExperimentResult", ["command", "summary", "tables", "passed"])


def _float_list(field, value):
    """Coerce a scalar, a sequence or a comma-separated string to a list of finite floats."""
    if isinstance(value, str):
        value = [item for item in value.split(",") if item.strip()]
    elif np.ndim(value) == 0:
        value = [value]
    try:
        values = [check_finite(field, item) for item in value]
    except (TypeError, ValueError) as error:
        if isinstance(error, DomainError):
            raise
        raise DomainError(field, "expected a comma-separated list of numbers, got %r" % (value,))
    if len(values) == 0:
        raise DomainError(field, "must contain at least one value")
    return values


def _check_distinct(field, labels):
    seen = set()
    for label in labels:
        if label in seen:
            raise DomainError(field, "duplicate value %s would overwrite an output file" % label)
        seen.add(label)


def resolve_seed(seed=None):
    """The run seed: explicit value, else $DPLAB_SEED, else the package default."""
    if seed is None:
        seed = os.environ.get(SEED_ENVIRONMENT_VARIABLE)
        if seed is not None:
            logger.debug("Using seed from $%s" % SEED_ENVIRONMENT_VARIABLE)
    if seed is None:
        return DEFAULT_SEED
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise DomainError("seed", "must be a nonnegative integer, got %r" % (seed,))
    if seed < 0:
        raise DomainError("seed", "must be a nonnegative integer, got %d" % seed)
    return seed


class Experiment(object):
    """Base class of the dplab experiment commands.

    Parameters
    ----------
    parameters : dict, optional
        User parameters; missing or None entries take the values in
        `default_parameters`.
    database : csv_io.CSVDatabase, optional
        Where to write tables.  None runs the experiment without writing.
    mpicomm : mpi4py communicator, optional
        Communicator for parallel Monte Carlo.  Defaults to a single rank.

    Notes
    -----
    Subclasses set `command`, extend `default_parameters` and implement
    `_validate_parameters` and `_run`.  Use Experiment.create() to look up
    the subclass for a command.
    """
    command = None

    default_parameters = {}
    default_parameters["seed"] = None
    default_parameters["out"] = None
    default_parameters["calibration_mode"] = mechanism.DEFAULT_CALIBRATION_MODE

    def __init__(self, parameters={}, database=None, mpicomm=None):
        self.mpicomm = dummympi.COMM_WORLD if mpicomm is None else mpicomm
        self.database = database

        options = self.process_parameters(parameters)
        options = self._validate_parameters(options)
        self.parameters = dict_to_named_tuple(options)  # Convert to namedtuple for const-ness
        if self.database is not None:
            self.attach_database(self.database)

        logger.debug("Initialized %s on node %d / %d" % (self.command, self.mpicomm.rank, self.mpicomm.size))

    def attach_database(self, database):
        """Write tables to `database` and record the validated parameters in it."""
        self.database = database
        self.database.store_parameters(self.parameters._asdict())

    def process_parameters(self, parameters):
        """Fill in missing parameters with `default_parameters` and resolve the seed.

        Returns
        -------
        options : dict
        """
        options = merge_parameters(self.default_parameters, parameters)
        options["seed"] = resolve_seed(options.get("seed"))
        return options

    def _validate_parameters(self, options):
        """Check and normalise options before the run; raise DomainError on violation."""
        if options["calibration_mode"] not in mechanism.CALIBRATION_MODES:
            raise DomainError("calibration_mode", "must be one of %s, got %r" % ("|".join(mechanism.CALIBRATION_MODES), options["calibration_mode"]))
        if options["out"] is not None and not isinstance(options["out"], str):
            raise DomainError("out", "must be a directory path, got %r" % (options["out"],))
        return options

    @classmethod
    def create(cls, command, parameters={}, mpicomm=None):
        """Create the experiment for `command`, bound to a CSV database if `out` is set.

        The output directory is only created once the parameters are valid.

        Parameters
        ----------
        command : str
            One of calibrate, roc, validate, bounds, metrics.
        parameters : dict, optional
        mpicomm : mpi4py communicator, optional
        """
        subcls = find_matching_subclass(cls, command)
        experiment = subcls(parameters, mpicomm=mpicomm)
        out = experiment.parameters.out
        if out is not None and experiment.mpicomm.rank == 0:
            experiment.attach_database(csv_io.CSVDatabase(out, command))
        return experiment

    def run(self):
        """Run the experiment and write its tables and manifest.

        Returns
        -------
        result : ExperimentResult
        """
        logger.info("Running %s" % self.command)
        with TimeContext(self.command):
            summary, tables, passed = self._run()
        self._finalize(tables)
        return ExperimentResult(self.command, summary, tables, passed)

    def _run(self):
        raise(NotImplementedError("Experiment subclasses must implement _run()."))

    def _finalize(self, tables):
        if self.database is None or self.mpicomm.rank != 0:
            return
        for name, frame in tables.items():
            self.database.write(name, frame)
        self.database._finalize()


class BudgetGridMixin(object):
    """Shared handling of the epsilon grid and the delta rule."""

    def _validate_budget_grid(self, options):
        options["eps"] = _float_list("eps", options["eps"])
        if options.get("delta") is not None:
            options["delta"] = check_finite("delta", options["delta"])
        rule = self._delta_rule(options)
        # every (epsilon, delta) must form a valid budget
        for epsilon in options["eps"]:
            mechanism.PrivacyBudget(epsilon, rule(epsilon))
        return options

    @staticmethod
    def _delta_rule(options):
        if options.get("delta") is not None:
            return dp_metrics.delta_rule(float(options["delta"]))
        return dp_metrics.delta_rule(options["delta_rule"])

    def budgets(self):
        rule = self._delta_rule(self.parameters._asdict())
        return [mechanism.PrivacyBudget(epsilon, rule(epsilon)) for epsilon in self.parameters.eps]


class CalibrateExperiment(BudgetGridMixin, Experiment):
    """Noise scale of the Gaussian mechanism for each epsilon."""
    command = "calibrate"

    default_parameters = dict(Experiment.default_parameters)
    default_parameters["eps"] = [1.0]
    default_parameters["delta"] = None
    default_parameters["delta_rule"] = dp_metrics.DEFAULT_DELTA_RULE
    default_parameters["s"] = 4.0

    def _validate_parameters(self, options):
        options = Experiment._validate_parameters(self, options)
        options["s"] = check_positive("s", options["s"])
        return self._validate_budget_grid(options)

    def _run(self):
        mode = self.parameters.calibration_mode
        alternate = [other for other in mechanism.CALIBRATION_MODES if other != mode][0]
        rows = []
        for budget in self.budgets():
            sigma_z = mechanism.calibrate_noise(budget, self.parameters.s, mode)
            rows.append((budget.epsilon, budget.delta, self.parameters.s, mode, sigma_z, sigma_z ** 2,
                         alternate, mechanism.calibrate_noise(budget, self.parameters.s, alternate)))
        table = pd.DataFrame(rows, columns=["epsilon", "delta", "s", "calibration_mode", "sigma_z", "sigma_z2",
                                            "alternate_mode", "sigma_z_alternate"])
        return table, collections.OrderedDict([("calibrate.csv", table)]), True


class RocExperiment(BudgetGridMixin, Experiment):
    """Analytic ROC curves, one file per (epsilon, impact scenario)."""
    command = "roc"

    default_parameters = dict(Experiment.default_parameters)
    default_parameters["eps"] = VALIDATION_EPSILONS
    default_parameters["delta"] = None
    default_parameters["delta_rule"] = dp_metrics.DEFAULT_DELTA_RULE
    default_parameters["s"] = 4.0
    default_parameters["dmu"] = None  # explicit impacts; overrides multipliers
    default_parameters["multipliers"] = ROC_SCENARIO_MULTIPLIERS
    default_parameters["alpha_grid"] = ROC_ALPHA_GRID

    def _validate_parameters(self, options):
        options = Experiment._validate_parameters(self, options)
        options["s"] = check_positive("s", options["s"])
        options["multipliers"] = _float_list("multipliers", options["multipliers"])
        if options["dmu"] is not None:
            options["dmu"] = _float_list("dmu", options["dmu"])
        options["alpha_grid"] = _float_list("alpha_grid", options["alpha_grid"])
        grid = check_strictly_increasing("alpha_grid", options["alpha_grid"])
        if grid[0] <= 0.0 or grid[-1] >= 1.0:
            raise DomainError("alpha_grid", "all sizes must lie in the open interval (0, 1)")
        options = self._validate_budget_grid(options)
        # one output file per (epsilon, scenario)
        _check_distinct("eps", [format_number(epsilon) for epsilon in options["eps"]])
        _check_distinct("multipliers" if options["dmu"] is None else "dmu", [label for label, _ in self._scenarios(options)])
        return options

    @staticmethod
    def _scenarios(options):
        if options["dmu"] is None:
            return detector.roc_scenarios(options["s"], options["multipliers"])
        scenarios = []
        for delta_mu in options["dmu"]:
            if delta_mu == 0.0:
                raise DegenerateError("dmu", "a zero impact has no ROC curve")
            scenarios.append(("dmu_%s" % format_number(delta_mu), delta_mu))
        return scenarios

    def _run(self):
        s = self.parameters.s
        scenarios = self._scenarios(self.parameters._asdict())
        tables = collections.OrderedDict()
        summary = []
        for budget in self.budgets():
            sigma_z = mechanism.calibrate_noise(budget, s, self.parameters.calibration_mode)
            for label, delta_mu in scenarios:
                curve = detector.roc_curve(delta_mu, sigma_z, self.parameters.alpha_grid,
                                           epsilon=budget.epsilon, delta=budget.delta, s=s)
                name = "roc_eps%s_%s.csv" % (format_number(budget.epsilon), label)
                tables[name] = curve.to_frame()
                summary.append((budget.epsilon, budget.delta, sigma_z, label, delta_mu, curve.area(), name))
        if self.database is None:
            logger.warning("No output directory given; %d ROC curves computed but not written." % len(tables))
        summary = pd.DataFrame(summary, columns=["epsilon", "delta", "sigma_z", "scenario", "delta_mu", "area", "file"])
        return summary, tables, True


class ValidateExperiment(BudgetGridMixin, Experiment):
    """Monte Carlo size and power against the analytic values."""
    command = "validate"

    default_parameters = dict(Experiment.default_parameters)
    default_parameters["eps"] = VALIDATION_EPSILONS
    default_parameters["delta"] = None
    default_parameters["delta_rule"] = dp_metrics.DEFAULT_DELTA_RULE
    default_parameters["s"] = 4.0
    default_parameters["dmu"] = VALIDATION_IMPACTS
    default_parameters["alpha_grid"] = VALIDATION_ALPHAS
    default_parameters["trials"] = VALIDATION_TRIALS
    default_parameters["n_sigma"] = 3.0
    default_parameters["block_size"] = detector.DEFAULT_BLOCK_SIZE

    def _validate_parameters(self, options):
        options = Experiment._validate_parameters(self, options)
        options["s"] = check_positive("s", options["s"])
        options["dmu"] = _float_list("dmu", options["dmu"])
        options["alpha_grid"] = _float_list("alpha_grid", options["alpha_grid"])
        for alpha in options["alpha_grid"]:
            check_open_unit("alpha_grid", alpha)
        options["trials"] = check_integer("trials", options["trials"], 1)
        options["block_size"] = check_integer("block_size", options["block_size"], 1)
        options["n_sigma"] = check_positive("n_sigma", options["n_sigma"])
        if options["trials"] < analysis.LOW_POWER_TRIALS:
            logger.warning("Only %d trials per hypothesis (< %d): bands are wide and the check has low power." % (options["trials"], analysis.LOW_POWER_TRIALS))
        return self._validate_budget_grid(options)

    def analytic_power(self, alpha, delta_mu, sigma_z):
        """Power the Monte Carlo estimate is checked against."""
        return detector.power(alpha, delta_mu, sigma_z)

    def _run(self):
        p = self.parameters
        # Every design sees the same draws, so grid rows share their sampling error.
        stream = RandomStream(p.seed)
        rows = []
        for budget in self.budgets():
            sigma_z = mechanism.calibrate_noise(budget, p.s, p.calibration_mode)
            for delta_mu in p.dmu:
                for alpha in p.alpha_grid:
                    design = detector.DetectorDesign.create(delta_mu, sigma_z, alpha)
                    rates = detector.monte_carlo_rates(design, p.trials, stream, mpicomm=self.mpicomm, block_size=p.block_size)
                    rows.append(dict(epsilon=budget.epsilon, delta=budget.delta, delta_mu=delta_mu, sigma_z=sigma_z,
                                     alpha=alpha, beta_bar=self.analytic_power(alpha, delta_mu, sigma_z),
                                     alpha_hat=rates.alpha_hat, beta_bar_hat=rates.beta_bar_hat))
        table = analysis.validation_table(rows, p.trials, p.n_sigma)
        passed = bool(table["passed"].all())
        logger.info("%d / %d Monte Carlo rows within the %.1f-sigma band" % (int(table["passed"].sum()), len(table), p.n_sigma))
        return table, collections.OrderedDict([("validate.csv", table)]), passed


class BoundsExperiment(Experiment):
    """Mutual-information expansions, sensitivity floor and attack-variance ceiling.

    The population statistics come from `n` and `sum_var`, or from a
    one-column `dataset` CSV whose records all have variance
    `record_variance`.  Information is reported in nats and bits; `units`
    picks which of the two fills the `value` column.
    """
    command = "bounds"

    BOUNDS_COLUMNS = ["quantity", "value", "log_value", "units", "nats", "bits", "status"]

    default_parameters = dict(Experiment.default_parameters)
    default_parameters["n"] = 1
    default_parameters["sum_var"] = 4.0
    default_parameters["dataset"] = None  # overrides n and sum_var
    default_parameters["record_variance"] = None
    default_parameters["s"] = 4.0
    default_parameters["s2"] = None  # overrides s
    default_parameters["sigma_z"] = None  # with eps and delta, overrides s and s2
    default_parameters["eps"] = [1.0]
    default_parameters["delta"] = 0.05
    default_parameters["attack_var"] = None
    default_parameters["units"] = "nats"

    def _validate_parameters(self, options):
        options = Experiment._validate_parameters(self, options)
        if options["units"] not in ("nats", "bits"):
            raise DomainError("units", "must be nats or bits, got %r" % (options["units"],))
        if options["dataset"] is not None:
            if options["record_variance"] is None:
                raise DomainError("record_variance", "is required with a dataset (the generative variance is not estimated from the records)")
            data = mechanism.load_dataset_csv(options["dataset"], options["record_variance"])
            stats = info_bounds.PopulationStats.from_dataset(data)
            logger.info("Population statistics from %s: n = %d, sum_var = %g" % (options["dataset"], stats.n, stats.sum_var))
            options["record_variance"] = float(data.record_variances[0])
        else:
            stats = info_bounds.PopulationStats(options["n"], options["sum_var"])
        options["n"], options["sum_var"] = stats.n, stats.sum_var
        for field in ("s", "s2", "sigma_z", "attack_var"):
            if options[field] is not None:
                options[field] = check_positive(field, options[field])
        options["eps"] = _float_list("eps", options["eps"])
        if options["sigma_z"] is not None:
            mechanism.PrivacyBudget(options["eps"][0], options["delta"])
        return options

    def _information_row(self, quantity, nats, status="ok"):
        bits = info_bounds.nats_to_bits(nats)
        value = bits if self.parameters.units == "bits" else nats
        return (quantity, value, np.nan, self.parameters.units, nats, bits, status)

    def _run(self):
        p = self.parameters
        stats = info_bounds.PopulationStats(p.n, p.sum_var)

        if p.sigma_z is not None:
            budget = mechanism.PrivacyBudget(p.eps[0], p.delta)
            s = np.sqrt(mechanism.sensitivity_squared_from_noise(p.sigma_z, budget, p.calibration_mode))
            compute_ceiling = lambda: info_bounds.ceiling_from_budget(stats, p.sigma_z, budget, p.calibration_mode)
        else:
            s = np.sqrt(p.s2) if p.s2 is not None else p.s
            compute_ceiling = lambda: info_bounds.attack_variance_ceiling(stats, s)

        rows = [("n", stats.n, np.log(stats.n), "records", np.nan, np.nan, "ok"),
                ("sum_var", stats.sum_var, stats.log_sum_var, "query_units^2", np.nan, np.nan, "ok"),
                ("sensitivity", s, np.log(s), "query_units", np.nan, np.nan, "ok"),
                self._information_row("mi_second_expansion", info_bounds.mi_second_expansion(stats, s))]

        try:
            ceiling = compute_ceiling()
        except InfeasibleBound as error:
            logger.warning("Attack variance is unbounded: %s" % error.constraint)
            ceiling = None
            rows.append(("attack_variance_ceiling", np.inf, np.inf, "query_units^2", np.nan, np.nan, "unbounded"))
        else:
            rows.append(("attack_variance_ceiling", ceiling.sigma2_xa, ceiling.log_sigma2_xa, "query_units^2", np.nan, np.nan, "ok"))

        attack = ceiling if p.attack_var is None else info_bounds.AttackVariance.from_value(p.attack_var)
        if attack is None:
            rows.append(self._information_row("mi_first_expansion", np.nan, "unbounded"))
            rows.append(("sensitivity_lower_bound", np.nan, np.nan, "query_units", np.nan, np.nan, "unbounded"))
        else:
            s_min = info_bounds.sensitivity_lower_bound(stats, attack)
            rows.append(self._information_row("mi_first_expansion", info_bounds.mi_first_expansion(stats, attack)))
            rows.append(("sensitivity_lower_bound", s_min.value, s_min.log_value, "query_units", np.nan, np.nan, "ok"))

        table = pd.DataFrame(rows, columns=self.BOUNDS_COLUMNS)
        return table, collections.OrderedDict([("bounds.csv", table)]), True


class MetricsExperiment(BudgetGridMixin, Experiment):
    """KL-DP versus Chernoff-DP compliance over (epsilon, impact)."""
    command = "metrics"

    default_parameters = dict(Experiment.default_parameters)
    default_parameters["eps"] = METRICS_EPSILONS
    default_parameters["delta"] = None
    default_parameters["delta_rule"] = dp_metrics.DEFAULT_DELTA_RULE
    default_parameters["s"] = 4.0
    default_parameters["multipliers"] = METRICS_MULTIPLIERS

    def _validate_parameters(self, options):
        options = Experiment._validate_parameters(self, options)
        options["s"] = check_positive("s", options["s"])
        options["multipliers"] = _float_list("multipliers", options["multipliers"])
        return self._validate_budget_grid(options)

    def _run(self):
        p = self.parameters
        table = dp_metrics.figure1_sweep(p.s, p.eps, p.multipliers, self._delta_rule(p._asdict()), p.calibration_mode)

        summary = []
        for delta_mu, (kl_set, chernoff_set) in sorted(analysis.compliance_sets(table).items()):
            only = chernoff_set - kl_set
            summary.append((delta_mu, len(kl_set), len(chernoff_set), len(only), min(only) if only else np.nan))
        summary = pd.DataFrame(summary, columns=["delta_mu", "kl_complies", "chernoff_complies", "chernoff_only", "min_chernoff_only_eps"])
        return summary, collections.OrderedDict([("metrics.csv", table)]), True
