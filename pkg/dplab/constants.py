import numpy as np

LOG_2PI_E = np.log(2.0 * np.pi * np.e)  # entropy constant of a unit-variance Gaussian, doubled
LOG_2 = np.log(2.0)

DEFAULT_SEED = 20231017
SEED_ENVIRONMENT_VARIABLE = "DPLAB_SEED"

# Grids used by the experiment commands when nothing else is given.
VALIDATION_EPSILONS = [0.5, 1.0, 2.0, 4.0]
VALIDATION_IMPACTS = [2.0, 4.0, 8.0, 16.0]
VALIDATION_ALPHAS = [0.01, 0.05, 0.1, 0.3]
METRICS_EPSILONS = [0.25 * i for i in range(1, 21)]
METRICS_MULTIPLIERS = [2.0, 4.0]
ROC_SCENARIO_MULTIPLIERS = [2.0, 1.0, 0.5]  # impact greater than, equal to, less than s
ROC_ALPHA_GRID = [i / 200.0 for i in range(1, 200)]
VALIDATION_TRIALS = 10 ** 6
