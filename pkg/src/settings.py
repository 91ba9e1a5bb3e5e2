# coding=utf-8

"""
This file is used to store project-wide global values.
"""
import os

# Tolerance used when validating and re-normalizing probability vectors
PROBABILITY_TOLERANCE = 1e-9

# Logarithmic scores clamp report entries to [LOG_CLAMP_EPSILON, 1] before taking logs
CLAMP_LOG_SCORES = True
LOG_CLAMP_EPSILON = 1e-12

# Minimum probability any action can receive from a decision rule (full support)
DECISION_RULE_FLOOR = 0.01
SOFTMAX_TEMPERATURE = 0.05

# Default liquidity of the LMSR cost function
DEFAULT_LIQUIDITY = 1.0

# Decision rule probability grid for the worst-case loss curves
WORST_CASE_PHI_START = 0.01
WORST_CASE_PHI_STOP = 0.99
WORST_CASE_PHI_STEP = 0.01

# Randomized verification defaults
VERIFY_MAX_ACTIONS = 4
VERIFY_MAX_OUTCOMES = 5
VERIFY_TRADE_RANGE = 3.0
VERIFY_TOLERANCE = 1e-9

MAX_NUMBER_OF_JOBS = 8
USE_PARALLEL_VERIFICATION = True

# Written with '%.17g' so identical runs give byte-identical files
CSV_FLOAT_FORMAT = '%.17g'

SCENARIO_SCHEMA_VERSION = 1

# One of: warning, info, debug, profile
LOG_LEVEL_ENV_VAR = 'DECISION_MARKETS_LOG_LEVEL'

# Enables various debug prints
DEBUG = False

# Enables profiling information to be shown
PROFILE = False


def apply_log_level_from_environment():
    # type: () -> str
    global DEBUG, PROFILE

    level = os.environ.get(LOG_LEVEL_ENV_VAR, 'info').strip().lower()

    if level not in ('warning', 'info', 'debug', 'profile'):
        raise ValueError('Unsupported log level in {}: {}'.format(LOG_LEVEL_ENV_VAR, level))

    DEBUG = level in ('debug', 'profile')
    PROFILE = level == 'profile'
    return level
