"""
General configuration.
"""

import os

# Version of the machine-readable report layout written by the commands
REPORT_SCHEMA_VERSION = 1

# Exit codes of the command line interface
EXIT_SUCCESS = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIGURATION_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3

# Logging configuration, read by fraclab.logger
LOGGING_CONF = os.path.join(os.path.dirname(__file__), "logging.conf")
LOG_DIR = "logs"

# Calibration cache. The environment variable overrides the default location.
CACHE_ENV_VAR = "FRACLAB_CACHE"
DEFAULT_CACHE_PATH = os.path.join(
    os.path.expanduser("~"), ".cache", "fraclab", "calibration.json")

# File names of a persisted global solution
SOLUTION_FILES = {
    "config": "config.json",
    "u": "u.bin",
    "v": "v.bin",
    "mask": "mask.csv",
    "density": "lambda.csv",
    "report": "report.json",
    }

# Report of a single command, written next to a persisted solution
COMMAND_REPORT = "{command}_report.json"
