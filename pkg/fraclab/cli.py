"""
Command line interface: fraclab <command> --config <path> [options]
"""

import sys

import click

from conf import conf
from fraclab.exceptions import (
        ConfigurationError,
        FraclabError,
        NumericalFailure,
        )
from fraclab.functionality.calibration import Calibrate
from fraclab.functionality.comparison import Comparison
from fraclab.functionality.convexity import Convexity
from fraclab.functionality.decay import Decay
from fraclab.functionality.solutions import Invert, Roundtrip, SMap, Solve
from fraclab.functionality.suite import Suite
from fraclab.io.config import ExperimentConfig
import fraclab.logger

COMMANDS = {
    "calibrate": Calibrate,
    "solve": Solve,
    "smap": SMap,
    "invert": Invert,
    "roundtrip": Roundtrip,
    "convexity": Convexity,
    "comparison": Comparison,
    "decay": Decay,
    "suite": Suite,
    }


def exit_code(error):
    """
    Return the exit code for an exception raised by a command.
    """
    if isinstance(error, NumericalFailure):
        return conf.EXIT_NUMERICAL_FAILURE
    if isinstance(error, (ConfigurationError, ValueError)):
        return conf.EXIT_CONFIGURATION_ERROR
    return conf.EXIT_NUMERICAL_FAILURE


def run_command(command, config_path, out=None, refine=0, seed=None,
                deterministic=False):
    """
    Run a command and return the process exit code.

    :command: Key of COMMANDS
    :config_path: YAML or JSON experiment configuration
    :out: Output directory overriding the configured one
    :refine: Number of grid refinements
    :seed: Seed overriding the configured one
    :deterministic: Force the deterministic mode
    """
    # pylint: disable=too-many-arguments
    logger = fraclab.logger.get_logger()
    try:
        config = ExperimentConfig.from_file(config_path)
        config = config.with_overrides(seed=seed,
                                       deterministic=deterministic or None)
        functionality = COMMANDS[command](refine=refine, out=out)
        report = functionality.act(config)
    except (FraclabError, ValueError) as error:
        logger.error("%s failed: %s", command, error)
        click.echo(f"{type(error).__name__}: {error}", err=True)
        return exit_code(error)

    for entry in sorted(report.entries, key=lambda entry: entry.name):
        click.echo(f"{'PASS' if entry.passed else 'FAIL'}  {entry.name}")
    missing = report.missing_anchors()
    if missing:
        click.echo(f"Checks without an anchor: {missing}", err=True)
    if report.passed:
        return conf.EXIT_SUCCESS
    return conf.EXIT_CHECK_FAILURE


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("command", type=click.Choice(sorted(COMMANDS)))
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment configuration (YAML or JSON)")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Output directory")
@click.option("--refine", type=click.IntRange(min=0), default=0,
              help="Refine the configured grid this many times")
@click.option("--seed", type=int, default=None,
              help="Seed of the randomized checks")
@click.option("--deterministic", is_flag=True, default=False,
              help="Bit-identical reports: no timestamps or runtimes, "
                   "correctly rounded sums")
def main(command, config_path, out, refine, seed, deterministic):
    """
    Numerical laboratory for global solutions of the thin obstacle problem.

    COMMAND is one of calibrate, solve, smap, invert, roundtrip, convexity,
    comparison, decay and suite.
    """
    # pylint: disable=too-many-arguments
    sys.exit(run_command(command, config_path, out, refine, seed,
                         deterministic))

