"""
Basic laboratory functionality initiated via a command
"""

import os

from conf import conf
from fraclab.exceptions import CalibrationMissingError
from fraclab.io.cache import CalibrationCache, calibration_key
from fraclab.io.reports import VerificationReport
import fraclab.logger


def requires_calibration(act_function):
    """
    Wrapper for `act` functions that need a calibrated Riesz constant.

    If the cache has no constant for the configured grid, a
    CalibrationMissingError is raised before any work is done.
    """
    def wrapper(self, config):
        spec = config.grid_spec(self.refine)
        if self.cache.get(spec) is None:
            # pylint: disable=protected-access
            self._logger.debug("No calibration for %s",
                               calibration_key(spec))
            raise CalibrationMissingError(calibration_key(spec))
        return act_function(self, config)
    wrapper.__doc__ = act_function.__doc__
    return wrapper


class Functionality():
    """
    Base class for implementing real functionality.
    """

    command = None
    report_file = conf.COMMAND_REPORT

    def __init__(self, refine=0, out=None, cache=None):
        """
        Initialize the functionality.

        :refine: Number of grid refinements applied to the configured grid
        :out: Output directory overriding the configured one
        :cache: CalibrationCache; the default location is used if omitted
        """
        self._logger = fraclab.logger.get_logger()
        self.refine = refine
        self.out = out
        self.cache = cache or CalibrationCache()

    def act(self, config):
        """
        Perform whatever actions this functionality needs and return a
        VerificationReport.
        """
        raise NotImplementedError("This command does not work yet.")

    def help(self):
        """
        Return a help string
        """
        # pylint: disable=no-self-use
        return "No instructions available for this command"

    def calibration_for(self, grid):
        """
        Return the cached RieszParams for a grid.
        """
        return self.cache.riesz_params(grid.spec)

    def _new_report(self, config):
        """
        Return an empty report for this command.
        """
        return VerificationReport(config.name, self.command,
                                  config.deterministic)

    def _output_dir(self, config):
        """
        Return the directory results are written to, None for no output.
        """
        return self.out or config.output

    def _finish(self, report, config):
        """
        Write the report into the output directory (if any) and return it.
        """
        directory = self._output_dir(config)
        if directory and self.report_file:
            if not os.path.isdir(directory):
                os.makedirs(directory)
            report.write(os.path.join(
                directory, self.report_file.format(command=self.command)))
        self._logger.info("%s finished for %s: %s", self.command,
                          config.name,
                          "passed" if report.passed else
                          f"failed {report.failures()}")
        return report
