"""
The acceptance battery over all experiments of a configuration
"""

from concurrent.futures import ThreadPoolExecutor
import os

from conf import conf
from fraclab.exceptions import FraclabError
from fraclab.functionality.base import Functionality
from fraclab.functionality.calibration import Calibrate
from fraclab.functionality.comparison import Comparison
from fraclab.functionality.convexity import Convexity
from fraclab.functionality.decay import Decay
from fraclab.functionality.solutions import Roundtrip, SMap
from fraclab.io.reports import CheckResult, VerificationReport

STEP_ANCHOR = "every step of the acceptance battery completes"


class Suite(Functionality):
    """
    Run calibrate, smap, roundtrip, convexity, comparison and decay for
    every experiment.
    """

    command = "suite"
    report_file = conf.SOLUTION_FILES["report"]
    steps = (Calibrate, SMap, Roundtrip, Convexity, Comparison, Decay)

    def act(self, config):
        """
        Run the experiments in `workers` threads and merge their reports.
        """
        report = self._new_report(config)
        variants = config.experiments()
        self._logger.info("Running %d experiments in %d workers",
                          len(variants), config.workers)
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            results = list(executor.map(
                lambda variant: self._run_experiment(variant, config),
                variants))
        for name, experiment_report in results:
            report.extend(experiment_report, prefix=name)
        return self._finish(report, config)

    def _run_experiment(self, variant, config):
        """
        Run all steps for one experiment; a failing step is recorded and the
        remaining steps still run.
        """
        report = VerificationReport(variant.name, self.command,
                                    variant.deterministic)
        directory = self._output_dir(config)
        if directory:
            directory = os.path.join(directory, variant.name)
        for step_class in self.steps:
            step = step_class(self.refine, directory, self.cache)
            try:
                report.extend(step.act(variant), prefix=step.command)
            except (FraclabError, ValueError) as error:
                self._logger.error("%s failed for %s: %s", step.command,
                                   variant.name, error)
                report.add(CheckResult(f"{step.command}/completed", False,
                                       None, None, STEP_ANCHOR,
                                       note=f"{type(error).__name__}: "
                                            f"{error}"))
        return variant.name, report

    def help(self):
        return ("Run the full acceptance battery for every experiment of the "
                "configuration")
