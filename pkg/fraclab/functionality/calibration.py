"""
Calibration of the Riesz constant for a configured grid
"""

from conf import numerics
from fraclab.functionality.base import Functionality
from fraclab.io.reports import CheckResult
from fraclab.potential import calibrate_alpha
from fraclab.weighted_grid import build_grid, sphere_area

POSITIVITY_ANCHOR = "the Riesz constant alpha_(N+1+a) is positive"
SPREAD_ANCHOR = ("alpha is such that v = alpha sum(-2 lambda) "
                 "|x - y|^-(N-1+a) represents the correction")
NEWTONIAN_ANCHOR = ("for a = 0 the kernel is the Newtonian fundamental "
                    "solution of R^(N+1)")
SELF_CONVERGENCE_ANCHOR = "alpha depends on the discretization only weakly"


def newtonian_alpha(dimension_N):
    """
    Return 1 / ((N - 1) |S^N|), the Newtonian constant of R^(N+1) for the
    kernel |x|^-(N-1); None for N = 1.
    """
    if dimension_N < 2:
        return None
    return 1 / ((dimension_N - 1) * sphere_area(dimension_N + 1))


class Calibrate(Functionality):
    """
    Calibrate alpha on the configured grid and store it in the cache.
    """

    command = "calibrate"

    def act(self, config):
        """
        Calibrate on the configured grid and, with refinement enabled, on
        its refinement too; both results are cached.
        """
        report = self._new_report(config)
        source_radius = config.numerics("calibration_source_radius")
        levels = [self.refine]
        if config.numerics("refine_levels"):
            levels.append(self.refine + 1)

        results = []
        for level in levels:
            grid = build_grid(config.grid_spec(level))
            result = calibrate_alpha(grid, source_radius)
            self.cache.store(result)
            results.append(result)
            prefix = f"refine{level}/"
            report.add(CheckResult(prefix + "alpha_positive",
                                   result.alpha > 0, result.alpha, 0.0,
                                   POSITIVITY_ANCHOR,
                                   runtime=result.runtime))
            report.add(CheckResult(prefix + "calibration_spread",
                                   result.spread
                                   <= numerics.CALIBRATION_SPREAD_MAX,
                                   result.spread,
                                   numerics.CALIBRATION_SPREAD_MAX,
                                   SPREAD_ANCHOR,
                                   note=f"{result.probes} probes"))
            exact = newtonian_alpha(config.dimension_N)
            if config.weight_a == 0 and exact is not None:
                deviation = abs(result.alpha - exact) / exact
                report.add(CheckResult(prefix + "newtonian_constant",
                                       deviation <= 0.05, deviation, 0.05,
                                       NEWTONIAN_ANCHOR,
                                       note=f"exact value {exact:.8g}"))
            report.details[f"refine{level}"] = result.to_dict()

        if len(results) > 1:
            change = abs(results[1].alpha - results[0].alpha) / \
                abs(results[0].alpha)
            report.add(CheckResult("self_convergence", change <= 0.02,
                                   change, 0.02, SELF_CONVERGENCE_ANCHOR))
        return self._finish(report, config)

    def help(self):
        return ("Calibrate the Riesz constant alpha for the configured N, a "
                "and grid and store it in the calibration cache")
