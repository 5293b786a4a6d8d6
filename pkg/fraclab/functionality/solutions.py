"""
Commands computing, persisting and inverting global solutions
"""

import os

import numpy as np

from conf import conf
from fraclab.exceptions import ConfigurationError
from fraclab.functionality.base import Functionality, requires_calibration
from fraclab.io.fields import FieldFileIO
from fraclab.io.persistence import load_solution, save_solution
from fraclab.io.reports import CheckResult
from fraclab.obstacle_solver import (
        ThinObstacleProblem,
        bounds_violation,
        solve_psor,
        uniqueness_probe,
        )
from fraclab.smap import (
        FAR_FIELD_RIESZ,
        far_field_profile,
        growth_bounds,
        growth_check,
        inverse_s_map,
        mask_shape_metrics,
        roundtrip,
        s_map,
        )
from fraclab.weighted_grid import Field, build_grid, restrict_to_thin_plane

CONVERGENCE_ANCHOR = ("the correction solves the thin obstacle problem with "
                      "obstacle -p on the thin plane")
BOUNDS_ANCHOR = "0 <= v_p <= max(0, max -p) + max |g|"
UNIQUENESS_ANCHOR = "the solution of the thin obstacle problem is unique"
TRIVIAL_ANCHOR = "v_p vanishes identically if p >= 0 on the thin plane"
SOLUTION_ANCHOR = "p + v_p is a global solution with asymptotics p"
CONTACT_ANCHOR = "the coincidence set lies in {p <= 0} and is bounded"
GROWTH_ANCHOR = ("a global solution with degree-m asymptotics grows like "
                 "|x|^m and not slower")
FAR_FIELD_ANCHOR = "u - p decays away from the coincidence set"
BIJECTION_ANCHOR = "the map p -> p + v_p is a bijection onto global solutions"

# Growth constant up to which the degree-one check has to fail
GROWTH_LIMIT = 1e3


class Solve(Functionality):
    """
    Solve the thin obstacle problem with obstacle -p and zero boundary data.
    """

    command = "solve"

    def act(self, config):
        """
        Solve, check the residuals and bounds, and probe uniqueness from three
        starting fields.
        """
        report = self._new_report(config)
        grid = build_grid(config.grid_spec(self.refine))
        params = config.solver_params()
        p = config.polynomial()
        p_field = Field.sample(grid, p.evaluate)
        problem = ThinObstacleProblem(grid, -restrict_to_thin_plane(p_field))

        result = solve_psor(problem, params)
        report.add(CheckResult("converged", result.converged,
                               result.to_dict(),
                               params.tol, CONVERGENCE_ANCHOR,
                               runtime=result.runtime))
        violation = bounds_violation(result.solution, problem)
        tolerance = conf_tolerance(params)
        report.add(CheckResult("bounds", violation <= tolerance, violation,
                               tolerance, BOUNDS_ANCHOR))

        probe = uniqueness_probe(problem, params, seed=config.seed)
        report.add(CheckResult("uniqueness", probe.unique
                               and probe.max_deviation <= 1e-6,
                               probe.to_dict(), 1e-6, UNIQUENESS_ANCHOR))

        directory = self._output_dir(config)
        if directory:
            if not os.path.isdir(directory):
                os.makedirs(directory)
            FieldFileIO.write_binary(result.solution, os.path.join(
                directory, conf.SOLUTION_FILES["v"]))
            FieldFileIO.write_csv(result.solution,
                                  os.path.join(directory, "v.csv"))
        return self._finish(report, config)

    def help(self):
        return ("Solve the thin obstacle problem with obstacle -p and zero "
                "far-field data")


def conf_tolerance(params):
    """
    Return the tolerance of the solution checks for solver parameters.
    """
    return 10 * params.tol


def solution_checks(solution, config, report):
    """
    Add the checks of a computed global solution to `report`.
    """
    grid = solution.grid
    tolerance = solution.solve_report.contact_tol + \
        conf_tolerance(config.solver_params())
    invariants = solution.invariant_violations(tolerance)
    report.add(CheckResult("solution_converged",
                           solution.solve_report.converged,
                           solution.solve_report.to_dict(), None,
                           CONVERGENCE_ANCHOR))
    report.add(CheckResult("thin_nonnegative", not invariants["thin_negative"],
                           invariants["thin_minimum"], -tolerance,
                           SOLUTION_ANCHOR))

    thin_p = restrict_to_thin_plane(solution.p_field)
    worst = float(thin_p[solution.mask.mask].max(initial=-np.inf))
    report.add(CheckResult("contact_in_negativity_set",
                           worst <= tolerance
                           and not invariants["mask_touches_boundary"],
                           None if solution.mask.is_empty() else worst,
                           tolerance, CONTACT_ANCHOR))

    if thin_p.min() >= 0:
        largest = solution.v.max_abs()
        report.add(CheckResult("trivial_branch",
                               largest <= 1e-8 and solution.mask.is_empty(),
                               largest, 1e-8, TRIVIAL_ANCHOR))

    degree = max(solution.p.degree(), 0)
    _, upper = growth_bounds(solution, degree)
    # the box scan and the far-field samples must both stay below the limit
    report.add(CheckResult(f"growth_order_{degree}",
                           growth_check(solution.u, degree, GROWTH_LIMIT)
                           and upper <= GROWTH_LIMIT,
                           upper, GROWTH_LIMIT, GROWTH_ANCHOR))
    if degree >= 1:
        lower, _ = growth_bounds(solution, degree - 1)
        report.add(CheckResult(f"growth_order_{degree - 1}_fails",
                               lower > GROWTH_LIMIT, lower, GROWTH_LIMIT,
                               GROWTH_ANCHOR))

    profile = far_field_profile(solution)
    report.add(CheckResult("far_field_decreasing",
                           all(later <= earlier + tolerance for earlier, later
                               in zip(profile, profile[1:])),
                           profile, tolerance, FAR_FIELD_ANCHOR))
    report.details["mask_shape"] = mask_shape_metrics(solution.mask)
    report.details["grid"] = grid.spec.to_dict()


class SMap(Functionality):
    """
    Compute the global solution with the configured asymptotics and persist
    it.
    """

    command = "smap"
    # the report is saved together with the solution
    report_file = None
    solution = None

    @requires_calibration
    def act(self, config):
        """
        Run the forward map, check the solution and save it into the output
        directory.
        """
        report = self._new_report(config)
        map_numerics = config.map_numerics(self.refine)
        calibration = None
        if map_numerics.far_field == FAR_FIELD_RIESZ:
            calibration = self.calibration_for(map_numerics.grid)
        solution = s_map(config.polynomial(), map_numerics, calibration)
        solution_checks(solution, config, report)

        directory = self._output_dir(config)
        if directory:
            save_solution(solution, directory, config.to_dict(), report)
            FieldFileIO.write_csv(solution.u, os.path.join(directory,
                                                           "u.csv"))
            self._logger.info("Saved the global solution into %s", directory)
        self.solution = solution
        return self._finish(report, config)

    def help(self):
        return ("Compute u = p + v_p for the configured polynomial and save "
                "u, v, the coincidence set and the Neumann density")


class Invert(Functionality):
    """
    Recover the asymptotics of a persisted global solution.
    """

    command = "invert"

    def act(self, config):
        """
        Load the solution from the output directory and fit its asymptotics.
        """
        report = self._new_report(config)
        directory = self._output_dir(config)
        if not directory:
            raise ConfigurationError("Give the directory of a saved solution "
                                     "with --out or 'output'")
        solution = load_solution(directory)
        map_numerics = config.map_numerics(grid=solution.grid)
        calibration = None
        if not solution.mask.is_empty():
            calibration = self.calibration_for(solution.grid)
        _, result = inverse_s_map(solution.u, solution.mask, map_numerics,
                                  calibration, reference=solution.p)
        report.add(CheckResult("coefficient_error",
                               result.coefficient_error <= 0.10,
                               result.coefficient_error, 0.10,
                               BIJECTION_ANCHOR,
                               note=", ".join(result.flags) or None))
        report.details["inverse"] = result.to_dict(solution.grid.weight_a)
        return self._finish(report, config)

    def help(self):
        return ("Fit the asymptotic polynomial of the global solution saved "
                "in the output directory")


class Roundtrip(Functionality):
    """
    Map the configured polynomial forward and back, also on refined grids.
    """

    command = "roundtrip"

    def act(self, config):
        """
        Run the roundtrip; the coefficient error has to be at most 10 % and
        to shrink under refinement.
        """
        report = self._new_report(config)
        map_numerics = config.map_numerics(self.refine)
        result = roundtrip(config.polynomial(), map_numerics,
                           self.calibration_for,
                           config.numerics("refine_levels"))
        report.add(CheckResult("coefficient_error",
                               result.coefficient_error <= 0.10,
                               result.coefficient_error, 0.10,
                               BIJECTION_ANCHOR,
                               note=", ".join(result.flags) or None))
        if result.refined_errors:
            report.add(CheckResult("refinement_improves",
                                   bool(result.improved),
                                   [result.coefficient_error]
                                   + result.refined_errors, None,
                                   BIJECTION_ANCHOR))
        report.details["roundtrip"] = result.to_dict(config.weight_a)
        return self._finish(report, config)

    def help(self):
        return ("Check that the asymptotics of the computed global solution "
                "reproduce the configured polynomial")
