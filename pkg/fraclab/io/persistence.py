"""
Saving and loading global solutions as directories
"""

import json
import os

from conf import conf
from fraclab.apoly import APolynomial
from fraclab.exceptions import ConfigurationError
from fraclab.io.fields import FieldFileIO
from fraclab.obstacle_solver import SolveReport
from fraclab.smap import GlobalSolutionApprox
from fraclab.weighted_grid import Field


def _path(directory, kind):
    return os.path.join(directory, conf.SOLUTION_FILES[kind])


def save_solution(solution, directory, config=None, report=None):
    """
    Write a GlobalSolutionApprox into `directory`.

    The directory gets config.json, u.bin, v.bin, mask.csv, lambda.csv and
    report.json; the report contains the solution summary and, if given, the
    verification report.

    :solution: GlobalSolutionApprox
    :config: Configuration dict to store
    :report: Optional VerificationReport
    """
    if not os.path.isdir(directory):
        os.makedirs(directory)
    with open(_path(directory, "config"), "w", encoding="utf8") as target:
        json.dump(config or {}, target, indent=2, sort_keys=True)
    FieldFileIO.write_binary(solution.u, _path(directory, "u"))
    FieldFileIO.write_binary(solution.v, _path(directory, "v"))
    FieldFileIO.write_mask(solution.mask, _path(directory, "mask"))
    FieldFileIO.write_density(solution.mask, solution.density,
                              _path(directory, "density"))
    summary = {"solution": solution.to_dict()}
    if report is not None:
        summary["verification"] = report.to_dict()
    with open(_path(directory, "report"), "w", encoding="utf8") as target:
        json.dump(summary, target, indent=2, sort_keys=True, default=float)


def load_solution(directory):
    """
    Read a solution written by `save_solution`.

    :returns: GlobalSolutionApprox
    :raises ConfigurationError: the directory is incomplete
    """
    missing = [name for name in conf.SOLUTION_FILES.values()
               if not os.path.exists(os.path.join(directory, name))]
    if missing:
        raise ConfigurationError(
            f"Solution directory {directory} lacks {missing}")
    with open(_path(directory, "report"), encoding="utf8") as source:
        summary = json.load(source)["solution"]
    u = FieldFileIO.read_binary(_path(directory, "u"))
    v = FieldFileIO.read_binary(_path(directory, "v"))
    grid = u.grid
    mask = FieldFileIO.read_mask(grid, _path(directory, "mask"))
    density = FieldFileIO.read_density(_path(directory, "density"),
                                       summary["density"]["method"])
    p = APolynomial.from_dict(summary["p"])
    solve = summary["solve"]
    v = Field(grid, v.values)
    report = SolveReport(
        v, solve["iterations"],
        (solve["pde_residual_off_contact"],
         solve["multiplier_sign_violation"], solve["obstacle_violation"]),
        solve["converged"], solve["max_update"], solve["contact_tol"],
        solve["runtime"])
    p_field = Field(grid, u.values - v.values)
    return GlobalSolutionApprox(p, p_field, v, mask, density, report)
