"""
Test saving and loading global solutions
"""

import json

import numpy as np
import pytest

from fraclab.apoly import radial_quadratic
from fraclab.exceptions import ConfigurationError
from fraclab.io.persistence import load_solution, save_solution
from fraclab.io.reports import CheckResult, VerificationReport
from fraclab.obstacle_solver import SolverParams
from fraclab.smap import MapNumerics, s_map

# pylint: disable=missing-function-docstring,redefined-outer-name


@pytest.fixture()
def solution_fx(axisymmetric_grid_fx):
    """
    Return the radial global solution on the small axisymmetric grid.
    """
    numerics = MapNumerics(axisymmetric_grid_fx,
                           SolverParams(relaxation_omega=1.8, tol=1e-9))
    return s_map(radial_quadratic(3, 0.0), numerics)


def test_saved_solution_is_loaded_back(solution_fx, tmp_path):
    directory = tmp_path / "solution"
    save_solution(solution_fx, str(directory), config={"name": "radial"})
    loaded = load_solution(str(directory))
    assert loaded.grid.spec == solution_fx.grid.spec
    assert np.array_equal(loaded.u.values, solution_fx.u.values)
    assert np.array_equal(loaded.v.values, solution_fx.v.values)
    assert np.array_equal(loaded.mask.mask, solution_fx.mask.mask)
    assert np.allclose(loaded.density.values, solution_fx.density.values,
                       rtol=1e-15)
    assert loaded.density.method == solution_fx.density.method
    assert loaded.p == solution_fx.p
    assert loaded.solve_report.converged
    assert loaded.solve_report.iterations == \
        solution_fx.solve_report.iterations


def test_directory_contents(solution_fx, tmp_path):
    report = VerificationReport("radial", "smap", deterministic=True)
    report.add(CheckResult("converged", True, anchor="solution"))
    save_solution(solution_fx, str(tmp_path), {"name": "radial"}, report)
    assert sorted(path.name for path in tmp_path.iterdir()) == \
        ["config.json", "lambda.csv", "mask.csv", "report.json", "u.bin",
         "v.bin"]
    config = json.loads((tmp_path / "config.json").read_text(
        encoding="utf8"))
    assert config == {"name": "radial"}
    summary = json.loads((tmp_path / "report.json").read_text(
        encoding="utf8"))
    assert summary["verification"]["passed"]
    assert summary["solution"]["mask"]["count"] == solution_fx.mask.count


def test_incomplete_directory(solution_fx, tmp_path):
    save_solution(solution_fx, str(tmp_path))
    (tmp_path / "v.bin").unlink()
    with pytest.raises(ConfigurationError):
        load_solution(str(tmp_path))
