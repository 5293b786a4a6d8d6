"""
Shared test stuff
"""

import pytest

from fraclab.io.cache import CalibrationCache
from fraclab.io.config import ExperimentConfig
from fraclab.weighted_grid import (
        AXISYMMETRIC,
        FULL_TENSOR,
        GridSpec,
        build_grid,
        )

# pylint doesn't handle fixtures well
# pylint: disable=redefined-outer-name


@pytest.fixture(autouse=True)
def isolated_cache_fx(tmp_path, monkeypatch):
    """
    Point the calibration cache to a temporary file.

    This way no test reads or writes the cache of the user.

    :returns: path of the temporary cache file
    """
    path = tmp_path / "calibration.json"
    monkeypatch.setenv("FRACLAB_CACHE", str(path))
    return path


@pytest.fixture()
def cache_fx(isolated_cache_fx):
    """
    Return a CalibrationCache using the temporary cache file.
    """
    return CalibrationCache(str(isolated_cache_fx))


@pytest.fixture()
def line_grid_fx():
    """
    Return a small full tensor grid with one thin variable and a = 0.
    """
    return build_grid(GridSpec(1, 1.0, 9, 0.0, FULL_TENSOR))


@pytest.fixture(params=[-0.5, 0.0, 0.5])
def weight_fx(request):
    """
    Run a test for a negative, zero and positive weight exponent.
    """
    return request.param


@pytest.fixture()
def axisymmetric_grid_fx():
    """
    Return an axisymmetric grid for N = 3 and a = 0 with L = 4.
    """
    return build_grid(GridSpec(3, 4.0, 33, 0.0, AXISYMMETRIC))


@pytest.fixture()
def radial_config_data_fx():
    """
    Return the raw data of a small axisymmetric radial quadratic experiment.
    """
    return {
        "name": "radial-test",
        "N": 3,
        "a": 0.0,
        "seed": 1,
        "grid": {"half_extent_L": 4.0, "nodes_per_axis": 33,
                 "mode": AXISYMMETRIC},
        "solver": {"relaxation_omega": 1.8, "tol": 1e-9},
        "polynomial": {"constant": -1.0},
        "numerics": {"refine_levels": 0},
        }


@pytest.fixture()
def radial_config_fx(radial_config_data_fx):
    """
    Return the ExperimentConfig of `radial_config_data_fx`.
    """
    return ExperimentConfig(radial_config_data_fx)
