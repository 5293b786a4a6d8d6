"""
Test the forward and inverse maps between polynomials and global solutions
"""

import numpy as np
import pytest

from fraclab.apoly import (
        APolynomial,
        quadratic_member,
        radial_quadratic,
        )
from fraclab.exceptions import (
        BoxTooSmallError,
        CalibrationMissingError,
        ConfigurationError,
        MembershipError,
        NumericalFailure,
        )
from fraclab.obstacle_solver import SolverParams, SolveReport
from fraclab.potential import CoincidenceSet
from fraclab.smap import (
        FAR_FIELD_RIESZ,
        MapNumerics,
        far_field_profile,
        growth_bounds,
        growth_check,
        injectivity_probe,
        inverse_s_map,
        mask_shape_metrics,
        roundtrip,
        s_map,
        )
from fraclab.weighted_grid import (
        FULL_TENSOR,
        Field,
        GridSpec,
        build_grid,
        restrict_to_thin_plane,
        )

# pylint: disable=missing-function-docstring,redefined-outer-name


@pytest.fixture()
def map_numerics_fx(axisymmetric_grid_fx):
    """
    Return map numerics on the small axisymmetric grid.
    """
    return MapNumerics(axisymmetric_grid_fx,
                       SolverParams(relaxation_omega=1.8, tol=1e-9))


@pytest.fixture()
def radial_solution_fx(map_numerics_fx):
    """
    Return the global solution for |x'|^2 - 1 - 3 z^2 with N = 3, a = 0.
    """
    return s_map(radial_quadratic(3, 0.0), map_numerics_fx)


@pytest.fixture()
def trivial_solution_fx(map_numerics_fx):
    """
    Return the global solution of a polynomial that is positive on the thin
    plane.
    """
    return s_map(radial_quadratic(3, 0.0, 1.0), map_numerics_fx)


@pytest.mark.parametrize("arguments", [
    {"far_field": "periodic"},
    {"fit_annulus": (0.75, 0.5)},
    {"fit_annulus": (0.5, 1.0)},
    ])
def test_invalid_map_numerics(axisymmetric_grid_fx, arguments):
    with pytest.raises(ConfigurationError):
        MapNumerics(axisymmetric_grid_fx, **arguments)


def test_refined_numerics(map_numerics_fx):
    refined = map_numerics_fx.refined()
    assert refined.grid.spec.nodes_per_axis == 65
    assert refined.solver is map_numerics_fx.solver


def test_non_member_is_rejected(map_numerics_fx):
    p = radial_quadratic(3, 0.0) * -1.0
    with pytest.raises(MembershipError):
        s_map(p, map_numerics_fx)


def test_non_radial_polynomial_needs_full_tensor_grid(map_numerics_fx):
    p = quadratic_member(3, 0.0, np.diag([1.0, 2.0, 3.0]), -1.0)
    with pytest.raises(ConfigurationError):
        s_map(p, map_numerics_fx)


def test_dimension_must_match(map_numerics_fx):
    with pytest.raises(ConfigurationError):
        s_map(radial_quadratic(2, 0.0), map_numerics_fx)


def test_negativity_set_must_fit_in_box(map_numerics_fx):
    with pytest.raises(BoxTooSmallError):
        s_map(radial_quadratic(3, 0.0, -10.0), map_numerics_fx)


def test_riesz_far_field_needs_calibration(axisymmetric_grid_fx):
    numerics = MapNumerics(axisymmetric_grid_fx,
                           SolverParams(relaxation_omega=1.8, tol=1e-9),
                           far_field=FAR_FIELD_RIESZ)
    with pytest.raises(CalibrationMissingError):
        s_map(radial_quadratic(3, 0.0), numerics)


def test_trivial_branch(trivial_solution_fx):
    assert trivial_solution_fx.mask.is_empty()
    assert trivial_solution_fx.v.max_abs() < 1e-12
    assert len(trivial_solution_fx.density.values) == 0


def test_negative_solution_on_thin_plane_is_a_failure(mocker,
                                                      map_numerics_fx):
    """
    A converged report whose v does not lift p above zero must not pass as a
    global solution.
    """
    grid = map_numerics_fx.grid
    mocker.patch("fraclab.smap.solve_psor",
                 return_value=SolveReport(Field.zeros(grid), 1,
                                          (0.0, 0.0, 0.0), True, 0.0, 1e-9))
    with pytest.raises(NumericalFailure, match="negative on the thin plane"):
        s_map(radial_quadratic(3, 0.0), map_numerics_fx)


def test_radial_solution(radial_solution_fx):
    solution = radial_solution_fx
    assert solution.solve_report.converged
    assert not solution.mask.is_empty()
    # u = 0 on the contact set and u >= p, so contact needs p <= 0
    assert solution.mask.radius() <= 1.0
    assert solution.density.max_abs() > 0
    violations = solution.invariant_violations()
    assert violations["decomposition_error"] < 1e-12
    assert not violations["thin_negative"]
    assert not violations["mask_touches_boundary"]
    assert restrict_to_thin_plane(solution.v).min() >= 0
    assert solution.to_dict()["mask"]["count"] == solution.mask.count


def test_far_field_decreases(radial_solution_fx):
    profile = far_field_profile(radial_solution_fx)
    assert profile[0] > profile[1] > profile[2] > 0


def test_growth_bounds(trivial_solution_fx):
    lower, upper = growth_bounds(trivial_solution_fx, 2)
    assert lower == pytest.approx(upper)
    assert upper < 3
    lower, _ = growth_bounds(trivial_solution_fx, 1)
    assert lower > 1e3
    assert growth_check(trivial_solution_fx.u, 2, 3.0)


def test_trivial_roundtrip_is_exact(map_numerics_fx):
    p = radial_quadratic(3, 0.0, 1.0)
    report = roundtrip(p, map_numerics_fx)
    assert report.coefficient_error < 1e-8
    assert report.improved is None
    assert not report.flags


def test_inverse_needs_calibration_for_contact(radial_solution_fx,
                                               map_numerics_fx):
    with pytest.raises(CalibrationMissingError):
        inverse_s_map(radial_solution_fx.u, radial_solution_fx.mask,
                      map_numerics_fx)


def test_inverse_rejects_boundary_contact(radial_solution_fx,
                                          map_numerics_fx):
    mask = np.zeros(17, dtype=bool)
    mask[-1] = True
    grid = radial_solution_fx.grid
    with pytest.raises(BoxTooSmallError):
        inverse_s_map(radial_solution_fx.u,
                      CoincidenceSet.from_mask(grid, mask), map_numerics_fx)


def test_injectivity_of_trivial_branch(map_numerics_fx):
    distance, noise = injectivity_probe(radial_quadratic(3, 0.0, 1.0),
                                        radial_quadratic(3, 0.0, 2.0),
                                        map_numerics_fx)
    assert distance == pytest.approx(1.0)
    assert noise < 1e-6


def test_mask_shape_of_disc():
    grid = build_grid(GridSpec(2, 2.0, 17, 0.0, FULL_TENSOR))
    mask = CoincidenceSet.from_mask(grid, grid.thin_radii() <= 0.75)
    metrics = mask_shape_metrics(mask)
    assert metrics["eccentricity"] == pytest.approx(0.0, abs=1e-6)
    assert np.allclose(metrics["centroid"], 0.0)


def test_mask_shape_of_segment():
    grid = build_grid(GridSpec(2, 2.0, 17, 0.0, FULL_TENSOR))
    points = grid.thin_plane_points()
    mask = CoincidenceSet.from_mask(
        grid, (np.abs(points[:, 0]) <= 0.75) & (points[:, 1] == 0))
    assert mask_shape_metrics(mask)["eccentricity"] == pytest.approx(1.0)


def test_mask_shape_of_empty_and_axisymmetric(radial_solution_fx):
    grid = build_grid(GridSpec(2, 2.0, 17, 0.0, FULL_TENSOR))
    assert mask_shape_metrics(CoincidenceSet.empty(grid))["area"] == 0
    metrics = mask_shape_metrics(radial_solution_fx.mask)
    assert metrics["radius"] == radial_solution_fx.mask.radius()


def test_zero_polynomial_is_not_admissible(map_numerics_fx):
    with pytest.raises(MembershipError):
        s_map(APolynomial(3), map_numerics_fx)
