"""
Test the weighted finite-volume grid and its operator
"""

import numpy as np
import pytest
import scipy.sparse

from fraclab.apoly import radial_quadratic, quadratic_member
from fraclab.exceptions import ConfigurationError
from fraclab.weighted_grid import (
        AXISYMMETRIC,
        FULL_STORAGE,
        FULL_TENSOR,
        Field,
        GridMismatchError,
        GridSpec,
        apply_La,
        apply_La_axisym,
        assemble_operator,
        build_grid,
        restrict_to_thin_plane,
        solve_dirichlet,
        sphere_area,
        )

# pylint: disable=missing-function-docstring,redefined-outer-name


@pytest.mark.parametrize("arguments", [
    (0, 1.0, 9, 0.0, FULL_TENSOR),
    (1, -1.0, 9, 0.0, FULL_TENSOR),
    (1, 1.0, 10, 0.0, FULL_TENSOR),
    (1, 1.0, 7, 0.0, FULL_TENSOR),
    (1, 1.0, 9, 1.0, FULL_TENSOR),
    (1, 1.0, 9, -1.0, FULL_TENSOR),
    (3, 1.0, 9, 0.0, FULL_TENSOR),
    (1, 1.0, 9, 0.0, "spherical"),
    ])
def test_invalid_spec_is_rejected(arguments):
    with pytest.raises(ConfigurationError):
        GridSpec(*arguments)


def test_spacing_and_shapes(line_grid_fx):
    assert line_grid_fx.spacing == pytest.approx(0.25)
    assert line_grid_fx.shape == (9, 5)
    assert line_grid_fx.thin_shape == (9,)


def test_axisymmetric_shape(axisymmetric_grid_fx):
    assert axisymmetric_grid_fx.shape == (17, 17)
    assert axisymmetric_grid_fx.embedded_points().shape == (17 * 17, 4)


def test_full_storage_mirrors_z():
    grid = build_grid(GridSpec(1, 1.0, 9, 0.0, FULL_TENSOR,
                               storage=FULL_STORAGE))
    assert grid.shape == (9, 9)
    assert grid.coordinates()[-1][grid.thin_layer] == 0


def test_refinement_doubles_intervals():
    spec = GridSpec(2, 2.0, 9, 0.3, FULL_TENSOR).refined(2)
    assert spec.nodes_per_axis == 33
    assert spec.spacing == pytest.approx(0.125)


def test_spec_dict_roundtrip():
    spec = GridSpec(3, 4.0, 33, -0.5, AXISYMMETRIC, z_grading=1.1)
    assert GridSpec.from_dict(spec.to_dict()) == spec
    assert build_grid(spec.to_dict()).spec == spec


def test_sphere_areas():
    assert sphere_area(1) == pytest.approx(2)
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(4 * np.pi)


def test_constant_is_annihilated(line_grid_fx):
    result = apply_La(line_grid_fx, Field.constant(line_grid_fx, 3.0))
    assert np.abs(result.values).max() < 1e-12


@pytest.mark.parametrize("mode,dimension_N", [(FULL_TENSOR, 1),
                                              (FULL_TENSOR, 2),
                                              (AXISYMMETRIC, 3)])
def test_quadratic_a_harmonic_is_annihilated(weight_fx, mode, dimension_N):
    """
    The weights make the scheme exact for quadratic a-harmonic polynomials,
    including the z = 0 layer and the axis.
    """
    grid = build_grid(GridSpec(dimension_N, 2.0, 9, weight_fx, mode))
    p = radial_quadratic(dimension_N, weight_fx)
    result = apply_La(grid, Field.sample(grid, p.evaluate))
    assert np.abs(result.values).max() < 1e-9


def test_anisotropic_quadratic_is_annihilated(weight_fx):
    grid = build_grid(GridSpec(2, 2.0, 11, weight_fx, FULL_TENSOR))
    p = quadratic_member(2, weight_fx, [[1.0, 0.3], [0.3, 2.0]], -1.0)
    result = apply_La(grid, Field.sample(grid, p.evaluate))
    assert np.abs(result.values).max() < 1e-9


def test_graded_grid_is_exact_for_quadratics():
    grid = build_grid(GridSpec(1, 2.0, 9, 0.5, FULL_TENSOR, z_grading=1.3))
    p = radial_quadratic(1, 0.5)
    result = apply_La(grid, Field.sample(grid, p.evaluate))
    assert np.abs(result.values).max() < 1e-9


def test_non_harmonic_is_not_annihilated(line_grid_fx):
    field = Field.sample(line_grid_fx, lambda points: points[:, 0] ** 2)
    result = apply_La(line_grid_fx, field)
    assert np.abs(result.values).max() > 1


def test_dirichlet_solve_reproduces_harmonic(weight_fx):
    grid = build_grid(GridSpec(2, 1.5, 9, weight_fx, FULL_TENSOR))
    p = radial_quadratic(2, weight_fx, 0.5)
    exact = Field.sample(grid, p.evaluate)
    solution = solve_dirichlet(grid, exact.values)
    assert np.abs(solution.values - exact.values).max() < 1e-9


def test_dirichlet_solve_with_zero_data_vanishes(axisymmetric_grid_fx):
    solution = solve_dirichlet(axisymmetric_grid_fx)
    assert solution.max_abs() == 0


def test_axisymmetric_operator_needs_axisymmetric_grid(line_grid_fx):
    with pytest.raises(GridMismatchError):
        apply_La_axisym(line_grid_fx, Field.zeros(line_grid_fx))


def _gaussian(points):
    return np.exp(-(points ** 2).sum(axis=1))


@pytest.mark.parametrize("weight_a", [-0.5, 0.0, 0.5])
def test_half_storage_matches_reflected_full_storage(weight_a):
    half = build_grid(GridSpec(1, 1.0, 9, weight_a, FULL_TENSOR))
    full = build_grid(GridSpec(1, 1.0, 9, weight_a, FULL_TENSOR,
                               storage=FULL_STORAGE))

    def even_in_z(points):
        return np.cos(points[:, 0]) * np.exp(-points[:, -1] ** 2)

    on_half = apply_La(half, Field.sample(half, even_in_z)).values
    on_full = apply_La(full, Field.sample(full, even_in_z)).values
    assert np.allclose(on_full[:, full.thin_layer:], on_half,
                       rtol=0, atol=1e-10)


def test_axisymmetric_operator_converges_to_full_tensor():
    """
    For N = 2 the (r, z) reduction of a radial field agrees with the full
    tensor grid along the ray y = 0, up to an error of second order.
    """
    errors = []
    for nodes in (17, 33, 65):
        full = build_grid(GridSpec(2, 2.0, nodes, 0.5, FULL_TENSOR))
        reduced = build_grid(GridSpec(2, 2.0, nodes, 0.5, AXISYMMETRIC))
        center = (nodes - 1) // 2
        on_full = apply_La(full, Field.sample(full, _gaussian)).values
        on_reduced = apply_La_axisym(reduced,
                                     Field.sample(reduced, _gaussian)).values
        difference = np.abs(on_full[center:, center, :] - on_reduced)
        errors.append(difference[~reduced.boundary_mask].max())
    assert errors[1] < errors[0] / 2.5
    assert errors[2] < errors[1] / 2.5


def test_first_z_face_weight():
    grid = build_grid(GridSpec(1, 8.0, 33, 0.5, FULL_TENSOR))
    h = grid.spacing
    z_axis = grid.axes[-1]
    assert z_axis.steps[0] == pytest.approx(h)
    assert z_axis.face_weight[0] == pytest.approx((h / 2) ** 0.5)
    # face area of an interior x cell is h
    weights = grid.weights.face_weights(1)
    assert weights[16, 0] == pytest.approx((h / 2) ** 0.5 * h)


def test_unweighted_stencil_is_the_standard_laplacian():
    grid = build_grid(GridSpec(2, 2.0, 9, 0.0, FULL_TENSOR))
    h = grid.spacing
    values = np.random.default_rng(0).normal(size=grid.shape)
    # even reflection across z = 0
    ext = np.pad(values, ((0, 0), (0, 0), (1, 0)), mode="reflect")
    center = values[1:-1, 1:-1, :-1]
    laplacian = (values[2:, 1:-1, :-1] + values[:-2, 1:-1, :-1]
                 + values[1:-1, 2:, :-1] + values[1:-1, :-2, :-1]
                 + ext[1:-1, 1:-1, 2:] + ext[1:-1, 1:-1, :-2]
                 - 6 * center) / h ** 2
    result = apply_La(grid, Field(grid, values)).values
    assert np.allclose(result[1:-1, 1:-1, :-1], laplacian, rtol=0,
                       atol=1e-10)


def test_a_harmonic_power_of_z_has_vanishing_residual():
    """
    |z|^(1-a) solves the one-dimensional weighted equation away from z = 0;
    the residual there is of second order in h.
    """
    residuals = []
    spec = GridSpec(3, 4.0, 33, 0.5, AXISYMMETRIC)
    for grid in (build_grid(spec), build_grid(spec.refined())):
        field = Field.sample(grid, lambda points: np.abs(points[:, -1]) ** 0.5)
        result = apply_La_axisym(grid, field).values
        away = ~grid.boundary_mask & (grid.axes[-1].nodes >= 1.0)
        residuals.append(np.abs(result[away]).max())
    assert residuals[0] < 3e-3
    assert residuals[1] < residuals[0] / 3


def test_field_shape_is_checked(line_grid_fx):
    with pytest.raises(GridMismatchError):
        Field(line_grid_fx, np.zeros((9, 4)))


def test_thin_plane_restriction(line_grid_fx):
    field = Field.sample(line_grid_fx,
                         lambda points: points[:, 0] + 10 * points[:, 1])
    thin = restrict_to_thin_plane(field)
    assert thin.shape == (9,)
    assert np.allclose(thin, np.linspace(-1, 1, 9))


def test_thin_cell_areas_cover_the_plane(line_grid_fx, axisymmetric_grid_fx):
    assert line_grid_fx.thin_cell_areas().sum() == pytest.approx(2.0)
    ball = 4 / 3 * np.pi * 4.0 ** 3
    assert axisymmetric_grid_fx.thin_cell_areas().sum() == \
        pytest.approx(ball)


def test_boundary_mask_of_half_storage(line_grid_fx):
    mask = line_grid_fx.boundary_mask
    # z = 0 carries no Dirichlet data except at the x ends
    assert not mask[1:-1, 0].any()
    assert mask[:, -1].all()
    assert mask[0, :].all() and mask[-1, :].all()


def test_assembled_operator_is_symmetric_with_zero_row_sums(weight_fx):
    grid = build_grid(GridSpec(2, 1.0, 9, weight_fx, FULL_TENSOR))
    matrix = assemble_operator(grid)
    assert matrix.shape == (grid.size, grid.size)
    assert abs(matrix - matrix.T).max() < 1e-12
    assert np.abs(np.asarray(matrix.sum(axis=1))).max() < 1e-12
    off_diagonal = matrix - scipy.sparse.diags(matrix.diagonal())
    assert off_diagonal.max() <= 0
