"""
Test Neumann densities, Riesz potentials, barriers and calibration
"""

import numpy as np
import pytest

from fraclab.exceptions import (
        ConfigurationError,
        FitError,
        SupportProximityError,
        )
from fraclab.functionality.calibration import newtonian_alpha
from fraclab.potential import (
        MULTIPLIER,
        TWO_LAYER,
        CoincidenceSet,
        NeumannDensity,
        RieszParams,
        barrier_constant,
        barrier_wc,
        calibrate_alpha,
        decay_exponent_fit,
        density_field,
        extract_neumann_density,
        riesz_potential,
        )
from fraclab.weighted_grid import (
        AXISYMMETRIC,
        FULL_TENSOR,
        Field,
        GridSpec,
        build_grid,
        restrict_to_thin_plane,
        )

# pylint: disable=missing-function-docstring,redefined-outer-name


@pytest.fixture()
def plane_grid_fx():
    """
    Return a full tensor grid with a two-dimensional thin plane.
    """
    return build_grid(GridSpec(2, 1.0, 9, 0.0, FULL_TENSOR))


@pytest.fixture()
def center_fx(plane_grid_fx):
    """
    Return the coincidence set consisting of the origin only.
    """
    mask = np.zeros(81, dtype=bool)
    mask[40] = True
    return CoincidenceSet.from_mask(plane_grid_fx, mask)


def test_empty_set(line_grid_fx):
    empty = CoincidenceSet.empty(line_grid_fx)
    assert empty.is_empty()
    assert empty.radius() == 0
    assert empty.total_area == 0
    assert np.isinf(empty.distance_to([0.0, 1.0])).all()


def test_set_geometry(center_fx):
    assert center_fx.count == 1
    assert center_fx.total_area == pytest.approx(0.0625)
    assert center_fx.radius() == 0
    assert not center_fx.touches_boundary()
    assert center_fx.distance_to([[3.0, 4.0, 0.0]])[0] == pytest.approx(5)


def test_one_layer_density_is_exact(weight_fx):
    """
    u = 3 + z^(1-a) has |z|^a u_z = 1 - a.
    """
    grid = build_grid(GridSpec(1, 1.0, 9, weight_fx, FULL_TENSOR))
    field = Field.sample(grid,
                         lambda points: 3 + points[:, -1] ** (1 - weight_fx))
    mask = CoincidenceSet.from_mask(grid, np.abs(grid.thin_radii()) < 0.5)
    density = extract_neumann_density(field, mask)
    assert np.allclose(density.values, 1 - weight_fx)
    assert density.disagreement < 1e-10
    assert np.allclose(extract_neumann_density(field, mask,
                                               TWO_LAYER).values,
                       1 - weight_fx)


def test_multiplier_density_of_linear_profile(line_grid_fx):
    """
    u = -z has lambda = -1; the thin cell flux balance recovers it.
    """
    field = Field.sample(line_grid_fx, lambda points: -points[:, -1])
    mask = CoincidenceSet.from_mask(line_grid_fx,
                                    np.abs(line_grid_fx.thin_radii()) < 0.5)
    density = extract_neumann_density(field, mask, MULTIPLIER)
    assert np.allclose(density.values, -1)
    assert density.positive_part() == 0


def test_unknown_density_method(line_grid_fx):
    with pytest.raises(ConfigurationError):
        extract_neumann_density(Field.zeros(line_grid_fx),
                                CoincidenceSet.empty(line_grid_fx), "spline")


def test_empty_mask_gives_empty_density(line_grid_fx):
    density = extract_neumann_density(Field.zeros(line_grid_fx),
                                      CoincidenceSet.empty(line_grid_fx))
    assert len(density.values) == 0
    assert density.max_abs() == 0


def test_alpha_must_be_positive():
    with pytest.raises(ConfigurationError):
        RieszParams(2, 0.0, 0.0)


def test_single_cell_potential(center_fx):
    params = RieszParams(2, 0.0, 1.0)
    density = NeumannDensity([-1.0])
    value = riesz_potential(density, center_fx, params, [0.0, 0.0, 2.0])
    assert value == pytest.approx(2 * 0.0625 / 2)
    deterministic = riesz_potential(density, center_fx, params,
                                    [[0.0, 0.0, 2.0]], deterministic=True)
    assert deterministic[0] == pytest.approx(value)


def test_potential_too_close_to_support(center_fx):
    with pytest.raises(SupportProximityError):
        riesz_potential(NeumannDensity([-1.0]), center_fx,
                        RieszParams(2, 0.0, 1.0), [0.1, 0.0, 0.1])


def test_potential_of_empty_set(plane_grid_fx):
    value = riesz_potential(NeumannDensity([]),
                            CoincidenceSet.empty(plane_grid_fx),
                            RieszParams(2, 0.0, 1.0), [0.0, 0.0, 0.0])
    assert value == 0


def test_ring_potential_matches_angular_average():
    grid = build_grid(GridSpec(2, 2.0, 17, 0.3, AXISYMMETRIC))
    mask = np.zeros(9, dtype=bool)
    mask[4] = True
    ring = CoincidenceSet.from_mask(grid, mask)
    value = riesz_potential(NeumannDensity([-1.0]), ring,
                            RieszParams(2, 0.3, 1.0), [0.5, 0.0, 1.0])
    angles = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    squared = (0.5 - np.cos(angles)) ** 2 + np.sin(angles) ** 2 + 1.0
    average = np.mean(squared ** (-1.3 / 2))
    assert value == pytest.approx(2 * ring.areas[0] * average, rel=1e-8)


def test_ring_potential_on_axis(axisymmetric_grid_fx):
    mask = np.zeros(17, dtype=bool)
    mask[4] = True
    ring = CoincidenceSet.from_mask(axisymmetric_grid_fx, mask)
    value = barrier_wc(1.0, ring, RieszParams(3, 0.0, 1.0),
                       [0.0, 0.0, 0.0, 2.0])
    assert value == pytest.approx(ring.areas[0] / 5.0)


def test_barrier_dominates_potential(center_fx):
    params = RieszParams(2, 0.0, 0.3)
    density = NeumannDensity([-2.0])
    constant = barrier_constant(density, params)
    assert constant == pytest.approx(2 * 2 * 0.3 * 2.0)
    points = np.array([[0.5, 0.5, 0.5], [0.0, 0.0, 1.0]])
    assert np.all(barrier_wc(constant, center_fx, params, points)
                  >= riesz_potential(density, center_fx, params, points))


def test_exact_power_law_fit():
    radii = np.geomspace(1, 100, 8)
    fit = decay_exponent_fit(radii, -3 * radii ** -1.5)
    assert fit.exponent == pytest.approx(-1.5)
    assert fit.prefactor == pytest.approx(3)
    assert fit.r_squared == pytest.approx(1)


@pytest.mark.parametrize("radii,values", [
    ([1, 2, 3, 4], [1, 1, 1, 1]),
    ([1, 1.2, 1.4, 1.6, 2], [1, 1, 1, 1, 1]),
    ([1, 2, 4, 8, 16], [1, -1, 1, 1, 1]),
    ([1, 2, 4, 8, 16], [1, 0, 1, 1, 1]),
    ])
def test_invalid_decay_fit(radii, values):
    with pytest.raises(FitError):
        decay_exponent_fit(radii, values)


def test_density_field(line_grid_fx):
    mask = CoincidenceSet.from_mask(line_grid_fx,
                                    np.abs(line_grid_fx.thin_radii()) < 0.3)
    field = density_field(line_grid_fx, mask, NeumannDensity([-1.0] * 3))
    thin = restrict_to_thin_plane(field)
    assert thin.tolist() == [0, 0, 0, -1, -1, -1, 0, 0, 0]
    assert np.all(field.values[:, 1:] == 0)


def test_calibration_needs_decaying_kernel():
    grid = build_grid(GridSpec(1, 4.0, 33, -0.2, FULL_TENSOR))
    with pytest.raises(ConfigurationError):
        calibrate_alpha(grid)


def test_calibration_needs_large_box():
    grid = build_grid(GridSpec(2, 1.0, 9, 0.0, FULL_TENSOR))
    with pytest.raises(ConfigurationError):
        calibrate_alpha(grid, source_radius=0.5)


def test_newtonian_calibration():
    """
    For a = 0 and N = 2 the constant is the Newtonian one, 1 / (4 pi).
    """
    grid = build_grid(GridSpec(2, 4.0, 33, 0.0, FULL_TENSOR))
    result = calibrate_alpha(grid)
    exact = newtonian_alpha(2)
    assert exact == pytest.approx(1 / (4 * np.pi))
    assert result.alpha > 0
    assert result.spread <= 0.1
    assert abs(result.alpha - exact) / exact < 0.1
    assert result.to_dict()["probes"] == result.probes
