"""
Convexity checks for global solutions and the convexity command
"""

import itertools

import numpy as np

from conf import numerics
from fraclab.exceptions import ConfigurationError, FitError
from fraclab.functionality.base import Functionality
from fraclab.io.reports import CheckResult, VerificationReport
from fraclab.potential import decay_exponent_fit
from fraclab.smap import FAR_FIELD_RIESZ, growth_bounds, s_map
from fraclab.utils import stopwatch
from fraclab.weighted_grid import HALF_STORAGE

SECOND_DIFFERENCE_ANCHOR = ("second differences u(x+h) - 2u(x) + u(x-h) of a "
                            "global solution are nonnegative for thin-plane h")
DIGITAL_CONVEXITY_ANCHOR = "the coincidence set of a global solution is convex"
Z_CONCAVITY_ANCHOR = ("d/dz (|z|^a du/dz) <= 0 for a global solution with "
                      "quadratic growth")
HESSIAN_DECAY_ANCHOR = ("second derivatives of v decay like "
                        "|x|^-(N+1+a) away from the coincidence set")
GROWTH_ANCHOR = "global solutions with quadratic asymptotics grow like |x|^2"
REFINEMENT_ANCHOR = "the convexity tolerance shrinks under grid refinement"


def default_offsets(grid):
    """
    Return the grid-aligned thin-plane offsets (in cells) checked by default.
    """
    if grid.axisymmetric or grid.dimension_N == 1:
        return [(1,), (2,)]
    return [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1)]


def hessian_scale(p, half_extent_L):
    """
    Return a bound K for the second derivatives of p on the box.
    """
    total = 0.0
    for alpha, k, coef in p.terms():
        degree = sum(alpha) + k
        if degree >= 2:
            total += abs(coef) * degree * (degree - 1) * \
                max(1.0, half_extent_L) ** (degree - 2)
    return max(1.0, total)


def convexity_tolerance(solution, solver_tol=numerics.SOLVER_TOL):
    """
    Return eps_grid = max(10 x solver tolerance, K h).
    """
    grid = solution.grid
    return max(10 * solver_tol,
               hessian_scale(solution.p, grid.spec.half_extent_L)
               * grid.spacing)


def _shifted(values, offset, sign):
    """
    Return values[x + sign * offset] over the nodes where x +- offset fit.
    """
    selector = []
    for axis, step in enumerate(offset):
        size = values.shape[axis]
        width = abs(step)
        selector.append(slice(width + sign * step, size - width + sign * step))
    return values[tuple(selector)]


def second_differences(field, offset):
    """
    Return (u(x+h) - 2u(x) + u(x-h)) / |h|^2 for the thin-plane offset h
    given in cells.

    Axisymmetric fields are differenced along the radius, reflecting at the
    axis.
    """
    grid = field.grid
    offset = tuple(int(step) for step in offset)
    length = np.linalg.norm(offset) * grid.spacing
    if grid.axisymmetric:
        step = offset[0]
        nodes = np.arange(grid.shape[0] - abs(step))
        values = field.values
        difference = values[nodes + abs(step)] - 2 * values[nodes] + \
            values[np.abs(nodes - abs(step))]
        return difference / length ** 2
    values = field.values
    center = _shifted(values, offset, 0)
    difference = _shifted(values, offset, 1) - 2 * center + \
        _shifted(values, offset, -1)
    return difference / length ** 2


def weighted_z_flux_difference(field):
    """
    Return the discrete |z|^-a d/dz(|z|^a du/dz) at all nodes not carrying
    Dirichlet data in z, as an array with the z axis last.
    """
    grid = field.grid
    z_axis = grid.axes[-1]
    values = field.values
    flux = z_axis.face_weight * np.diff(values, axis=-1) / z_axis.steps
    inner = (flux[..., 1:] - flux[..., :-1]) / z_axis.measure[1:-1]
    if grid.spec.storage == HALF_STORAGE:
        # reflected flux below the thin layer
        layer = flux[..., :1] / z_axis.measure[0]
        return np.concatenate((layer, inner), axis=-1)
    return inner


def _sample_candidates(coordinates):
    """
    Return the integer node indices within half a cell (max norm) of each
    sample point given in cell units, shape (samples, candidates, dim).
    """
    lower = np.floor(coordinates + 1e-9)
    upper = np.ceil(coordinates - 1e-9)
    corners = []
    for choice in itertools.product((0, 1), repeat=coordinates.shape[1]):
        corners.append(np.where(np.array(choice, dtype=bool), upper, lower))
    candidates = np.stack(corners, axis=1)
    close = np.abs(candidates - coordinates[:, None, :]).max(axis=2) \
        <= 0.5 + 1e-9
    return candidates.astype(int), close


def digital_convexity_defects(mask):
    """
    Return the number of masked node pairs whose connecting segment leaves
    the union of the masked cells.

    In axisymmetric mode the mask is a union of spheres, convex iff it is a
    contiguous set of radii starting at the axis; the number of missing
    radii is returned.
    """
    grid = mask.grid
    if mask.is_empty():
        return 0
    if grid.axisymmetric:
        marked = np.flatnonzero(mask.mask)
        return int(marked[-1] + 1 - len(marked))

    shape = grid.thin_shape
    marked = np.array(np.unravel_index(np.flatnonzero(mask.mask), shape)).T
    lookup = mask.mask.reshape(shape)
    defects = 0
    for first, second in itertools.combinations(marked, 2):
        span = np.abs(second - first).max()
        samples = int(2 * span) + 1
        fractions = np.linspace(0, 1, samples)[:, None]
        coordinates = first + fractions * (second - first)
        candidates, close = _sample_candidates(coordinates)
        inside = np.all((candidates >= 0) & (candidates < np.array(shape)),
                        axis=2) & close
        clipped = np.clip(candidates, 0, np.array(shape) - 1)
        covered = lookup[tuple(clipped[..., axis]
                               for axis in range(len(shape)))] & inside
        if not covered.any(axis=1).all():
            defects += 1
    return defects


def convexity_suite(solution, offsets=None, solver_tol=numerics.SOLVER_TOL):
    """
    Check the convexity properties of a global solution.

    :solution: GlobalSolutionApprox with quadratic growth
    :offsets: Thin-plane offsets in cells; `default_offsets` if omitted
    :solver_tol: Tolerance the solution was computed with
    :returns: VerificationReport with one entry per offset, the digital
              convexity of the mask, the z-concavity and the growth check;
              eps_grid is in the details
    """
    grid = solution.grid
    offsets = offsets or default_offsets(grid)
    tolerance = convexity_tolerance(solution, solver_tol)
    report = VerificationReport(None, "convexity")
    report.details["epsilon_grid"] = tolerance

    for offset in offsets:
        if len(offset) != len(grid.thin_shape):
            raise ConfigurationError(
                f"Offset {offset} does not match the thin plane of "
                f"dimension {len(grid.thin_shape)}")
        with stopwatch() as elapsed:
            smallest = float(second_differences(solution.u, offset).min())
        name = "second_difference_" + "_".join(str(int(step))
                                               for step in offset)
        report.add(CheckResult(name, smallest >= -tolerance, smallest,
                               -tolerance, SECOND_DIFFERENCE_ANCHOR,
                               runtime=elapsed["seconds"]))

    with stopwatch() as elapsed:
        defects = digital_convexity_defects(solution.mask)
    report.add(CheckResult("mask_digitally_convex", defects == 0, defects, 0,
                           DIGITAL_CONVEXITY_ANCHOR,
                           note="segments tested with half-cell slack",
                           runtime=elapsed["seconds"]))

    with stopwatch() as elapsed:
        largest = float(weighted_z_flux_difference(solution.u).max())
    report.add(CheckResult("z_flux_difference", largest <= tolerance, largest,
                           tolerance, Z_CONCAVITY_ANCHOR,
                           runtime=elapsed["seconds"]))

    _, upper = growth_bounds(solution, 2)
    report.add(CheckResult("quadratic_growth", upper <= 1e3, upper, 1e3,
                           GROWTH_ANCHOR))
    return report


def ray_values(field):
    """
    Return (radii, values) of a field along the positive x_1 axis of the
    thin plane.
    """
    grid = field.grid
    thin = field.values[grid.thin_index]
    if grid.axisymmetric:
        return grid.axes[0].nodes, thin
    center = (grid.spec.nodes_per_axis - 1) // 2
    selector = (slice(center, None),) + (center,) * (grid.dimension_N - 1)
    return grid.axes[0].nodes[center:], thin[selector]


def hessian_decay_probe(solution, start_factor=2.0,
                        end_fraction=numerics.DECAY_WINDOW_END):
    """
    Fit the decay of the second radial differences of v along a thin-plane
    ray between `start_factor` times the contact radius and `end_fraction`
    times L.

    :returns: VerificationReport; the fit passes if its exponent is at most
              -(N+1+a) plus DECAY_SLACK
    :raises FitError: the ray is too short for a decay fit
    """
    grid = solution.grid
    report = VerificationReport(None, "decay")
    expected = -(grid.dimension_N + 1 + grid.weight_a)
    if solution.mask.is_empty():
        report.add(CheckResult("hessian_decay", True, None, None,
                               HESSIAN_DECAY_ANCHOR,
                               note="trivial branch, v vanishes"))
        return report

    radii, values = ray_values(solution.v)
    second = (values[2:] - 2 * values[1:-1] + values[:-2]) / grid.spacing ** 2
    radii = radii[1:-1]
    start = max(start_factor * solution.mask.radius(), 2 * grid.spacing)
    chosen = (radii >= start) & \
        (radii <= end_fraction * grid.spec.half_extent_L)
    fit = decay_exponent_fit(radii[chosen], second[chosen])
    limit = expected + numerics.DECAY_SLACK
    report.add(CheckResult("hessian_decay", fit.exponent <= limit,
                           fit.to_dict(), limit, HESSIAN_DECAY_ANCHOR,
                           note=f"expected exponent {expected}"))
    return report


class Convexity(Functionality):
    """
    Compute a global solution and run the convexity checks on it and on one
    refinement.
    """

    command = "convexity"

    def act(self, config):
        """
        Run the convexity suite; the tolerance has to shrink under
        refinement.
        """
        report = self._new_report(config)
        offsets = config.numerics("offsets")
        tolerances = []
        levels = [self.refine]
        if config.numerics("refine_levels"):
            levels.append(self.refine + 1)
        for level in levels:
            map_numerics = config.map_numerics(level)
            solution = s_map(config.polynomial(), map_numerics,
                             self._calibration_if_needed(map_numerics))
            suite = convexity_suite(solution, offsets,
                                    map_numerics.solver.tol)
            tolerances.append(suite.details["epsilon_grid"])
            report.extend(suite, prefix=f"refine{level}")

        if len(tolerances) > 1:
            report.add(CheckResult("epsilon_grid_decreases",
                                   tolerances[1] < tolerances[0], tolerances,
                                   None, REFINEMENT_ANCHOR))
        return self._finish(report, config)

    def _calibration_if_needed(self, map_numerics):
        if map_numerics.far_field == FAR_FIELD_RIESZ:
            return self.calibration_for(map_numerics.grid)
        return None

    def help(self):
        return ("Check second differences, mask convexity and z-concavity of "
                "the global solution of the configured polynomial")


def hessian_decay_or_note(solution):
    """
    Run `hessian_decay_probe`, turning a too short ray into a failed entry.
    """
    try:
        return hessian_decay_probe(solution)
    except FitError as error:
        report = VerificationReport(None, "decay")
        report.add(CheckResult("hessian_decay", False, None, None,
                               HESSIAN_DECAY_ANCHOR, note=str(error)))
        return report
