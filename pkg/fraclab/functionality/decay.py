"""
Barrier and decay checks of the correction v_p
"""

import numpy as np

from conf import numerics
from fraclab.exceptions import ConfigurationError, FitError
from fraclab.functionality.base import Functionality, requires_calibration
from fraclab.functionality.convexity import hessian_decay_or_note, ray_values
from fraclab.io.reports import CheckResult
from fraclab.potential import (
        CoincidenceSet,
        barrier_constant,
        barrier_wc,
        decay_exponent_fit,
        )
from fraclab.smap import FAR_FIELD_RIESZ, s_map
from fraclab.weighted_grid import restrict_to_thin_plane

BARRIER_ANCHOR = "0 <= v_p(x) <= w_c(x) outside the support of the obstacle"
DECAY_ANCHOR = "v_p decays like |x|^-(N-1+a)"


def barrier_support(solution):
    """
    Return the thin-plane set {-p > 0} joined with the coincidence set.
    """
    positive = restrict_to_thin_plane(solution.p_field) < 0
    return CoincidenceSet.from_mask(solution.grid,
                                    positive | solution.mask.mask)


def barrier_probe_indices(solution, support, count, seed=0):
    """
    Return flat indices of up to `count` interior nodes at least two cells
    away from the support, chosen at random.
    """
    grid = solution.grid
    candidates = np.flatnonzero(~grid.boundary_mask.reshape(-1))
    distance = support.distance_to(grid.embedded_points()[candidates])
    candidates = candidates[distance >= 2 * grid.spacing]
    rng = np.random.default_rng(seed)
    if len(candidates) <= count:
        return candidates
    return np.sort(rng.choice(candidates, count, replace=False))


def barrier_check(solution, params, count, tol, seed=0, deterministic=False):
    """
    Compare v with the barrier w_c at probe nodes outside the support.

    :returns: (passed, dict of measurements)
    """
    support = barrier_support(solution)
    indices = barrier_probe_indices(solution, support, count, seed)
    points = solution.grid.embedded_points()[indices]
    values = solution.v.values.reshape(-1)[indices]
    constant = barrier_constant(solution.density, params)
    barrier = barrier_wc(constant, support, params, points, deterministic)
    below = float((-values).max(initial=0.0))
    above = float((values - barrier).max(initial=0.0))
    measured = {"probes": len(indices), "negative_part": below,
                "barrier_excess": above, "barrier_density": constant}
    return (len(indices) >= count and below <= tol and above <= tol,
            measured)


def decay_window_end(far_field):
    """
    Return the outer end of the decay ray as a fraction of L.

    Zero Dirichlet data steepen v near the box boundary, so the ray stops
    at DECAY_WINDOW_END; with Riesz far-field data it reaches the outer edge
    of the fit annulus.
    """
    if far_field == FAR_FIELD_RIESZ:
        return numerics.FIT_ANNULUS[1]
    return numerics.DECAY_WINDOW_END


def decay_window(grid, radii, start, end):
    """
    Return the boolean selection of `radii` in [start, end].

    :raises ConfigurationError: the window is too short for a decay fit
    """
    chosen = (radii >= start) & (radii <= end)
    if chosen.sum() < numerics.MIN_DECAY_RADII or \
            end < numerics.MIN_DECAY_SPAN * start:
        needed = grid.spec.half_extent_L * numerics.MIN_DECAY_SPAN * start \
            / end
        raise ConfigurationError(
            f"Box too small for a decay fit: the ray from {start:.3g} to "
            f"{end:.3g} has {int(chosen.sum())} nodes and must span a "
            f"factor of {numerics.MIN_DECAY_SPAN}; enlarge half_extent_L to "
            f"at least {needed:.3g}")
    return chosen


def correction_decay(solution, start_factor=2.0,
                     end_fraction=numerics.DECAY_WINDOW_END):
    """
    Fit the decay exponent of v along a thin-plane ray outside the
    coincidence set.

    :returns: DecayFit
    :raises ConfigurationError: the box is too small for the ray
    """
    grid = solution.grid
    radii, values = ray_values(solution.v)
    start = max(start_factor * solution.mask.radius(), 2 * grid.spacing)
    chosen = decay_window(grid, radii, start,
                          end_fraction * grid.spec.half_extent_L)
    return decay_exponent_fit(radii[chosen], values[chosen])


class Decay(Functionality):
    """
    Check the barrier bound and the decay of the correction.
    """

    command = "decay"

    @requires_calibration
    def act(self, config):
        """
        Compute the global solution, compare v with the barrier at probe nodes
        and fit the decay of v and of its second differences.
        """
        report = self._new_report(config)
        map_numerics = config.map_numerics(self.refine)
        params = self.calibration_for(map_numerics.grid)
        calibration = params if map_numerics.far_field == FAR_FIELD_RIESZ \
            else None
        solution = s_map(config.polynomial(), map_numerics, calibration)
        tol = 10 * map_numerics.solver.tol
        count = config.numerics("decay_probes")

        passed, measured = barrier_check(solution, params, count, tol,
                                         config.seed,
                                         config.deterministic)
        report.add(CheckResult("barrier", passed, measured, tol,
                               BARRIER_ANCHOR,
                               note=f"at least {count} probes"))

        expected = -(config.dimension_N - 1 + config.weight_a)
        band = numerics.DECAY_RELATIVE_BAND
        if solution.mask.is_empty():
            report.add(CheckResult("decay_exponent", True, None, None,
                                   DECAY_ANCHOR,
                                   note="trivial branch, v vanishes"))
        elif expected >= 0:
            report.add(CheckResult("decay_exponent", True, None, None,
                                   DECAY_ANCHOR,
                                   note="no power-law decay for N - 1 + a "
                                        "<= 0"))
        else:
            try:
                fit = correction_decay(
                    solution,
                    end_fraction=decay_window_end(map_numerics.far_field))
                deviation = abs(fit.exponent - expected) / abs(expected)
                report.add(CheckResult("decay_exponent", deviation <= band,
                                       fit.to_dict(), band, DECAY_ANCHOR,
                                       note=f"expected exponent {expected}"))
            except FitError as error:
                report.add(CheckResult("decay_exponent", False, None, band,
                                       DECAY_ANCHOR, note=str(error)))
        report.extend(hessian_decay_or_note(solution))
        return self._finish(report, config)

    def help(self):
        return ("Compare v_p with the barrier w_c and fit its decay along a "
                "ray of the thin plane")
