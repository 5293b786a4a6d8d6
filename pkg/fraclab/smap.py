"""
The map p -> u = p + v_p from admissible polynomials to global solutions,
its inverse through the Neumann density and the Riesz representation, and
roundtrip diagnostics.
"""

import numpy as np

from conf import numerics
from fraclab.apoly import (
        coefficient_error,
        fit_a_harmonic,
        is_in_P0prime,
        is_radial,
        )
from fraclab.exceptions import (
        BoxTooSmallError,
        CalibrationMissingError,
        ConfigurationError,
        MembershipError,
        NumericalFailure,
        )
import fraclab.logger
from fraclab.obstacle_solver import (
        SolverParams,
        ThinObstacleProblem,
        coincidence_mask,
        solve_psor,
        )
from fraclab.potential import (
        ONE_LAYER,
        RieszParams,
        extract_neumann_density,
        riesz_potential,
        )
from fraclab.weighted_grid import Field, build_grid, restrict_to_thin_plane

FAR_FIELD_ZERO = "zero"
FAR_FIELD_RIESZ = "riesz"


class MapNumerics():
    """
    Everything the forward and inverse maps need besides the polynomial.
    """
    # pylint: disable=too-many-instance-attributes,too-few-public-methods

    def __init__(self, grid, solver=None, density_method=ONE_LAYER,
                 far_field=FAR_FIELD_ZERO, far_field_passes=1, max_degree=2,
                 fit_annulus=numerics.FIT_ANNULUS, deterministic=False):
        """
        :grid: WeightedGrid
        :solver: SolverParams
        :density_method: Neumann density extraction method
        :far_field: `zero` for zero Dirichlet data, `riesz` to replace them by
                    the Riesz potential of the extracted density and re-solve
        :far_field_passes: Number of `riesz` correction passes
        :max_degree: Degree of the fitted polynomial in the inverse map
        :fit_annulus: Radii of the fit annulus as fractions of L
        :deterministic: Correctly rounded potential sums
        """
        # pylint: disable=too-many-arguments
        if far_field not in (FAR_FIELD_ZERO, FAR_FIELD_RIESZ):
            raise ConfigurationError(f"Unknown far field option {far_field}")
        if not 0 < fit_annulus[0] < fit_annulus[1] < 1:
            raise ConfigurationError(
                f"Fit annulus must satisfy 0 < inner < outer < 1, got "
                f"{fit_annulus}")
        self.grid = grid
        self.solver = solver or SolverParams()
        self.density_method = density_method
        self.far_field = far_field
        self.far_field_passes = int(far_field_passes)
        self.max_degree = int(max_degree)
        self.fit_annulus = tuple(fit_annulus)
        self.deterministic = deterministic

    def refined(self, levels=1):
        """
        Return a copy on a grid with 2^levels times as many intervals.
        """
        return MapNumerics(build_grid(self.grid.spec.refined(levels)),
                           self.solver, self.density_method, self.far_field,
                           self.far_field_passes, self.max_degree,
                           self.fit_annulus, self.deterministic)

    def to_dict(self):
        """
        Return a JSON-compatible dict.
        """
        return {"grid": self.grid.spec.to_dict(),
                "solver": self.solver.to_dict(),
                "density_method": self.density_method,
                "far_field": self.far_field,
                "far_field_passes": self.far_field_passes,
                "max_degree": self.max_degree,
                "fit_annulus": list(self.fit_annulus),
                "deterministic": self.deterministic}


class GlobalSolutionApprox():
    """
    Discrete global solution u = p + v with its coincidence set and density.
    """
    # pylint: disable=too-many-instance-attributes,too-few-public-methods

    def __init__(self, p, p_field, v, mask, density, solve_report):
        """
        :p: APolynomial giving the asymptotics
        :p_field: p sampled on the grid
        :v: Field, the correction v_p
        :mask: CoincidenceSet
        :density: NeumannDensity on the mask
        :solve_report: SolveReport of the obstacle problem
        """
        # pylint: disable=too-many-arguments
        self.p = p
        self.p_field = p_field
        self.v = v
        self.u = Field(v.grid, p_field.values + v.values)
        self.mask = mask
        self.density = density
        self.solve_report = solve_report

    @property
    def grid(self):
        """
        Return the grid the solution lives on.
        """
        return self.v.grid

    def invariant_violations(self, tol=None):
        """
        Return a dict of the measured invariants: agreement of u - v with p,
        the minimum of u on the thin plane and whether the mask touches the
        box boundary.
        """
        if tol is None:
            tol = self.solve_report.contact_tol + \
                numerics.RESIDUAL_TOL_FACTOR * numerics.SOLVER_TOL
        difference = np.abs(self.u.values - self.v.values
                            - self.p_field.values).max()
        thin_minimum = float(restrict_to_thin_plane(self.u).min())
        return {"decomposition_error": float(difference),
                "thin_minimum": thin_minimum,
                "thin_negative": thin_minimum < -tol,
                "mask_touches_boundary": self.mask.touches_boundary()}

    def to_dict(self):
        """
        Return a JSON summary (without the fields).
        """
        return {"p": self.p.to_dict(self.grid.weight_a),
                "grid": self.grid.spec.to_dict(),
                "mask": self.mask.to_dict(),
                "density": self.density.to_dict(),
                "solve": self.solve_report.to_dict(),
                "invariants": self.invariant_violations()}


def _outer_thin_nodes(grid):
    """
    Return a flat thin-plane mask of the outer quarter |x'| >= 0.75 L (max
    norm for full tensor grids).
    """
    points = grid.thin_plane_points()
    extent = np.abs(points).max(axis=1)
    return extent >= 0.75 * grid.spec.half_extent_L * (1 - 1e-12)


def check_box(p, grid):
    """
    Check that p(x', 0) > 0 on the outer quarter of the thin plane and warn
    if L is less than 4 times the radius of {p(x', 0) <= 0}.

    :raises BoxTooSmallError: p is not positive near the box boundary
    """
    thin_values = p.evaluate_thin(grid.thin_plane_points()
                                  if not grid.axisymmetric else
                                  _axisymmetric_thin_points(grid))
    outer = _outer_thin_nodes(grid)
    if thin_values[outer].min() <= 0:
        raise BoxTooSmallError(
            f"p(x', 0) is not positive on the outer quarter of the thin "
            f"plane (min {thin_values[outer].min():.3g}); enlarge L = "
            f"{grid.spec.half_extent_L}")
    negative = thin_values <= 0
    if negative.any():
        support_radius = float(grid.thin_radii()[negative].max())
        if grid.spec.half_extent_L < numerics.TRUNCATION_RATIO * \
                support_radius:
            fraclab.logger.get_logger().warning(
                "Box half extent %g is less than %g times the obstacle "
                "support radius %g; far-field truncation error may be large",
                grid.spec.half_extent_L, numerics.TRUNCATION_RATIO,
                support_radius)


def _axisymmetric_thin_points(grid):
    """
    Return the thin-plane nodes of an axisymmetric grid as points (r, 0, ...)
    of R^N.
    """
    radii = grid.thin_plane_points()[:, 0]
    points = np.zeros((len(radii), grid.dimension_N))
    points[:, 0] = radii
    return points


def _riesz_params(calibration):
    """
    Return RieszParams from a CalibrationResult or RieszParams.
    """
    if isinstance(calibration, RieszParams):
        return calibration
    return calibration.params


def _boundary_potential(grid, mask, density, params, deterministic):
    """
    Return a grid-shaped array with the Riesz potential on Dirichlet nodes.
    """
    values = np.zeros(grid.size)
    points = grid.embedded_points()[grid.boundary_indices]
    values[grid.boundary_indices] = riesz_potential(
        density, mask, params, points, deterministic)
    return values.reshape(grid.shape)


def s_map(p, map_numerics, calibration=None):
    """
    Compute the global solution u = p + v_p with asymptotics p.

    v_p solves the thin obstacle problem with obstacle -p(., 0) and zero
    far-field data; with the `riesz` far-field option the boundary data are
    afterwards replaced by the calibrated Riesz potential of the extracted
    density and the problem is solved again.

    :p: APolynomial, certified member of the asymptotics class
    :map_numerics: MapNumerics
    :calibration: CalibrationResult or RieszParams, needed for `riesz`
    :returns: GlobalSolutionApprox
    :raises MembershipError: p is not certified
    :raises BoxTooSmallError: the box does not contain the negativity set of
                              p or the mask reaches the box boundary
    :raises NumericalFailure: the solver did not converge
    """
    logger = fraclab.logger.get_logger()
    grid = map_numerics.grid
    if p.dimension_N != grid.dimension_N:
        raise ConfigurationError(
            f"Polynomial in {p.dimension_N} thin variables on a grid with "
            f"N = {grid.dimension_N}")
    membership = is_in_P0prime(p, grid.weight_a)
    if not membership.is_member:
        raise MembershipError(
            f"{p} is not certified as an admissible asymptotic: "
            f"{membership.to_dict()}")
    if grid.axisymmetric and not is_radial(p):
        raise ConfigurationError(
            f"{p} is not radially symmetric in x'; use a full tensor grid")
    check_box(p, grid)

    p_field = Field.sample(grid, p.evaluate)
    problem = ThinObstacleProblem(grid, -restrict_to_thin_plane(p_field))
    report = solve_psor(problem, map_numerics.solver)
    _require_convergence(report)

    if map_numerics.far_field == FAR_FIELD_RIESZ:
        if calibration is None:
            raise CalibrationMissingError(
                (grid.dimension_N, grid.weight_a, grid.spacing,
                 grid.spec.half_extent_L, grid.spec.mode))
        params = _riesz_params(calibration)
        for passes in range(map_numerics.far_field_passes):
            mask = coincidence_mask(report.solution, problem)
            u = Field(grid, p_field.values + report.solution.values)
            density = extract_neumann_density(u, mask,
                                              map_numerics.density_method)
            boundary = _boundary_potential(grid, mask, density, params,
                                           map_numerics.deterministic)
            problem = ThinObstacleProblem(grid, problem.obstacle_psi,
                                          boundary)
            report = solve_psor(problem, map_numerics.solver, report.solution)
            _require_convergence(report)
            logger.debug("Far-field pass %d done", passes + 1)

    v = report.solution
    mask = coincidence_mask(v, problem)
    if mask.touches_boundary():
        raise BoxTooSmallError("The coincidence set reaches the box "
                               "boundary; enlarge L")
    u = Field(grid, p_field.values + v.values)
    density = extract_neumann_density(u, mask, map_numerics.density_method)
    solution = GlobalSolutionApprox(p, p_field, v, mask, density, report)
    invariants = solution.invariant_violations(
        report.contact_tol
        + numerics.RESIDUAL_TOL_FACTOR * map_numerics.solver.tol)
    if invariants["thin_negative"]:
        raise NumericalFailure(
            f"u = p + v is negative on the thin plane: minimum "
            f"{invariants['thin_minimum']:.3g}")
    logger.info("Forward map: %d contact nodes, contact radius %.3g",
                mask.count, mask.radius())
    return solution


def _require_convergence(report):
    """
    Raise NumericalFailure for a non-converged solve.
    """
    if not report.converged:
        raise NumericalFailure(
            f"Obstacle solver did not converge: {report.to_dict()}",
            report=report)


class RoundtripReport():
    """
    Outcome of fitting a polynomial to a global solution.
    """
    # pylint: disable=too-few-public-methods,too-many-instance-attributes

    def __init__(self, fitted, error, far_field_rms, flags,
                 fit=None, samples=0):
        """
        :fitted: Fitted APolynomial
        :error: Max coefficient error relative to the reference
                             polynomial, None without a reference
        :far_field_rms: RMS of u - fitted - v on the fit annulus
        :flags: List of diagnostic strings
        :fit: FitResult
        :samples: Number of fit samples
        """
        # pylint: disable=too-many-arguments
        self.fitted = fitted
        self.coefficient_error = error
        self.far_field_rms = far_field_rms
        self.flags = flags
        self.fit = fit
        self.samples = samples
        self.refined_errors = []

    @property
    def improved(self):
        """
        Return True if every refinement strictly decreased the coefficient
        error; None without refinement.
        """
        if not self.refined_errors or self.coefficient_error is None:
            return None
        errors = [self.coefficient_error] + self.refined_errors
        return all(later < earlier
                   for earlier, later in zip(errors, errors[1:]))

    def to_dict(self, weight_a=None):
        """
        Return a JSON-compatible dict.
        """
        return {"fitted": self.fitted.to_dict(weight_a),
                "coefficient_error": self.coefficient_error,
                "far_field_rms": self.far_field_rms,
                "flags": list(self.flags),
                "fit": self.fit.to_dict() if self.fit else None,
                "samples": self.samples,
                "refined_errors": list(self.refined_errors),
                "improved": self.improved}


def fit_annulus_indices(grid, annulus=numerics.FIT_ANNULUS):
    """
    Return the flat indices of interior nodes with |x| in the annulus,
    given as fractions of L.
    """
    distance = np.linalg.norm(grid.embedded_points(), axis=1)
    length = grid.spec.half_extent_L
    return np.flatnonzero((distance >= annulus[0] * length)
                          & (distance <= annulus[1] * length)
                          & ~grid.boundary_mask.reshape(-1))


def inverse_s_map(u, mask, map_numerics, calibration=None, reference=None):
    """
    Recover the asymptotics p from a global solution.

    The Neumann density on the mask gives v by the Riesz representation on
    the fit annulus; p is the least-squares a-harmonic fit of u - v there,
    with coefficients below 1e-3 of the largest one pruned.

    :u: Field
    :mask: CoincidenceSet
    :map_numerics: MapNumerics
    :calibration: CalibrationResult or RieszParams; not needed for an empty
                  mask
    :reference: Optional APolynomial to measure the coefficient error against
    :returns: (APolynomial, RoundtripReport)
    """
    # pylint: disable=too-many-locals
    logger = fraclab.logger.get_logger()
    grid = u.grid
    flags = []
    if mask.touches_boundary():
        raise BoxTooSmallError("The coincidence set reaches the box "
                               "boundary; the far field is not available")
    indices = fit_annulus_indices(grid, map_numerics.fit_annulus)
    points = grid.embedded_points()[indices]
    values = u.values.reshape(-1)[indices]

    if mask.is_empty():
        correction = np.zeros(len(indices))
    else:
        if calibration is None:
            raise CalibrationMissingError(
                (grid.dimension_N, grid.weight_a, grid.spacing,
                 grid.spec.half_extent_L, grid.spec.mode))
        density = extract_neumann_density(u, mask, map_numerics.density_method)
        if density.positive_part() > 0:
            flags.append("positive_density_on_contact")
        if density.disagreement and \
                density.disagreement > numerics.DENSITY_DISAGREEMENT:
            flags.append("density_estimates_disagree")
        correction = riesz_potential(density, mask,
                                     _riesz_params(calibration), points,
                                     map_numerics.deterministic)

    fit = fit_a_harmonic(points, values - correction, grid.dimension_N,
                         grid.weight_a, map_numerics.max_degree,
                         radial=grid.axisymmetric)
    fitted = fit.polynomial.pruned(numerics.FIT_PRUNE_REL)
    residual = values - correction - fitted.evaluate(points)
    rms = float(np.sqrt(np.mean(residual ** 2)))
    scale = max(float(np.abs(values).max()), np.finfo(float).tiny)
    if rms > numerics.FIT_RESIDUAL_FLAG * scale:
        flags.append("fit_residual_large")

    error = None if reference is None else \
        coefficient_error(reference, fitted)
    logger.info("Inverse map: fitted %s (rms %.3e, coefficient error %s)",
                fitted, rms, error)
    return fitted, RoundtripReport(fitted, error, rms, flags, fit,
                                   len(indices))


def roundtrip(p, map_numerics, calibration_for=None, refine_levels=0):
    """
    Compute S^-1(S(p)) and its coefficient error, optionally also on
    refined grids.

    :p: APolynomial
    :map_numerics: MapNumerics
    :calibration_for: Callable returning a CalibrationResult (or RieszParams)
                      for a grid; only called when a density has to be
                      represented
    :refine_levels: Number of additional refinement levels
    :returns: RoundtripReport of the base level, with `refined_errors`
    """
    report = _roundtrip_level(p, map_numerics, calibration_for)
    for level in range(1, refine_levels + 1):
        refined = _roundtrip_level(p, map_numerics.refined(level),
                                   calibration_for)
        report.refined_errors.append(refined.coefficient_error)
    return report


def _roundtrip_level(p, map_numerics, calibration_for):
    """
    Run the forward and inverse maps on one grid.
    """
    def calibration():
        if calibration_for is None:
            return None
        return calibration_for(map_numerics.grid)

    needs_calibration = map_numerics.far_field == FAR_FIELD_RIESZ
    solution = s_map(p, map_numerics,
                     calibration() if needs_calibration else None)
    if solution.mask.is_empty():
        _, report = inverse_s_map(solution.u, solution.mask, map_numerics,
                                  reference=p)
    else:
        _, report = inverse_s_map(solution.u, solution.mask, map_numerics,
                                  calibration(), reference=p)
    return report


def injectivity_probe(first, second, map_numerics, calibration_for=None):
    """
    Roundtrip two polynomials and return (distance of the fitted
    polynomials, larger of the two fit errors).

    Distinct inputs must stay distinct: the distance has to exceed the fit
    noise clearly.
    """
    reports = [roundtrip(p, map_numerics, calibration_for)
               for p in (first, second)]
    distance = (reports[0].fitted - reports[1].fitted).scale()
    noise = max(report.coefficient_error * p.scale()
                for report, p in zip(reports, (first, second)))
    return distance, noise


def growth_constant(field, order_m):
    """
    Return max over nodes of |u(x)| / (1 + |x|^m).
    """
    radii = np.linalg.norm(field.grid.embedded_points(), axis=1)
    return float((np.abs(field.values.reshape(-1))
                  / (1 + radii ** order_m)).max())


def growth_check(field, order_m, constant_c):
    """
    Return True if |u(x)| <= C (1 + |x|^m) on all nodes.
    """
    return growth_constant(field, order_m) <= constant_c


def growth_bounds(solution, order_m, far_factors=(1e1, 1e2, 1e3, 1e4)):
    """
    Return lower and upper estimates of sup |u(x)| / (1 + |x|^m) over all
    of R^(N+1).

    Inside the box the nodal values are used. Outside, u is p plus the
    correction, which is bounded by its largest boundary value; it is
    sampled along the coordinate axes at the radii `far_factors` x L.

    :returns: (lower, upper)
    """
    grid = solution.grid
    inside = growth_constant(solution.u, order_m)
    correction = float(np.abs(
        solution.v.values[grid.boundary_mask]).max(initial=0.0))
    dimension = grid.dimension_N + 1
    directions = np.concatenate((np.eye(dimension), -np.eye(dimension)))
    radii = grid.spec.half_extent_L * np.asarray(far_factors, dtype=float)
    points = (radii[:, None, None] * directions[None]).reshape(-1, dimension)
    distance = np.linalg.norm(points, axis=1)
    magnitude = np.abs(solution.p.evaluate(points))
    denominator = 1 + distance ** order_m
    lower = max(inside, float(((magnitude - correction)
                               / denominator).max()))
    upper = max(inside, float(((magnitude + correction)
                               / denominator).max()))
    return lower, upper


def far_field_profile(solution, fractions=(0.25, 0.5, 0.75)):
    """
    Return max |u - p| on thin shells |x| ~ fraction * L for nested radii.

    The values must decrease for a solution with the right asymptotics.
    """
    grid = solution.grid
    distance = np.linalg.norm(grid.embedded_points(), axis=1)
    difference = np.abs(solution.v.values.reshape(-1))
    width = grid.spacing
    length = grid.spec.half_extent_L
    return [float(difference[np.abs(distance - fraction * length)
                             <= width].max(initial=0.0))
            for fraction in fractions]


def mask_shape_metrics(mask):
    """
    Return area, centroid and the eccentricity of the principal axes of a
    coincidence set on a full tensor grid.

    Reported without interpretation; an ellipse of semi-axes a >= b has
    eccentricity sqrt(1 - b^2 / a^2).
    """
    if mask.grid.axisymmetric:
        return {"area": mask.total_area, "radius": mask.radius()}
    if mask.is_empty():
        return {"area": 0.0, "centroid": None, "eccentricity": None,
                "principal_axes": None}
    points = mask.points()
    weights = mask.areas / mask.areas.sum()
    centroid = weights @ points
    centered = points - centroid
    moments = (centered * weights[:, None]).T @ centered
    eigenvalues = np.sort(np.linalg.eigvalsh(np.atleast_2d(moments)))[::-1]
    eccentricity = 0.0
    if eigenvalues[0] > 0:
        eccentricity = float(np.sqrt(max(0.0, 1 - eigenvalues[-1]
                                         / eigenvalues[0])))
    return {"area": mask.total_area, "centroid": centroid.tolist(),
            "eccentricity": eccentricity,
            "principal_axes": np.sqrt(eigenvalues).tolist()}