"""
Discrete weighted thin obstacle problem.

With A the stiffness matrix of the grid, interior unknowns v_I and Dirichlet
data g, the problem is the linear complementarity system

    r := A_II v_I + A_IB g >= 0,   r = 0 off the thin plane,
    v >= psi on the thin plane,     r (v - psi) = 0,

which is the discrete form of L_a v <= 0, L_a v = 0 off the contact set and
v >= psi on {z = 0}.
"""

import itertools

import numpy as np

from conf import numerics
from fraclab.exceptions import ConfigurationError, NumericalFailure
import fraclab.logger
from fraclab.potential import CoincidenceSet
from fraclab.utils import stopwatch
from fraclab.weighted_grid import (
        Field,
        GridMismatchError,
        assemble_operator,
        solve_dirichlet,
        )

LEXICOGRAPHIC = "lexicographic"
RED_BLACK = "red_black"
SWEEP_ORDERS = (LEXICOGRAPHIC, RED_BLACK)


class SolverParams():
    """
    Parameters of the projected SOR iteration.
    """
    # pylint: disable=too-few-public-methods

    def __init__(self, relaxation_omega=numerics.RELAXATION_OMEGA,
                 tol=numerics.SOLVER_TOL, max_iter=numerics.MAX_ITER,
                 sweep_order=numerics.SWEEP_ORDER):
        """
        :relaxation_omega: Relaxation factor in (0, 2)
        :tol: Stop when the max-norm update of a sweep is below this
        :max_iter: Maximum number of sweeps
        :sweep_order: `red_black` or `lexicographic`
        """
        self.relaxation_omega = float(relaxation_omega)
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.sweep_order = sweep_order
        if not 0 < self.relaxation_omega < 2:
            raise ConfigurationError(
                f"Relaxation factor must lie in (0, 2), got "
                f"{self.relaxation_omega}")
        if not self.tol > 0:
            raise ConfigurationError(f"Tolerance must be positive, got {tol}")
        if self.max_iter < 1:
            raise ConfigurationError(
                f"max_iter must be at least 1, got {max_iter}")
        if sweep_order not in SWEEP_ORDERS:
            raise ConfigurationError(
                f"Unknown sweep order {sweep_order}, expected one of "
                f"{SWEEP_ORDERS}")

    def to_dict(self):
        """
        Return the parameters as a JSON-compatible dict.
        """
        return {"relaxation_omega": self.relaxation_omega, "tol": self.tol,
                "max_iter": self.max_iter, "sweep_order": self.sweep_order}

    @classmethod
    def from_dict(cls, values):
        """
        Create parameters from a dict produced by `to_dict`.
        """
        return cls(**values)


class ThinObstacleProblem():
    """
    Obstacle psi on the thin plane, Dirichlet data g on the box boundary.
    """

    def __init__(self, grid, obstacle_psi, boundary_g=0.0):
        """
        :grid: WeightedGrid
        :obstacle_psi: Array with one value per thin-plane node
        :boundary_g: Scalar or grid-shaped array; only the entries on
                     Dirichlet nodes are used
        """
        grid.check_thin(obstacle_psi)
        psi = np.asarray(obstacle_psi, dtype=float).reshape(-1)
        boundary = np.array(np.broadcast_to(
            np.asarray(boundary_g, dtype=float), grid.shape))
        if not np.all(np.isfinite(psi)):
            raise ConfigurationError("Obstacle contains non-finite values")
        if not np.all(np.isfinite(boundary[grid.boundary_mask])):
            raise ConfigurationError("Boundary data contain non-finite values")
        boundary[~grid.boundary_mask] = 0.0
        self.grid = grid
        self.obstacle_psi = psi
        self.boundary_g = boundary

        thin_flat = np.zeros(grid.size, dtype=bool)
        thin_flat[grid.thin_flat_indices] = True
        # interior unknowns lying on z = 0
        self._interior_thin = thin_flat[grid.interior_indices]
        lower = np.full(grid.size, -np.inf)
        lower[grid.thin_flat_indices] = psi
        self.lower_bounds = lower[grid.interior_indices]

        _, a_ib = grid.interior_operator
        self.rhs = -a_ib @ boundary.reshape(-1)[grid.boundary_indices]

    @property
    def interior_thin(self):
        """
        Return a boolean array over the interior unknowns marking thin nodes.
        """
        return self._interior_thin

    @property
    def weight_a(self):
        """
        Return the weight exponent of the grid.
        """
        return self.grid.weight_a

    def default_contact_tol(self):
        """
        Return the contact tolerance relative to the obstacle's dynamic range.
        """
        spread = float(np.ptp(self.obstacle_psi))
        return numerics.CONTACT_TOL_REL * (spread if spread > 0 else 1.0)

    def thin_boundary_mask(self):
        """
        Return a flat thin-plane mask of nodes carrying Dirichlet data.
        """
        return self.grid.boundary_mask[self.grid.thin_index].reshape(-1)

    def to_dict(self):
        """
        Return a JSON summary of the problem (without the arrays).
        """
        return {"grid": self.grid.spec.to_dict(),
                "obstacle_max": float(self.obstacle_psi.max()),
                "obstacle_min": float(self.obstacle_psi.min()),
                "boundary_max_abs": float(np.abs(self.boundary_g).max())}

    def field_from_unknowns(self, unknowns):
        """
        Return the Field with the given interior values and the problem's
        boundary data.
        """
        values = self.boundary_g.reshape(-1).copy()
        values[self.grid.interior_indices] = unknowns
        return Field(self.grid, values.reshape(self.grid.shape))

    def unknowns_from(self, initial):
        """
        Return the interior values of a Field, array or scalar.
        """
        if isinstance(initial, Field):
            if initial.grid.spec != self.grid.spec:
                raise GridMismatchError(
                    "Initial field lives on a different grid")
            values = initial.values
        else:
            values = np.broadcast_to(np.asarray(initial, dtype=float),
                                     self.grid.shape)
        return np.array(values.reshape(-1)[self.grid.interior_indices])


class SolveReport():
    """
    Solution of a thin obstacle problem together with its diagnostics.
    """
    # pylint: disable=too-many-instance-attributes,too-few-public-methods

    def __init__(self, solution, iterations, residuals, converged,
                 max_update, contact_tol, runtime=None):
        """
        :solution: Field
        :iterations: Number of sweeps done
        :residuals: Tuple (pde_residual_off_contact,
                    multiplier_sign_violation, obstacle_violation)
        :converged: True if update and residuals are below their tolerances
        :max_update: Max-norm update of the last sweep
        :contact_tol: Contact tolerance the residuals were computed with
        :runtime: Seconds spent solving
        """
        # pylint: disable=too-many-arguments
        self.solution = solution
        self.iterations = iterations
        (self.pde_residual_off_contact,
         self.multiplier_sign_violation,
         self.obstacle_violation) = residuals
        self.converged = converged
        self.max_update = max_update
        self.contact_tol = contact_tol
        self.runtime = runtime

    def to_dict(self):
        """
        Return the diagnostics as a JSON-compatible dict.
        """
        return {
            "iterations": self.iterations,
            "pde_residual_off_contact": self.pde_residual_off_contact,
            "multiplier_sign_violation": self.multiplier_sign_violation,
            "obstacle_violation": self.obstacle_violation,
            "converged": self.converged,
            "max_update": self.max_update,
            "contact_tol": self.contact_tol,
            "runtime": self.runtime,
            }


def _color_classes(grid):
    """
    Return the positions (among interior unknowns) of the two colors of the
    checkerboard ordering of the grid.
    """
    parity = np.indices(grid.shape).sum(axis=0).reshape(-1) % 2
    interior_parity = parity[grid.interior_indices]
    return [np.flatnonzero(interior_parity == color) for color in (0, 1)]


def _red_black_sweeps(problem, params, unknowns):
    """
    Generator doing red-black projected SOR sweeps in place and yielding the
    max-norm update of each sweep.

    Nodes of one color only couple to nodes of the other color, so each half
    sweep is an exact Gauss-Seidel step done as one sparse product.
    """
    a_ii, _ = problem.grid.interior_operator
    omega = params.relaxation_omega
    blocks = []
    for rows in _color_classes(problem.grid):
        blocks.append((rows, a_ii[rows], a_ii.diagonal()[rows],
                       problem.rhs[rows], problem.lower_bounds[rows]))
    while True:
        largest = 0.0
        for rows, matrix, diagonal, rhs, lower in blocks:
            old = unknowns[rows]
            relaxed = old - omega * (matrix @ unknowns - rhs) / diagonal
            new = np.maximum(relaxed, lower)
            unknowns[rows] = new
            largest = np.maximum(largest, np.max(np.abs(new - old),
                                                 initial=0.0))
        yield float(largest)


def _lexicographic_sweeps(problem, params, unknowns):
    """
    Generator doing node-by-node projected SOR sweeps in place and yielding
    the max-norm update of each sweep.
    """
    a_ii, _ = problem.grid.interior_operator
    omega = params.relaxation_omega
    indptr, indices, data = a_ii.indptr, a_ii.indices, a_ii.data
    diagonal = a_ii.diagonal()
    rhs = problem.rhs
    lower = problem.lower_bounds
    while True:
        largest = 0.0
        for row in range(len(unknowns)):
            start, stop = indptr[row], indptr[row + 1]
            residual = data[start:stop] @ unknowns[indices[start:stop]] \
                - rhs[row]
            old = unknowns[row]
            new = max(old - omega * residual / diagonal[row], lower[row])
            unknowns[row] = new
            largest = np.maximum(largest, abs(new - old))
        yield float(largest)


def solve_psor(problem, params=None, initial=None):
    """
    Solve the thin obstacle problem by projected successive over-relaxation.

    At thin-plane nodes the relaxed value is projected onto v >= psi; all
    other interior nodes are updated without projection and boundary nodes
    stay at g. Iteration stops when the max-norm update of a sweep is below
    `params.tol` or after `params.max_iter` sweeps; in both cases a report is
    returned, with `converged` telling which one happened.

    :problem: ThinObstacleProblem
    :params: SolverParams
    :initial: Optional starting Field, array or scalar (default 0)
    :returns: SolveReport
    :raises NumericalFailure: if the iteration produces non-finite values
    """
    logger = fraclab.logger.get_logger()
    params = params or SolverParams()
    unknowns = problem.unknowns_from(0.0 if initial is None else initial)
    if params.sweep_order == RED_BLACK:
        sweeps = _red_black_sweeps(problem, params, unknowns)
    else:
        sweeps = _lexicographic_sweeps(problem, params, unknowns)

    iterations = 0
    update = np.inf
    with stopwatch() as elapsed:
        for update in sweeps:
            iterations += 1
            if not np.isfinite(update):
                partial = SolveReport(problem.field_from_unknowns(unknowns),
                                      iterations, (np.nan,) * 3, False,
                                      update, np.nan)
                logger.error("Non-finite values after %d sweeps",
                             iterations)
                raise NumericalFailure(
                    f"Projected SOR produced non-finite values after "
                    f"{iterations} sweeps", report=partial)
            if iterations % 1000 == 0:
                logger.debug("Sweep %d: max update %.3e", iterations, update)
            if update < params.tol or iterations >= params.max_iter:
                break

    solution = problem.field_from_unknowns(unknowns)
    contact_tol = problem.default_contact_tol()
    residuals = complementarity_residual(solution, problem, contact_tol)
    converged = bool(update < params.tol and max(residuals)
                     <= numerics.RESIDUAL_TOL_FACTOR * params.tol)
    report = SolveReport(solution, iterations, residuals, converged,
                         float(update), contact_tol, elapsed["seconds"])
    if converged:
        logger.info("Obstacle problem solved in %d sweeps (%.2f s)",
                    iterations, elapsed["seconds"])
    else:
        logger.warning("Obstacle problem not converged after %d sweeps: "
                       "update %.3e, residuals %s", iterations, update,
                       residuals)
    return report


def normalized_residual(field, problem):
    """
    Return (A v)_i / A_ii on the interior unknowns.

    This is the discrete -L_a v scaled to the units of v; it is nonnegative
    where the constraint is active and zero elsewhere for an exact solution.
    """
    a_ii, _ = problem.grid.interior_operator
    unknowns = problem.unknowns_from(field)
    return (a_ii @ unknowns - problem.rhs) / a_ii.diagonal()


def complementarity_residual(field, problem, contact_tol=None):
    """
    Return the three max-norm diagnostics of the complementarity system:
    (pde_residual_off_contact, multiplier_sign_violation,
    obstacle_violation).

    The first two are diagonally normalized residuals of A v (units of v);
    the obstacle violation is max(psi - v) over interior thin-plane nodes.
    """
    if contact_tol is None:
        contact_tol = problem.default_contact_tol()
    residual = normalized_residual(field, problem)
    unknowns = problem.unknowns_from(field)
    thin = problem.interior_thin
    gap = unknowns - problem.lower_bounds
    contact = thin & (gap <= contact_tol)

    off_contact = np.abs(residual[~contact])
    pde = float(off_contact.max(initial=0.0))
    sign = float(max(0.0, (-residual).max(initial=0.0)))
    obstacle = float(max(0.0, (-gap[thin]).max(initial=0.0)))
    return pde, sign, obstacle


def coincidence_mask(field, problem, contact_tol=None):
    """
    Return the CoincidenceSet {v - psi <= contact_tol} on the thin plane.

    Nodes touching exactly are marked as in contact.
    """
    if contact_tol is None:
        contact_tol = problem.default_contact_tol()
    thin_values = field.values[field.grid.thin_index].reshape(-1)
    mask = thin_values - problem.obstacle_psi <= contact_tol
    return CoincidenceSet.from_mask(field.grid, mask)


def bounds_violation(field, problem):
    """
    Return how much v leaves [0, max(0, max psi) + max |g|].
    """
    upper = max(0.0, float(problem.obstacle_psi.max())) + \
        float(np.abs(problem.boundary_g).max())
    return max(0.0, -float(field.values.min()),
               float(field.values.max()) - upper)


class ComparisonReport():
    """
    Ordering of the solutions of two boundary-ordered problems.
    """
    # pylint: disable=too-few-public-methods

    def __init__(self, lower_report, upper_report, order_violation,
                 upper_bound_violation, tolerance):
        """
        :order_violation: max(u_1 - u_2), positive part
        :upper_bound_violation: max(u_2 - u_1 - eps), positive part, eps the
                                largest boundary gap
        :tolerance: Allowed violation
        """
        # pylint: disable=too-many-arguments
        self.lower_report = lower_report
        self.upper_report = upper_report
        self.order_violation = order_violation
        self.upper_bound_violation = upper_bound_violation
        self.tolerance = tolerance

    @property
    def ordered(self):
        """
        Return True if both orderings hold within the tolerance.
        """
        return (self.order_violation <= self.tolerance
                and self.upper_bound_violation <= self.tolerance)

    def to_dict(self):
        """
        Return a JSON-compatible dict.
        """
        return {"order_violation": self.order_violation,
                "upper_bound_violation": self.upper_bound_violation,
                "tolerance": self.tolerance, "ordered": self.ordered}


def _check_compatible(problem1, problem2):
    """
    Raise GridMismatchError if the problems cannot be compared.
    """
    if problem1.grid.spec != problem2.grid.spec:
        raise GridMismatchError("Compared problems live on different grids")
    if not np.array_equal(problem1.obstacle_psi, problem2.obstacle_psi):
        raise ConfigurationError("Compared problems must share the obstacle")


def comparison_run(problem1, problem2, params=None):
    """
    Solve two problems sharing the obstacle, with g_1 <= g_2, and measure
    the ordering u_1 <= u_2 <= u_1 + max(g_2 - g_1).

    :returns: ComparisonReport; the tolerance is 10 x the solver tolerance
    """
    params = params or SolverParams()
    _check_compatible(problem1, problem2)
    grid = problem1.grid
    gap = (problem2.boundary_g - problem1.boundary_g)[grid.boundary_mask]
    if gap.min(initial=0.0) < 0:
        raise ConfigurationError(
            "Boundary data of the first problem must not exceed those of the "
            f"second one (largest excess {-gap.min()})")
    epsilon = float(gap.max(initial=0.0))

    first = solve_psor(problem1, params)
    second = solve_psor(problem2, params)
    difference = first.solution.values - second.solution.values
    order = max(0.0, float(difference.max()))
    upper = max(0.0, float((-difference).max()) - epsilon)
    fraclab.logger.get_logger().debug(
        "Comparison run: order violation %.3e, upper violation %.3e",
        order, upper)
    return ComparisonReport(first, second, order, upper, 10 * params.tol)


class UniquenessReport():
    """
    Agreement of solutions started from different fields.
    """
    # pylint: disable=too-few-public-methods

    def __init__(self, reports, max_deviation, tolerance):
        self.reports = reports
        self.max_deviation = max_deviation
        self.tolerance = tolerance

    @property
    def all_converged(self):
        """
        Return True if every run converged.
        """
        return all(report.converged for report in self.reports)

    @property
    def unique(self):
        """
        Return True if all runs converged to the same field.
        """
        return self.all_converged and self.max_deviation <= self.tolerance

    def to_dict(self):
        """
        Return a JSON-compatible dict.
        """
        return {"runs": len(self.reports), "max_deviation": self.max_deviation,
                "tolerance": self.tolerance,
                "all_converged": self.all_converged, "unique": self.unique}


def standard_initial_fields(problem, seed=0, level=10.0):
    """
    Return the starting fields 0, a constant `level` and a random field with
    values in [0, level].
    """
    rng = np.random.default_rng(seed)
    return [0.0, level, rng.uniform(0, level, problem.grid.shape)]


def uniqueness_probe(problem, params=None, inits=None, seed=0):
    """
    Solve the problem from several starting fields and return the largest
    pairwise deviation of the results.

    :inits: List of at least two starting fields; defaults to
            standard_initial_fields
    :returns: UniquenessReport, tolerance 10 x the solver tolerance
    """
    params = params or SolverParams()
    if inits is None:
        inits = standard_initial_fields(problem, seed)
    if len(inits) < 2:
        raise ConfigurationError("Uniqueness probe needs at least two "
                                 "starting fields")
    reports = [solve_psor(problem, params, initial) for initial in inits]
    deviation = 0.0
    for first, second in itertools.combinations(reports, 2):
        deviation = max(deviation, float(np.abs(
            first.solution.values - second.solution.values).max()))
    for index, report in enumerate(reports):
        if not report.converged:
            fraclab.logger.get_logger().warning(
                "Uniqueness probe run %d did not converge", index)
    return UniquenessReport(reports, deviation, 10 * params.tol)


def active_set_oracle(problem):
    """
    Solve a tiny problem exactly by enumerating all contact sets.

    The unknowns off the thin plane are eliminated, leaving the LCP
    w = S v_T - c >= 0, v_T >= psi, w (v_T - psi) = 0 on the interior thin
    nodes, S being the Schur complement. Every subset of thin nodes is tried
    as the contact set; the first one satisfying all sign conditions gives
    the solution.

    :returns: (Field, boolean thin-plane contact array)
    :raises ConfigurationError: more than 12 thin unknowns or 200 nodes
    :raises NumericalFailure: no contact set satisfies the conditions
    """
    # pylint: disable=too-many-locals
    grid = problem.grid
    thin = problem.interior_thin
    n_thin = int(thin.sum())
    if n_thin > numerics.ORACLE_MAX_THIN or \
            grid.size > numerics.ORACLE_MAX_NODES:
        raise ConfigurationError(
            f"Oracle limited to {numerics.ORACLE_MAX_THIN} thin unknowns and "
            f"{numerics.ORACLE_MAX_NODES} nodes, got {n_thin} and "
            f"{grid.size}")

    a_ii = problem.grid.interior_operator[0].toarray()
    rhs = problem.rhs
    other = ~thin
    a_oo = a_ii[np.ix_(other, other)]
    a_ot = a_ii[np.ix_(other, thin)]
    a_to = a_ii[np.ix_(thin, other)]
    eliminate_matrix = np.linalg.solve(a_oo, a_ot)
    eliminate_rhs = np.linalg.solve(a_oo, rhs[other])
    schur = a_ii[np.ix_(thin, thin)] - a_to @ eliminate_matrix
    reduced_rhs = rhs[thin] - a_to @ eliminate_rhs
    psi = problem.lower_bounds[thin]
    slack = 1e-12 * max(1.0, float(np.abs(psi).max(initial=0.0)),
                        float(np.abs(reduced_rhs).max(initial=0.0)))

    for active in itertools.product((False, True), repeat=n_thin):
        active = np.array(active, dtype=bool)
        free = ~active
        values = psi.copy()
        if free.any():
            values[free] = np.linalg.solve(
                schur[np.ix_(free, free)],
                reduced_rhs[free] - schur[np.ix_(free, active)]
                @ psi[active])
        multiplier = schur @ values - reduced_rhs
        if np.all(values[free] >= psi[free] - slack) and \
                np.all(multiplier[active] >= -slack):
            unknowns = np.empty(len(thin))
            unknowns[thin] = values
            unknowns[other] = eliminate_rhs - eliminate_matrix @ values
            contact = np.zeros(grid.size, dtype=bool)
            contact[grid.interior_indices[thin][active]] = True
            thin_contact = contact[grid.thin_flat_indices]
            return problem.field_from_unknowns(unknowns), thin_contact
    raise NumericalFailure("No contact set satisfies the complementarity "
                           "conditions")


def check_m_matrix(grid):
    """
    Check the sign structure of the stiffness matrix.

    :returns: Dict with the largest off-diagonal entry (must be <= 0), the
              smallest row sum relative to the diagonal (must be >= 0 up to
              rounding), the largest asymmetry and the verdict
              `is_m_matrix`.
    """
    operator = assemble_operator(grid)
    matrix = operator.tocoo()
    diagonal = operator.diagonal()
    off = matrix.row != matrix.col
    largest_off = float(matrix.data[off].max(initial=0.0))
    row_sums = np.asarray(operator.sum(axis=1)).reshape(-1)
    scale = float(diagonal.max())
    min_row_sum = float(row_sums.min()) / scale
    asymmetry = float(abs(operator - operator.T).max()) / scale
    result = {
        "max_offdiagonal": largest_off,
        "min_row_sum": min_row_sum,
        "asymmetry": asymmetry,
        "min_diagonal": float(diagonal.min()),
        "is_m_matrix": bool(largest_off <= 0 and min_row_sum >= -1e-12
                            and asymmetry <= 1e-12 and diagonal.min() > 0),
        }
    return result


def maximum_principle_violation(grid, boundary_values):
    """
    Solve the obstacle-free problem with the given boundary data and return
    how far the interior extrema exceed the boundary extrema.
    """
    solution = solve_dirichlet(grid, boundary_values).values
    boundary = solution[grid.boundary_mask]
    interior = solution[~grid.boundary_mask]
    return max(0.0, float(interior.max() - boundary.max()),
               float(boundary.min() - interior.min()))
