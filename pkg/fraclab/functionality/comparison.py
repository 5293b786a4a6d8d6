"""
Comparison principle, maximum principle and oracle checks of the solver
"""

import numpy as np

from fraclab.functionality.base import Functionality
from fraclab.io.reports import CheckResult
from fraclab.obstacle_solver import (
        SolverParams,
        ThinObstacleProblem,
        active_set_oracle,
        check_m_matrix,
        comparison_run,
        maximum_principle_violation,
        solve_psor,
        )
from fraclab.utils import stopwatch
from fraclab.weighted_grid import (
        AXISYMMETRIC,
        FULL_TENSOR,
        Field,
        GridSpec,
        build_grid,
        restrict_to_thin_plane,
        )

COMPARISON_ANCHOR = ("solutions of boundary-ordered thin obstacle problems "
                     "are ordered: v_1 <= v_2 <= v_1 + eps")
MAXIMUM_ANCHOR = ("the discrete operator is an M-matrix, so solutions of the "
                  "obstacle-free problem take their extrema on the boundary")
ORACLE_ANCHOR = ("projected SOR solves the discrete complementarity problem "
                 "of the thin obstacle problem")

# (mode, N, nodes per axis) of the tiny oracle instances
TINY_LAYOUTS = ((FULL_TENSOR, 1, 9), (FULL_TENSOR, 1, 11),
                (AXISYMMETRIC, 2, 21), (AXISYMMETRIC, 3, 21))
TINY_WEIGHTS = (-0.5, 0.0, 0.5)
ORACLE_TOL = 1e-7
MAXIMUM_TOL = 1e-10


def tiny_problem(rng):
    """
    Return a random ThinObstacleProblem small enough for the active-set
    oracle.
    """
    mode, dimension_N, nodes = TINY_LAYOUTS[rng.integers(len(TINY_LAYOUTS))]
    weight_a = TINY_WEIGHTS[rng.integers(len(TINY_WEIGHTS))]
    grid = build_grid(GridSpec(dimension_N, 1.0, nodes, weight_a, mode))
    psi = rng.uniform(-0.5, 1.0, int(np.prod(grid.thin_shape)))
    boundary = rng.uniform(0.0, 0.2, grid.shape)
    return ThinObstacleProblem(grid, psi, boundary)


def oracle_equivalence(cases, seed=0):
    """
    Compare projected SOR with exhaustive enumeration on random tiny
    problems.

    :returns: (largest max-norm difference, list of per-case dicts)
    """
    rng = np.random.default_rng(seed)
    params = SolverParams(relaxation_omega=1.2, tol=1e-13, max_iter=200000)
    largest = 0.0
    cases_done = []
    for _ in range(cases):
        problem = tiny_problem(rng)
        exact, contact = active_set_oracle(problem)
        result = solve_psor(problem, params)
        difference = float(np.abs(result.solution.values
                                  - exact.values).max())
        largest = max(largest, difference)
        cases_done.append({"grid": problem.grid.spec.to_dict(),
                           "contact_nodes": int(contact.sum()),
                           "difference": difference})
    return largest, cases_done


def comparison_cases(grid, obstacle_psi, params, cases, seed=0):
    """
    Solve pairs of problems with randomly ordered boundary data g_1 <= g_2.

    :returns: List of ComparisonReports
    """
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(cases):
        lower = rng.uniform(0.0, 0.1, grid.shape)
        upper = lower + rng.uniform(0.0, 0.05, grid.shape)
        reports.append(comparison_run(
            ThinObstacleProblem(grid, obstacle_psi, lower),
            ThinObstacleProblem(grid, obstacle_psi, upper), params))
    return reports


def maximum_principle_cases(grid, solves, seed=0):
    """
    Return the largest interior overshoot of `solves` obstacle-free problems
    with random boundary data in [-1, 1].
    """
    rng = np.random.default_rng(seed)
    return max((maximum_principle_violation(grid,
                                            rng.uniform(-1, 1, grid.shape))
                for _ in range(solves)), default=0.0)


class Comparison(Functionality):
    """
    Randomized checks of the comparison and maximum principles and of the
    solver against the exact oracle.
    """

    command = "comparison"

    def act(self, config):
        """
        Run the comparison cases on the configured grid, the obstacle-free
        solves and the oracle instances.
        """
        report = self._new_report(config)
        grid = build_grid(config.grid_spec(self.refine))
        params = config.solver_params()
        p_field = Field.sample(grid, config.polynomial().evaluate)
        obstacle = -restrict_to_thin_plane(p_field)

        with stopwatch() as elapsed:
            runs = comparison_cases(grid, obstacle, params,
                                    config.numerics("comparison_cases"),
                                    config.seed)
        report.add(CheckResult(
            "comparison_principle",
            len(runs) >= 10 and all(run.ordered for run in runs),
            [run.to_dict() for run in runs], 10 * params.tol,
            COMPARISON_ANCHOR, runtime=elapsed["seconds"]))

        matrix = check_m_matrix(grid)
        report.add(CheckResult("m_matrix", matrix["is_m_matrix"], matrix,
                               None, MAXIMUM_ANCHOR))
        with stopwatch() as elapsed:
            overshoot = maximum_principle_cases(
                grid, config.numerics("harmonic_solves"), config.seed)
        report.add(CheckResult("maximum_principle", overshoot <= MAXIMUM_TOL,
                               overshoot, MAXIMUM_TOL, MAXIMUM_ANCHOR,
                               runtime=elapsed["seconds"]))

        with stopwatch() as elapsed:
            largest, cases = oracle_equivalence(
                config.numerics("oracle_cases"), config.seed)
        report.add(CheckResult("oracle_equivalence",
                               len(cases) >= 25 and largest <= ORACLE_TOL,
                               largest, ORACLE_TOL, ORACLE_ANCHOR,
                               note=f"{len(cases)} tiny instances",
                               runtime=elapsed["seconds"]))
        report.details["oracle_cases"] = cases
        return self._finish(report, config)

    def help(self):
        return ("Check the comparison principle, the maximum principle and "
                "projected SOR against exhaustive enumeration")
