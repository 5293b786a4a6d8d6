"""
Measures on the coincidence set: the Neumann density, its Riesz potential,
the barrier w_c, calibration of the Riesz constant and decay fits.

The Riesz kernel is |x - y|^-(N-1+a) for x in R^(N+1) and y on the thin
plane. A correction v is represented as

    v(x) = alpha * sum_y (-2 lambda(y)) |x - (y, 0)|^-(N-1+a) area(y),

lambda being the signed limit of |z|^a u_z at z = 0 on the coincidence set.
"""

import numpy as np
from scipy.special import roots_jacobi

from conf import numerics
from fraclab.exceptions import (
        CalibrationFailure,
        ConfigurationError,
        FitError,
        SupportProximityError,
        )
import fraclab.logger
from fraclab.utils import relative_spread, stopwatch, summed
from fraclab.weighted_grid import HALF_STORAGE, Field, solve_dirichlet

ONE_LAYER = "one_layer"
TWO_LAYER = "two_layer"
MULTIPLIER = "multiplier"
DENSITY_METHODS = (ONE_LAYER, TWO_LAYER, MULTIPLIER)


class CoincidenceSet():
    """
    Boolean mask on the thin-plane nodes with the measure of each node's cell.
    """

    def __init__(self, grid, mask, cell_areas):
        """
        :grid: WeightedGrid the mask lives on
        :mask: Flat boolean array over thin-plane nodes
        :cell_areas: Flat array of H^N measures of the thin-plane cells; in
                     axisymmetric mode the area of the annulus of each radius
        """
        grid.check_thin(mask)
        self.grid = grid
        self.mask = np.asarray(mask, dtype=bool).reshape(-1)
        self.cell_areas = np.asarray(cell_areas, dtype=float).reshape(-1)

    @classmethod
    def from_mask(cls, grid, mask):
        """
        Create a coincidence set with the grid's thin-plane cell areas.
        """
        return cls(grid, mask, grid.thin_cell_areas())

    @classmethod
    def empty(cls, grid):
        """
        Return the empty set.
        """
        return cls.from_mask(grid, np.zeros(int(np.prod(grid.thin_shape)),
                                            dtype=bool))

    def is_empty(self):
        """
        Return True if no node is marked.
        """
        return not self.mask.any()

    @property
    def count(self):
        """
        Return the number of marked nodes.
        """
        return int(self.mask.sum())

    @property
    def total_area(self):
        """
        Return the measure of the set.
        """
        return float(self.cell_areas[self.mask].sum())

    @property
    def areas(self):
        """
        Return the cell areas of the marked nodes.
        """
        return self.cell_areas[self.mask]

    def points(self):
        """
        Return the thin-plane coordinates of the marked nodes.
        """
        return self.grid.thin_plane_points()[self.mask]

    def radius(self):
        """
        Return the largest |x'| over the set, 0 for the empty set.
        """
        if self.is_empty():
            return 0.0
        return float(self.grid.thin_radii()[self.mask].max())

    def touches_boundary(self):
        """
        Return True if a marked node carries Dirichlet data.
        """
        grid = self.grid
        thin_boundary = grid.boundary_mask[grid.thin_index].reshape(-1)
        return bool((self.mask & thin_boundary).any())

    def distance_to(self, points):
        """
        Return the distance of each point of R^(N+1) to the set.

        In axisymmetric mode each marked node is the sphere |x'| = r in the
        thin plane.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_empty():
            return np.full(len(points), np.inf)
        heights = points[:, -1]
        if self.grid.axisymmetric:
            radii = np.linalg.norm(points[:, :-1], axis=1)
            planar = np.abs(radii[:, None] - self.points()[None, :, 0])
        else:
            planar = np.linalg.norm(
                points[:, None, :-1] - self.points()[None, :, :], axis=2)
        return np.sqrt(planar.min(axis=1) ** 2 + heights ** 2)

    def to_dict(self):
        """
        Return a JSON summary of the set.
        """
        return {"count": self.count, "total_area": self.total_area,
                "radius": self.radius(),
                "touches_boundary": self.touches_boundary()}


class NeumannDensity():
    """
    Signed density lambda on the nodes of a coincidence set.
    """

    def __init__(self, values, method=ONE_LAYER, disagreement=None):
        """
        :values: One value per marked node, in the mask's node order
        :method: Extraction method used
        :disagreement: Relative difference of the one- and two-layer
                       estimates, if computed
        """
        self.values = np.asarray(values, dtype=float).reshape(-1)
        self.method = method
        self.disagreement = disagreement

    def max_abs(self):
        """
        Return max |lambda|, 0 for an empty density.
        """
        return float(np.abs(self.values).max(initial=0.0))

    def positive_part(self):
        """
        Return max(lambda, 0) over the set; nonzero values contradict the
        sign condition of a solution.
        """
        return float(max(0.0, self.values.max(initial=0.0)))

    def to_dict(self):
        """
        Return a JSON summary of the density.
        """
        return {"method": self.method, "count": len(self.values),
                "max_abs": self.max_abs(),
                "positive_part": self.positive_part(),
                "disagreement": self.disagreement}


def _layer_values(field, offset):
    """
    Return the flat thin-plane array of the node layer `offset` above z = 0,
    together with its height.
    """
    grid = field.grid
    layer = grid.thin_layer + offset
    height = grid.axes[-1].nodes[layer] - grid.axes[-1].nodes[grid.thin_layer]
    return field.values[..., layer].reshape(-1), height


def _one_layer(field, mask):
    """
    lambda = (1 - a) z_1^(a-1) (u(z_1) - u(0)), exact for u = c + z^(1-a).
    """
    weight_a = field.grid.weight_a
    base, _ = _layer_values(field, 0)
    first, height = _layer_values(field, 1)
    return ((1 - weight_a) * height ** (weight_a - 1)
            * (first - base))[mask.mask]


def _two_layer(field, mask):
    """
    Fit u(z) - u(0) = lambda z^(1-a) / (1-a) + beta z^2 through the first two
    layers, exact for u = c + z^(1-a) + z^2.
    """
    weight_a = field.grid.weight_a
    base, _ = _layer_values(field, 0)
    first, z_1 = _layer_values(field, 1)
    second, z_2 = _layer_values(field, 2)
    exponent = 1 - weight_a
    determinant = z_1 ** exponent * z_2 ** 2 - z_2 ** exponent * z_1 ** 2
    scaled = ((first - base) * z_2 ** 2 - (second - base) * z_1 ** 2) \
        / determinant
    return (exponent * scaled)[mask.mask]


def _multiplier(field, mask):
    """
    lambda = -(A u)_i / area_i, the discrete flux balance of the thin cell.
    """
    grid = field.grid
    flux = (grid.operator @ field.values.reshape(-1))[grid.thin_flat_indices]
    return (-flux / mask.cell_areas)[mask.mask]


def extract_neumann_density(field, mask, method=ONE_LAYER):
    """
    Extract the Neumann density lambda = lim |z|^a u_z on the coincidence set.

    Besides the requested estimate the one- and two-layer estimates are
    compared; a relative disagreement above 5 % and positive values of
    lambda are logged as warnings.

    :field: Converged solution u (or v) as a Field
    :mask: CoincidenceSet
    :method: `one_layer`, `two_layer` or `multiplier`
    :returns: NeumannDensity, empty for an empty mask
    """
    logger = fraclab.logger.get_logger()
    if method not in DENSITY_METHODS:
        raise ConfigurationError(
            f"Unknown density method {method}, expected one of "
            f"{DENSITY_METHODS}")
    if mask.is_empty():
        return NeumannDensity(np.zeros(0), method, 0.0)

    one = _one_layer(field, mask)
    two = _two_layer(field, mask)
    scale = max(np.abs(two).max(), np.finfo(float).tiny)
    disagreement = float(np.abs(one - two).max() / scale)
    if disagreement > numerics.DENSITY_DISAGREEMENT:
        logger.warning("One- and two-layer Neumann densities differ by "
                       "%.1f %%", 100 * disagreement)
    values = {ONE_LAYER: lambda: one, TWO_LAYER: lambda: two,
              MULTIPLIER: lambda: _multiplier(field, mask)}[method]()
    density = NeumannDensity(values, method, disagreement)
    if density.positive_part() > numerics.CONTACT_TOL_REL * \
            max(1.0, density.max_abs()):
        logger.warning("Neumann density is positive on the coincidence set "
                       "(max %.3e); the solution is inconsistent with the "
                       "sign condition", density.positive_part())
    return density


class RieszParams():
    """
    Dimension, weight exponent and normalization of the Riesz kernel.
    """
    # pylint: disable=too-few-public-methods

    def __init__(self, dimension_N, weight_a, alpha):
        if not alpha > 0:
            raise ConfigurationError(
                f"Riesz constant must be positive, got {alpha}")
        self.dimension_N = int(dimension_N)
        self.weight_a = float(weight_a)
        self.alpha = float(alpha)

    @property
    def kernel_exponent(self):
        """
        Return N - 1 + a.
        """
        return self.dimension_N - 1 + self.weight_a


def _ring_quadrature(dimension_N):
    """
    Return nodes t = cos(theta) and normalized weights for averaging over a
    sphere S^(N-1) a function of the angle to a fixed direction.
    """
    if dimension_N == 1:
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    exponent = (dimension_N - 3) / 2
    nodes, weights = roots_jacobi(numerics.RING_QUADRATURE_POINTS, exponent,
                                  exponent)
    return nodes, weights / weights.sum()


def _kernel_matrix(support, points, exponent):
    """
    Return K[i, j] = (average over node j of the support of)
    |x_i - y|^-exponent.
    """
    heights = points[:, -1]
    if support.grid.axisymmetric:
        nodes, weights = _ring_quadrature(support.grid.dimension_N)
        radii = np.linalg.norm(points[:, :-1], axis=1)
        rings = support.points()[:, 0]
        squared = (radii[:, None, None] ** 2 + rings[None, :, None] ** 2
                   - 2 * radii[:, None, None] * rings[None, :, None]
                   * nodes[None, None, :] + heights[:, None, None] ** 2)
        return np.maximum(squared, 0) ** (-exponent / 2) @ weights
    planar = points[:, None, :-1] - support.points()[None, :, :]
    squared = (planar ** 2).sum(axis=2) + heights[:, None] ** 2
    return squared ** (-exponent / 2)


def _kernel_sum(weights, support, points, exponent, deterministic):
    """
    Return sum_j weights_j K(x_i, y_j) for every point, checking the distance
    to the support first.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if support.is_empty():
        return np.zeros(len(points))
    if points.shape[1] != support.grid.dimension_N + 1:
        raise ConfigurationError(
            f"Points in R^{points.shape[1]} given for N = "
            f"{support.grid.dimension_N}")
    distance = support.distance_to(points)
    too_close = distance < support.grid.spacing * (1 - 1e-12)
    if too_close.any():
        raise SupportProximityError(
            f"Potential requested at {points[too_close][0].tolist()}, "
            f"closer than one cell ({support.grid.spacing}) to the support")
    terms = _kernel_matrix(support, points, exponent) * weights[None, :]
    if deterministic:
        return np.array([summed(row, deterministic=True) for row in terms])
    return terms.sum(axis=1)


def riesz_potential(density, mask, params, points, deterministic=False):
    """
    Evaluate alpha * sum (-2 lambda) |x - y|^-(N-1+a) area(y) by midpoint
    quadrature over the coincidence set.

    :density: NeumannDensity on `mask`
    :mask: CoincidenceSet
    :params: RieszParams
    :points: A point of R^(N+1) or an array of them
    :deterministic: Use correctly rounded sums
    :returns: Float for a single point, array otherwise
    :raises SupportProximityError: for points within one cell of the support
    """
    single = np.ndim(points) == 1
    weights = -2 * density.values * mask.areas
    values = params.alpha * _kernel_sum(weights, mask, points,
                                        params.kernel_exponent,
                                        deterministic)
    return float(values[0]) if single else values


def barrier_wc(constant_c, support, params, points, deterministic=False):
    """
    Evaluate the barrier w_c(x) = sum c |x - y|^-(N-1+a) area(y) over the
    support.

    :constant_c: Positive density of the barrier
    :support: CoincidenceSet carrying the barrier
    :params: RieszParams (alpha is not used)
    """
    single = np.ndim(points) == 1
    weights = np.full(support.count, float(constant_c)) * support.areas
    values = _kernel_sum(weights, support, points, params.kernel_exponent,
                         deterministic)
    return float(values[0]) if single else values


def barrier_constant(density, params, safety=numerics.BARRIER_SAFETY):
    """
    Return a density c with c >= 2 alpha |lambda| everywhere, so that
    w_c dominates the Riesz representation of the correction.
    """
    return safety * 2 * params.alpha * max(density.max_abs(),
                                           np.finfo(float).tiny)


class CalibrationResult():
    """
    Calibrated Riesz constant with its diagnostics.
    """
    # pylint: disable=too-few-public-methods,too-many-instance-attributes

    def __init__(self, spec, alpha, spread, probes, source_radius,
                 runtime=None):
        # pylint: disable=too-many-arguments
        self.spec = spec
        self.alpha = alpha
        self.spread = spread
        self.probes = probes
        self.source_radius = source_radius
        self.runtime = runtime

    @property
    def params(self):
        """
        Return the RieszParams with the calibrated constant.
        """
        return RieszParams(self.spec.dimension_N, self.spec.weight_a,
                           self.alpha)

    def to_dict(self):
        """
        Return a JSON-compatible dict.
        """
        return {"N": self.spec.dimension_N, "a": self.spec.weight_a,
                "h": self.spec.spacing, "L": self.spec.half_extent_L,
                "mode": self.spec.mode, "alpha": self.alpha,
                "spread": self.spread, "probes": self.probes,
                "source_radius": self.source_radius,
                "runtime": self.runtime}


def calibrate_alpha(grid, source_radius=None):
    """
    Determine the Riesz constant alpha for the grid's N and a numerically.

    A density lambda = -1 is put on the disc |x'| <= source_radius. The exact
    potential w = alpha W, with W the unnormalized Riesz sum, satisfies the
    discrete equations with the source of the disc and boundary values
    alpha W. By linearity w = w_0 + alpha w_1, w_0 solving the source problem
    with zero boundary data and w_1 the source-free problem with boundary
    data W. At every probe node alpha = w_0 / (W - w_1); the median over the
    probes is returned.

    :grid: WeightedGrid with L >= 8 x source_radius
    :source_radius: Defaults to two thin-plane cells
    :returns: CalibrationResult
    :raises ConfigurationError: box too small for the source or N - 1 + a
                                <= 0
    :raises CalibrationFailure: the probe ratios spread more than 10 %
    """
    # pylint: disable=too-many-locals
    logger = fraclab.logger.get_logger()
    spec = grid.spec
    if spec.storage != HALF_STORAGE:
        raise ConfigurationError("Calibration runs on half-storage grids")
    if spec.dimension_N - 1 + spec.weight_a <= 0:
        raise ConfigurationError(
            f"The kernel |x|^-(N-1+a) does not decay for N = "
            f"{spec.dimension_N} and a = {spec.weight_a}")
    if source_radius is None:
        source_radius = numerics.CALIBRATION_SOURCE_CELLS * grid.spacing
    if spec.half_extent_L < numerics.CALIBRATION_MIN_BOX_RATIO * \
            source_radius * (1 - 1e-12):
        raise ConfigurationError(
            f"Calibration needs L >= {numerics.CALIBRATION_MIN_BOX_RATIO} x "
            f"the source radius {source_radius}, got L = "
            f"{spec.half_extent_L}")

    with stopwatch() as elapsed:
        disc = CoincidenceSet.from_mask(
            grid, grid.thin_radii() <= source_radius * (1 + 1e-12))
        density = NeumannDensity(-np.ones(disc.count))
        unit = RieszParams(spec.dimension_N, spec.weight_a, 1.0)

        source = np.zeros(grid.shape)
        source[grid.thin_index] = (disc.mask * disc.cell_areas).reshape(
            grid.thin_shape)
        direct = solve_dirichlet(grid, 0.0, source).values.reshape(-1)

        points = grid.embedded_points()
        boundary = np.zeros(grid.size)
        boundary[grid.boundary_indices] = riesz_potential(
            density, disc, unit, points[grid.boundary_indices])
        correction = solve_dirichlet(
            grid, boundary.reshape(grid.shape)).values.reshape(-1)

        distance = np.linalg.norm(points, axis=1)
        low, high = numerics.CALIBRATION_PROBE_RANGE
        probes = np.flatnonzero(
            (distance >= low * spec.half_extent_L)
            & (distance <= high * spec.half_extent_L)
            & ~grid.boundary_mask.reshape(-1))
        exact = riesz_potential(density, disc, unit, points[probes])
        ratios = direct[probes] / (exact - correction[probes])
        alpha = float(np.median(ratios))
        spread = relative_spread(ratios)

    result = CalibrationResult(spec, alpha, spread, len(probes),
                               source_radius, elapsed["seconds"])
    logger.info("Calibrated alpha = %.6g for N = %d, a = %g, h = %g "
                "(spread %.2f %% over %d probes)", alpha, spec.dimension_N,
                spec.weight_a, spec.spacing, 100 * spread, len(probes))
    if not alpha > 0 or spread > numerics.CALIBRATION_SPREAD_MAX:
        raise CalibrationFailure(
            f"Calibration ratios spread {100 * spread:.1f} % (alpha "
            f"{alpha:.6g}); the grid is too coarse or too small",
            report=result)
    return result


class DecayFit():
    """
    Power law |value| ~ prefactor * radius^exponent fitted in log-log scale.
    """
    # pylint: disable=too-few-public-methods

    def __init__(self, exponent, prefactor, r_squared):
        self.exponent = exponent
        self.prefactor = prefactor
        self.r_squared = r_squared

    def to_dict(self):
        """
        Return a JSON-compatible dict.
        """
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "r_squared": self.r_squared}


def decay_exponent_fit(radii, values):
    """
    Fit log |value| = log C + exponent * log radius by least squares.

    :radii: At least 5 positive radii spanning a factor of at least 4
    :values: Nonzero values of a common sign
    :returns: DecayFit with the coefficient of determination
    :raises FitError: too few radii, too short a span, zeros or sign changes
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(radii) < numerics.MIN_DECAY_RADII:
        raise FitError(f"Decay fit needs at least {numerics.MIN_DECAY_RADII} "
                       f"radii, got {len(radii)}")
    if radii.min() <= 0 or \
            radii.max() < numerics.MIN_DECAY_SPAN * radii.min() * (1 - 1e-12):
        raise FitError(f"Radii must be positive and span a factor of "
                       f"{numerics.MIN_DECAY_SPAN}, got {radii.min()} to "
                       f"{radii.max()}")
    if np.any(values == 0) or not (np.all(values > 0)
                                   or np.all(values < 0)):
        raise FitError("Decay fit values must be nonzero and of one sign")

    log_r = np.log(radii)
    log_v = np.log(np.abs(values))
    slope, intercept = np.polyfit(log_r, log_v, 1)
    predicted = slope * log_r + intercept
    total = float(((log_v - log_v.mean()) ** 2).sum())
    residual = float(((log_v - predicted) ** 2).sum())
    r_squared = 1.0 if total == 0 else 1 - residual / total
    return DecayFit(float(slope), float(np.exp(intercept)), r_squared)


def density_field(grid, mask, density):
    """
    Return a Field that is lambda on the masked thin nodes and 0 elsewhere,
    for export.
    """
    values = np.zeros(grid.shape)
    thin = np.zeros(int(np.prod(grid.thin_shape)))
    thin[mask.mask] = density.values
    values[grid.thin_index] = thin.reshape(grid.thin_shape)
    return Field(grid, values)
