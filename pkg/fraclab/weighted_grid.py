"""
Finite-volume discretization of the degenerate operator
L_a u = div(|z|^a grad u) on truncated symmetric boxes.

Two layouts are supported:
    - full tensor grids over [-L, L]^N x [0, L] for the thin-plane dimension
      N <= 2,
    - an axisymmetric reduction on (r, z) in [0, L] x [0, L] for data that is
      radially symmetric in x', with the operator
      div_(r,z)(r^(N-1) |z|^a grad u) / r^(N-1).

Only the half z >= 0 is stored; the even reflection across z = 0 is implicit
in the half cells of the z = 0 layer. Every grid is a tensor product of 1-D
axes, and the stiffness matrix is assembled as a sum of Kronecker products of
1-D stiffness matrices and diagonal measure matrices.
"""

import functools

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.special import gamma

from fraclab.exceptions import ConfigurationError

FULL_TENSOR = "full_tensor"
AXISYMMETRIC = "axisymmetric"
MODES = (FULL_TENSOR, AXISYMMETRIC)

HALF_STORAGE = "half"
FULL_STORAGE = "full"


class GridMismatchError(ConfigurationError):
    """
    A field or array does not live on the grid it is used with.
    """


def sphere_area(dimension_N):
    """
    Return the area of the unit sphere S^(N-1) in R^N.

    For N = 1 the "sphere" consists of two points.
    """
    return 2 * np.pi ** (dimension_N / 2) / gamma(dimension_N / 2)


class GridSpec():
    """
    Description of a truncated box and its node layout.
    """
    # pylint: disable=too-many-instance-attributes

    def __init__(self, dimension_N, half_extent_L, nodes_per_axis, weight_a,
                 mode=FULL_TENSOR, z_grading=1.0, storage=HALF_STORAGE):
        """
        Create and validate a grid specification.

        :dimension_N: Dimension of the thin plane
        :half_extent_L: The box is [-L, L]^(N+1)
        :nodes_per_axis: Number of nodes across [-L, L]; odd, at least 9, so
                         that z = 0 is a node layer. Half axes ([0, L]) carry
                         (nodes_per_axis + 1) / 2 nodes.
        :weight_a: Exponent of the weight |z|^a, in (-1, 1)
        :mode: `full_tensor` or `axisymmetric`
        :z_grading: Ratio of consecutive z spacings. 1 gives a uniform grid,
                    larger values refine geometrically toward z = 0.
        :storage: `half` (z >= 0 with implicit reflection) or `full` (the
                  whole z range, used for checking the reflection)
        """
        # pylint: disable=too-many-arguments
        self.dimension_N = int(dimension_N)
        self.half_extent_L = float(half_extent_L)
        self.nodes_per_axis = int(nodes_per_axis)
        self.weight_a = float(weight_a)
        self.mode = mode
        self.z_grading = float(z_grading)
        self.storage = storage
        self._validate()

    def _validate(self):
        """
        Raise a ConfigurationError if the specification is not admissible.
        """
        if self.dimension_N < 1:
            raise ConfigurationError(
                f"Thin-plane dimension must be at least 1, got "
                f"{self.dimension_N}")
        if not self.half_extent_L > 0:
            raise ConfigurationError(
                f"Box half extent must be positive, got {self.half_extent_L}")
        if self.nodes_per_axis % 2 == 0:
            raise ConfigurationError(
                f"nodes_per_axis must be odd so that z = 0 is a node layer, "
                f"got {self.nodes_per_axis}")
        if self.nodes_per_axis < 9:
            raise ConfigurationError(
                f"nodes_per_axis must be at least 9, got "
                f"{self.nodes_per_axis}")
        if not -1 < self.weight_a < 1:
            raise ConfigurationError(
                f"Weight exponent a must lie in (-1, 1), got {self.weight_a}")
        if self.mode not in MODES:
            raise ConfigurationError(
                f"Unknown grid mode {self.mode}, expected one of {MODES}")
        if self.mode == FULL_TENSOR and self.dimension_N > 2:
            raise ConfigurationError(
                "Full tensor grids are limited to N + 1 <= 3 dimensions; use "
                "the axisymmetric mode for radially symmetric data with "
                f"N = {self.dimension_N}")
        if self.z_grading < 1:
            raise ConfigurationError(
                f"z_grading must be at least 1, got {self.z_grading}")
        if self.storage not in (HALF_STORAGE, FULL_STORAGE):
            raise ConfigurationError(f"Unknown storage {self.storage}")

    @property
    def spacing(self):
        """
        Return the uniform spacing of the thin-plane axes.
        """
        return 2 * self.half_extent_L / (self.nodes_per_axis - 1)

    @property
    def half_nodes(self):
        """
        Return the number of nodes on a half axis [0, L].
        """
        return (self.nodes_per_axis + 1) // 2

    def refined(self, levels=1):
        """
        Return a copy with the number of intervals multiplied by 2^levels.
        """
        intervals = (self.nodes_per_axis - 1) * 2 ** int(levels)
        return self.replace(nodes_per_axis=intervals + 1)

    def replace(self, **changes):
        """
        Return a copy of this specification with the given fields changed.
        """
        values = self.to_dict()
        values.update(changes)
        return GridSpec(**values)

    def to_dict(self):
        """
        Return the specification as a JSON-compatible dict.
        """
        return {
            "dimension_N": self.dimension_N,
            "half_extent_L": self.half_extent_L,
            "nodes_per_axis": self.nodes_per_axis,
            "weight_a": self.weight_a,
            "mode": self.mode,
            "z_grading": self.z_grading,
            "storage": self.storage,
            }

    @classmethod
    def from_dict(cls, values):
        """
        Create a specification from a dict produced by `to_dict`.
        """
        return cls(**values)

    def __eq__(self, other):
        return isinstance(other, GridSpec) and \
            self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(sorted(self.to_dict().items())))

    def __repr__(self):
        return f"GridSpec({self.to_dict()})"


class Axis():
    """
    One tensor direction of a grid: node coordinates, dual cells and the
    per-direction factors of the finite-volume weights.
    """
    # pylint: disable=too-many-instance-attributes,too-few-public-methods

    def __init__(self, kind, nodes, dirichlet_start, dirichlet_end,
                 weight_a=0.0, dimension_N=1):
        """
        :kind: `x` (thin Cartesian axis), `r` (radial axis) or `z`
        :nodes: Increasing node coordinates
        :dirichlet_start: True if the first node carries boundary data
        :dirichlet_end: True if the last node carries boundary data
        :weight_a: Weight exponent, used by the z axis
        :dimension_N: Thin-plane dimension, used by the radial axis
        """
        # pylint: disable=too-many-arguments
        self.kind = kind
        self.nodes = np.asarray(nodes, dtype=float)
        self.dirichlet_start = dirichlet_start
        self.dirichlet_end = dirichlet_end
        self.steps = np.diff(self.nodes)

        midpoints = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        self.lower = np.concatenate(([self.nodes[0]], midpoints))
        self.upper = np.concatenate((midpoints, [self.nodes[-1]]))

        if kind == "x":
            self.volume = self.upper - self.lower
            self.measure = self.volume
            self.face_weight = np.ones_like(midpoints)
        elif kind == "r":
            area = sphere_area(dimension_N)
            self.volume = area * (self.upper ** dimension_N
                                  - self.lower ** dimension_N) / dimension_N
            self.measure = self.volume
            self.face_weight = area * midpoints ** (dimension_N - 1)
        elif kind == "z":
            self.volume = self.upper - self.lower
            self.measure = (_weighted_primitive(self.upper, weight_a)
                            - _weighted_primitive(self.lower, weight_a))
            self.face_weight = np.abs(midpoints) ** weight_a
        else:
            raise ValueError(f"Unknown axis kind {kind}")

    def __len__(self):
        return len(self.nodes)

    def stiffness(self):
        """
        Return the 1-D stiffness matrix sum_f c_f (e_i - e_j)(e_i - e_j)^T
        with face conductances c_f = face_weight / step.
        """
        conductance = self.face_weight / self.steps
        diagonal = np.zeros(len(self.nodes))
        diagonal[:-1] += conductance
        diagonal[1:] += conductance
        return scipy.sparse.diags(
            [-conductance, diagonal, -conductance], [-1, 0, 1], format="csr")


def _weighted_primitive(t, weight_a):
    """
    Return the antiderivative of |t|^a that vanishes at 0.
    """
    return np.sign(t) * np.abs(t) ** (1 + weight_a) / (1 + weight_a)


def _z_nodes(spec):
    """
    Return the z coordinates of the half axis [0, L], possibly graded.
    """
    intervals = spec.half_nodes - 1
    if spec.z_grading == 1:
        return np.linspace(0, spec.half_extent_L, intervals + 1)
    ratio = spec.z_grading
    first = spec.half_extent_L * (ratio - 1) / (ratio ** intervals - 1)
    steps = first * ratio ** np.arange(intervals)
    nodes = np.concatenate(([0.0], np.cumsum(steps)))
    nodes[-1] = spec.half_extent_L
    return nodes


class StencilWeights():
    """
    Flux weights and cell volumes of a grid.

    The weight of a face normal to axis k is the face measure times the
    weight of that face: for z-faces |z_face|^a at the face midpoint; for
    faces parallel to z, the exact average of |z|^a over the dual cell (so
    0^a is never evaluated); in axisymmetric mode additionally
    |S^(N-1)| r_face^(N-1) for r-faces, and the radial measure elsewhere.
    """

    def __init__(self, axes):
        """
        :axes: List of Axis objects, the last one being z
        """
        self._axes = axes

    def face_weights(self, axis_index):
        """
        Return the weights of all faces normal to the given axis.

        The returned array has the grid shape, except for one entry less in
        the direction of the axis.
        """
        factors = []
        for index, axis in enumerate(self._axes):
            if index == axis_index:
                factors.append(axis.face_weight)
            else:
                factors.append(axis.measure)
        return functools.reduce(np.multiply.outer, factors)

    def conductances(self, axis_index):
        """
        Return face weights divided by the node distance across each face.
        """
        weights = self.face_weights(axis_index)
        steps = self._axes[axis_index].steps
        shape = [1] * len(self._axes)
        shape[axis_index] = len(steps)
        return weights / steps.reshape(shape)

    @property
    def cell_volumes(self):
        """
        Return the (unweighted) volume of each dual cell.
        """
        return functools.reduce(np.multiply.outer,
                                [axis.volume for axis in self._axes])


class WeightedGrid():
    """
    An immutable grid handle with precomputed stencil weights.
    """

    def __init__(self, spec):
        """
        Build the axes of the grid described by `spec`.

        :spec: GridSpec
        """
        self.spec = spec
        half_z = _z_nodes(spec)
        if spec.storage == FULL_STORAGE:
            z_nodes = np.concatenate((-half_z[:0:-1], half_z))
            z_axis = Axis("z", z_nodes, True, True, weight_a=spec.weight_a)
            self.thin_layer = len(half_z) - 1
        else:
            z_axis = Axis("z", half_z, False, True, weight_a=spec.weight_a)
            self.thin_layer = 0

        length = spec.half_extent_L
        if spec.mode == AXISYMMETRIC:
            r_nodes = np.linspace(0, length, spec.half_nodes)
            thin_axes = [Axis("r", r_nodes, False, True,
                              dimension_N=spec.dimension_N)]
        else:
            x_nodes = np.linspace(-length, length, spec.nodes_per_axis)
            thin_axes = [Axis("x", x_nodes, True, True)
                         for _ in range(spec.dimension_N)]
        self.axes = thin_axes + [z_axis]
        self.weights = StencilWeights(self.axes)
        self.shape = tuple(len(axis) for axis in self.axes)

    @property
    def weight_a(self):
        """
        Return the weight exponent.
        """
        return self.spec.weight_a

    @property
    def dimension_N(self):
        """
        Return the thin-plane dimension.
        """
        return self.spec.dimension_N

    @property
    def axisymmetric(self):
        """
        Return True for the (r, z) reduction.
        """
        return self.spec.mode == AXISYMMETRIC

    @property
    def spacing(self):
        """
        Return the thin-plane spacing.
        """
        return self.spec.spacing

    @property
    def size(self):
        """
        Return the total number of nodes.
        """
        return int(np.prod(self.shape))

    @property
    def thin_index(self):
        """
        Return the index tuple selecting the z = 0 layer.
        """
        return (Ellipsis, self.thin_layer)

    @property
    def thin_shape(self):
        """
        Return the shape of thin-plane arrays.
        """
        return self.shape[:-1]

    def coordinates(self):
        """
        Return a list of 1-D coordinate arrays, one per axis.
        """
        return [axis.nodes for axis in self.axes]

    def node_points(self):
        """
        Return the grid coordinates of all nodes, shape grid.shape + (dim,).

        In axisymmetric mode the coordinates are (r, z).
        """
        mesh = np.meshgrid(*self.coordinates(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def embedded_points(self):
        """
        Return all nodes as points of R^(N+1), shape (size, N+1).

        Axisymmetric nodes (r, z) are embedded as (r, 0, ..., 0, z).
        """
        points = self.node_points().reshape(self.size, -1)
        if not self.axisymmetric:
            return points
        embedded = np.zeros((self.size, self.dimension_N + 1))
        embedded[:, 0] = points[:, 0]
        embedded[:, -1] = points[:, -1]
        return embedded

    def thin_plane_points(self):
        """
        Return the thin-plane node coordinates, shape (n_thin, thin_dim).

        The thin dimension is N for full tensor grids and 1 (the radius) for
        axisymmetric ones.
        """
        mesh = np.meshgrid(*self.coordinates()[:-1], indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, len(self.axes) - 1)

    def thin_cell_areas(self):
        """
        Return the H^N measure of each thin-plane dual cell.
        """
        return functools.reduce(
            np.multiply.outer,
            [axis.measure for axis in self.axes[:-1]]).reshape(-1)

    def thin_radii(self):
        """
        Return |x'| for each thin-plane node.
        """
        return np.linalg.norm(self.thin_plane_points(), axis=1)

    @functools.cached_property
    def boundary_mask(self):
        """
        Return a boolean array marking nodes that carry Dirichlet data.
        """
        mask = np.zeros(self.shape, dtype=bool)
        for index, axis in enumerate(self.axes):
            selector = [slice(None)] * len(self.axes)
            if axis.dirichlet_start:
                selector[index] = 0
                mask[tuple(selector)] = True
            if axis.dirichlet_end:
                selector[index] = -1
                mask[tuple(selector)] = True
        return mask

    @functools.cached_property
    def interior_indices(self):
        """
        Return the flat indices of the unknown (non-Dirichlet) nodes.
        """
        return np.flatnonzero(~self.boundary_mask.reshape(-1))

    @functools.cached_property
    def boundary_indices(self):
        """
        Return the flat indices of the Dirichlet nodes.
        """
        return np.flatnonzero(self.boundary_mask.reshape(-1))

    @functools.cached_property
    def thin_flat_indices(self):
        """
        Return the flat indices of the z = 0 layer, in thin-plane order.
        """
        index = np.arange(self.size).reshape(self.shape)
        return index[self.thin_index].reshape(-1)

    @functools.cached_property
    def operator(self):
        """
        Return the symmetric stiffness matrix A (CSR).

        For interior nodes the discrete operator is L_a u = -(A u) / V, V the
        cell volume; rows of boundary nodes are assembled the same way but are
        never used as equations.
        """
        terms = []
        for index, axis in enumerate(self.axes):
            factors = [scipy.sparse.diags(other.measure)
                       for other in self.axes]
            factors[index] = axis.stiffness()
            terms.append(functools.reduce(
                lambda left, right: scipy.sparse.kron(left, right,
                                                      format="csr"),
                factors))
        return functools.reduce(lambda left, right: left + right,
                                terms).tocsr()

    @functools.cached_property
    def interior_operator(self):
        """
        Return the blocks (A_II, A_IB) of the stiffness matrix.
        """
        rows = self.operator[self.interior_indices]
        return (rows[:, self.interior_indices].tocsr(),
                rows[:, self.boundary_indices].tocsr())

    @functools.cached_property
    def interior_factorization(self):
        """
        Return a sparse LU factorization of A_II.
        """
        return scipy.sparse.linalg.splu(self.interior_operator[0].tocsc())

    @functools.cached_property
    def cell_volumes(self):
        """
        Return the cell volumes, shape grid.shape.
        """
        return self.weights.cell_volumes

    def check_field(self, values):
        """
        Raise GridMismatchError unless `values` has the grid shape.
        """
        if np.shape(values) != self.shape:
            raise GridMismatchError(
                f"Array of shape {np.shape(values)} does not match grid of "
                f"shape {self.shape}")

    def check_thin(self, values):
        """
        Raise GridMismatchError unless `values` is a thin-plane array.
        """
        if np.size(values) != int(np.prod(self.thin_shape)):
            raise GridMismatchError(
                f"Thin-plane array of size {np.size(values)} does not match "
                f"thin plane of shape {self.thin_shape}")


class Field():
    """
    Real values on the nodes of a grid (z >= 0 half only).
    """

    def __init__(self, grid, values):
        """
        :grid: WeightedGrid
        :values: Array of the grid shape
        """
        values = np.asarray(values, dtype=float)
        grid.check_field(values)
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid):
        """
        Return the zero field on the grid.
        """
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid, value):
        """
        Return a constant field.
        """
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def sample(cls, grid, function):
        """
        Tabulate a function of points in R^(N+1) on the grid nodes.

        :function: Callable taking an array of shape (n_points, N+1) and
                   returning n_points values
        """
        values = np.asarray(function(grid.embedded_points()), dtype=float)
        return cls(grid, values.reshape(grid.shape))

    def copy(self):
        """
        Return an independent copy.
        """
        return Field(self.grid, self.values.copy())

    def __add__(self, other):
        return Field(self.grid, self.values + _values_of(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _values_of(other))

    def max_abs(self):
        """
        Return the maximum norm of the field.
        """
        return float(np.max(np.abs(self.values)))


def _values_of(other):
    """
    Return the values array of a Field or the argument itself.
    """
    return other.values if isinstance(other, Field) else other


def build_grid(spec):
    """
    Validate the specification and return a grid handle.

    :spec: GridSpec or a dict of GridSpec fields
    """
    if isinstance(spec, dict):
        spec = GridSpec.from_dict(spec)
    return WeightedGrid(spec)


def apply_La(grid, field):
    """
    Return the discrete L_a field of cell residuals.

    The finite-volume divergence of the weighted fluxes is divided by the
    cell volume at every interior node; at z = 0 the half cell realises the
    even reflection. Dirichlet nodes get the value 0.

    :grid: WeightedGrid
    :field: Field or array on the grid
    """
    values = _values_of(field)
    grid.check_field(values)
    flux = grid.operator @ values.reshape(-1)
    result = -flux.reshape(grid.shape) / grid.cell_volumes
    result[grid.boundary_mask] = 0.0
    return Field(grid, result)


def apply_La_axisym(grid, field):
    """
    Return the discrete axisymmetric operator
    div_(r,z)(r^(N-1) |z|^a grad u) / r^(N-1), with reflection at r = 0.

    :grid: Axisymmetric WeightedGrid
    :field: Field or array on the grid
    """
    if not grid.axisymmetric:
        raise GridMismatchError("apply_La_axisym needs an axisymmetric grid")
    return apply_La(grid, field)


def restrict_to_thin_plane(field):
    """
    Return the values at the z = 0 layer as a flat thin-plane array.

    For axisymmetric grids this is the radial profile.
    """
    return field.values[field.grid.thin_index].reshape(-1)


def solve_dirichlet(grid, boundary_values=0.0, source=None):
    """
    Solve the obstacle-free problem A u = source on interior nodes with the
    given Dirichlet data.

    :grid: WeightedGrid
    :boundary_values: Scalar or grid-shaped array; only boundary entries are
                      used
    :source: Optional grid-shaped array of integrated sources, i.e. minus the
             integral of L_a u over each (half) cell
    :returns: Field
    """
    boundary = np.broadcast_to(np.asarray(boundary_values, dtype=float),
                               grid.shape).reshape(-1)
    values = boundary.copy()
    _, a_ib = grid.interior_operator
    rhs = -a_ib @ boundary[grid.boundary_indices]
    if source is not None:
        grid.check_field(source)
        rhs = rhs + np.asarray(source, dtype=float).reshape(-1)[
            grid.interior_indices]
    values[grid.interior_indices] = grid.interior_factorization.solve(rhs)
    return Field(grid, values.reshape(grid.shape))


def assemble_operator(grid):
    """
    Return the symmetric sparse stiffness matrix of the grid.

    The matrix has nonnegative diagonal, nonpositive off-diagonal entries and
    zero row sums; L_a u = -(A u) / V on interior nodes.
    """
    return grid.operator
