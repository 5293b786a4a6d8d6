"""
Interface for reading and writing fields, masks and densities
"""

import numpy as np

from fraclab.exceptions import ConfigurationError
from fraclab.potential import CoincidenceSet, NeumannDensity
from fraclab.weighted_grid import (
        AXISYMMETRIC,
        FULL_STORAGE,
        FULL_TENSOR,
        HALF_STORAGE,
        Field,
        GridSpec,
        build_grid,
        )

MAGIC = b"FRLB"
FORMAT_VERSION = 1
_MODES = [FULL_TENSOR, AXISYMMETRIC]
_STORAGES = [HALF_STORAGE, FULL_STORAGE]
HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("dimension_N", "<u4"),
    ("mode", "<u4"),
    ("storage", "<u4"),
    ("ndim", "<u4"),
    ("shape", "<u4", (3,)),
    ("weight_a", "<f8"),
    ("half_extent_L", "<f8"),
    ("z_grading", "<f8"),
    ])


class MalformedFieldFileError(ConfigurationError):
    """
    Exception raised when a field file cannot be parsed.

    Has the following attributes:
    :problem: A short description of the problem
    :filename: The problematic file
    """

    def __init__(self, problem, filename):
        super().__init__(f"Problem with field file \"{filename}\": {problem}")
        self.problem = problem
        self.filename = filename


def _coordinate_names(grid):
    """
    Return the CSV column names of the node coordinates.
    """
    if grid.axisymmetric:
        return ["r", "z"]
    return [f"x{index + 1}" for index in range(grid.dimension_N)] + ["z"]


class FieldFileIO():
    """
    Read and write grid functions in the flat binary layout and as CSV.

    The binary layout is a fixed header (magic, version, N, mode, storage,
    number and sizes of dimensions, a, L, z grading) followed by the values
    as little-endian doubles in row-major order.
    """

    @classmethod
    def write_binary(cls, field, filename):
        """
        Save the field into the given file.
        """
        spec = field.grid.spec
        header = np.zeros(1, dtype=HEADER)
        header["magic"] = MAGIC
        header["version"] = FORMAT_VERSION
        header["dimension_N"] = spec.dimension_N
        header["mode"] = _MODES.index(spec.mode)
        header["storage"] = _STORAGES.index(spec.storage)
        header["ndim"] = len(field.grid.shape)
        shape = list(field.grid.shape) + [0] * (3 - len(field.grid.shape))
        header["shape"] = shape
        header["weight_a"] = spec.weight_a
        header["half_extent_L"] = spec.half_extent_L
        header["z_grading"] = spec.z_grading
        with open(filename, "wb") as destination:
            header.tofile(destination)
            field.values.astype("<f8").tofile(destination)

    @classmethod
    def read_binary(cls, filename):
        """
        Read a field written by `write_binary`, rebuilding its grid.

        :returns: Field
        """
        with open(filename, "rb") as source:
            header = np.fromfile(source, dtype=HEADER, count=1)
            if len(header) != 1 or header["magic"][0] != MAGIC:
                raise MalformedFieldFileError("not a field file", filename)
            if header["version"][0] != FORMAT_VERSION:
                raise MalformedFieldFileError(
                    f"unsupported version {header['version'][0]}", filename)
            payload = np.fromfile(source, dtype="<f8")
        header = header[0]
        shape = tuple(int(size) for size in header["shape"][:header["ndim"]])
        mode = _MODES[int(header["mode"])]
        storage = _STORAGES[int(header["storage"])]
        if mode == AXISYMMETRIC:
            nodes = 2 * shape[0] - 1
        else:
            nodes = shape[0]
        spec = GridSpec(int(header["dimension_N"]),
                        float(header["half_extent_L"]), nodes,
                        float(header["weight_a"]), mode,
                        float(header["z_grading"]), storage)
        grid = build_grid(spec)
        if grid.shape != shape or payload.size != grid.size:
            raise MalformedFieldFileError(
                f"header shape {shape} does not match {payload.size} values",
                filename)
        return Field(grid, payload.reshape(shape))

    @classmethod
    def write_csv(cls, field, filename):
        """
        Save node coordinates and values as CSV for plotting.
        """
        grid = field.grid
        table = np.column_stack((grid.node_points().reshape(grid.size, -1),
                                 field.values.reshape(-1)))
        np.savetxt(filename, table, delimiter=",", comments="",
                   header=",".join(_coordinate_names(grid) + ["value"]))

    @classmethod
    def write_mask(cls, mask, filename):
        """
        Save thin-plane coordinates with 0/1 contact flags as CSV.
        """
        names = _coordinate_names(mask.grid)[:-1]
        table = np.column_stack((mask.grid.thin_plane_points(),
                                 mask.mask.astype(int)))
        formats = ["%.17g"] * len(names) + ["%d"]
        np.savetxt(filename, table, delimiter=",", comments="", fmt=formats,
                   header=",".join(names + ["contact"]))

    @classmethod
    def read_mask(cls, grid, filename):
        """
        Read a mask written by `write_mask` for the given grid.

        :returns: CoincidenceSet
        """
        table = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
        if len(table) != len(grid.thin_plane_points()):
            raise MalformedFieldFileError(
                f"{len(table)} rows for {len(grid.thin_plane_points())} "
                "thin-plane nodes", filename)
        return CoincidenceSet.from_mask(grid, table[:, -1] > 0.5)

    @classmethod
    def write_density(cls, mask, density, filename):
        """
        Save the coordinates, cell areas and lambda of the masked nodes as CSV.
        """
        names = _coordinate_names(mask.grid)[:-1]
        table = np.column_stack((mask.points(), mask.areas, density.values))
        np.savetxt(filename, table.reshape(-1, len(names) + 2),
                   delimiter=",", comments="",
                   header=",".join(names + ["area", "lambda"]))

    @classmethod
    def read_density(cls, filename, method=None):
        """
        Read the lambda column written by `write_density`.

        :returns: NeumannDensity
        """
        table = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
        values = table[:, -1] if table.size else np.zeros(0)
        if method is None:
            return NeumannDensity(values)
        return NeumannDensity(values, method)
