"""
Reading experiment configurations.

A configuration is a YAML or JSON mapping, for example

    name: radial-a0
    N: 3
    a: 0.0
    grid:
      half_extent_L: 4.0
      nodes_per_axis: 33
      mode: axisymmetric
    polynomial:
      matrix: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
      constant: -1.0

Exactly one of `a` and `s` must be given (a = 1 - 2s). Unknown keys are
rejected at every level.
"""

import copy

import numpy as np
import yaml

from fraclab.apoly import APolynomial, quadratic_member
from fraclab.exceptions import ConfigurationError
from fraclab.obstacle_solver import SolverParams
from fraclab.potential import DENSITY_METHODS, ONE_LAYER
from fraclab.smap import FAR_FIELD_ZERO, MapNumerics
from fraclab.weighted_grid import GridSpec, build_grid

TOP_LEVEL_KEYS = {"name", "N", "a", "s", "grid", "solver", "polynomial",
                  "numerics", "output", "seed", "workers", "deterministic",
                  "experiments"}
GRID_KEYS = {"half_extent_L", "nodes_per_axis", "mode", "z_grading",
             "storage"}
SOLVER_KEYS = {"relaxation_omega", "tol", "max_iter", "sweep_order"}
POLYNOMIAL_KEYS = {"matrix", "constant", "terms"}
NUMERICS_KEYS = {"density_method", "far_field", "far_field_passes",
                 "max_degree", "fit_annulus", "calibration_source_radius",
                 "refine_levels", "offsets", "comparison_cases",
                 "oracle_cases", "harmonic_solves", "decay_probes"}
EXPERIMENT_KEYS = TOP_LEVEL_KEYS - {"experiments", "workers"}

NUMERICS_DEFAULTS = {
    "density_method": ONE_LAYER,
    "far_field": FAR_FIELD_ZERO,
    "far_field_passes": 1,
    "max_degree": 2,
    "fit_annulus": [0.5, 0.75],
    "calibration_source_radius": None,
    "refine_levels": 1,
    "offsets": None,
    "comparison_cases": 10,
    "oracle_cases": 25,
    "harmonic_solves": 20,
    "decay_probes": 50,
    }


class MalformedConfigError(ConfigurationError):
    """
    Exception raised when a configuration file cannot be used.

    Has the following attributes:
    :problem: A short description of the problem
    :filename: The problematic file, None for configurations given as dicts
    """

    def __init__(self, problem, filename=None):
        source = f" in \"{filename}\"" if filename else ""
        super().__init__(f"Problem with experiment configuration{source}: "
                         f"{problem}")
        self.problem = problem
        self.filename = filename


def _reject_unknown(section, allowed, where):
    """
    Raise MalformedConfigError if `section` has keys outside `allowed`.
    """
    if not isinstance(section, dict):
        raise MalformedConfigError(f"{where} must be a mapping, got "
                                   f"{section!r}")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise MalformedConfigError(f"Unknown keys in {where}: {unknown}")


class ExperimentConfig():
    """
    A validated experiment description.
    """

    def __init__(self, data, filename=None):
        """
        Validate the raw mapping.

        :data: Dict as read from a configuration file
        :filename: Where the data came from, for error messages
        """
        self.filename = filename
        self._data = copy.deepcopy(data)
        self._validate()

    @classmethod
    def from_file(cls, filename):
        """
        Read a YAML or JSON configuration file.
        """
        try:
            with open(filename, encoding="utf8") as config_file:
                data = yaml.safe_load(config_file)
        except yaml.YAMLError as error:
            raise MalformedConfigError(f"Cannot parse file: {error}",
                                       filename) from error
        except OSError as error:
            raise MalformedConfigError(f"Cannot read file: {error}",
                                       filename) from error
        return cls(data, filename)

    def _error(self, problem):
        return MalformedConfigError(problem, self.filename)

    def _validate(self):
        """
        Check keys and values; raise MalformedConfigError on problems.
        """
        data = self._data
        try:
            _reject_unknown(data, TOP_LEVEL_KEYS, "the configuration")
            for section, allowed in (("grid", GRID_KEYS),
                                     ("solver", SOLVER_KEYS),
                                     ("polynomial", POLYNOMIAL_KEYS),
                                     ("numerics", NUMERICS_KEYS)):
                _reject_unknown(data.get(section, {}), allowed,
                                f"section '{section}'")
            for index, experiment in enumerate(data.get("experiments", [])):
                _reject_unknown(experiment, EXPERIMENT_KEYS,
                                f"experiment {index}")
        except MalformedConfigError as error:
            raise self._error(error.problem) from error

        if "N" not in data:
            raise self._error("The thin-plane dimension N is required")
        if ("a" in data) == ("s" in data):
            raise self._error("Exactly one of 'a' and 's' must be given")
        if "s" in data and not 0 < float(data["s"]) < 1:
            raise self._error(f"s must lie in (0, 1), got {data['s']}")
        if "half_extent_L" not in data.get("grid", {}) or \
                "nodes_per_axis" not in data.get("grid", {}):
            raise self._error("The grid section needs half_extent_L and "
                              "nodes_per_axis")
        if data.get("numerics", {}).get("density_method", ONE_LAYER) \
                not in DENSITY_METHODS:
            raise self._error("Unknown density method "
                              f"{data['numerics']['density_method']}")
        try:
            workers = int(data.get("workers", 1))
        except (TypeError, ValueError) as error:
            raise self._error("workers must be an integer, got "
                              f"{data['workers']!r}") from error
        if workers < 1:
            raise self._error("workers must be at least 1")
        # building the parts validates their values
        self.grid_spec()
        self.solver_params()
        self.polynomial()

    @property
    def name(self):
        """
        Return the experiment name.
        """
        return self._data.get("name", "experiment")

    @property
    def dimension_N(self):
        """
        Return the thin-plane dimension.
        """
        return int(self._data["N"])

    @property
    def weight_a(self):
        """
        Return a, computed as 1 - 2s if the configuration gives s.
        """
        if "a" in self._data:
            return float(self._data["a"])
        return 1 - 2 * float(self._data["s"])

    @property
    def seed(self):
        """
        Return the seed of randomized probes.
        """
        return int(self._data.get("seed", 0))

    @property
    def workers(self):
        """
        Return the number of parallel experiments in a suite.
        """
        return int(self._data.get("workers", 1))

    @property
    def deterministic(self):
        """
        Return True if correctly rounded sums and timestamp-free reports are
        requested.
        """
        return bool(self._data.get("deterministic", False))

    @property
    def output(self):
        """
        Return the output directory, None if not configured.
        """
        return self._data.get("output")

    def numerics(self, key):
        """
        Return a value of the `numerics` section or its default.
        """
        return self._data.get("numerics", {}).get(key,
                                                  NUMERICS_DEFAULTS[key])

    def grid_spec(self, refine=0):
        """
        Return the GridSpec, refined `refine` times.
        """
        grid = dict(self._data["grid"])
        grid["dimension_N"] = self.dimension_N
        grid["weight_a"] = self.weight_a
        spec = GridSpec(**grid)
        if refine:
            spec = spec.refined(refine)
        return spec

    def solver_params(self):
        """
        Return the SolverParams.
        """
        return SolverParams(**self._data.get("solver", {}))

    def polynomial(self):
        """
        Return the polynomial described by the `polynomial` section.

        A `terms` list is used as is; otherwise the quadratic member with the
        given matrix (default identity) and constant (default -1) is built.
        """
        section = self._data.get("polynomial", {})
        if "terms" in section:
            if "matrix" in section or "constant" in section:
                raise self._error("Give either 'terms' or 'matrix'/"
                                  "'constant' for the polynomial")
            return APolynomial.from_dict({"N": self.dimension_N,
                                          "terms": section["terms"]})
        matrix = section.get("matrix", np.eye(self.dimension_N))
        return quadratic_member(self.dimension_N, self.weight_a, matrix,
                                float(section.get("constant", -1.0)))

    def map_numerics(self, refine=0, grid=None):
        """
        Return the MapNumerics of the experiment on a freshly built grid, or
        on `grid` if given.
        """
        return MapNumerics(grid or build_grid(self.grid_spec(refine)),
                           self.solver_params(),
                           density_method=self.numerics("density_method"),
                           far_field=self.numerics("far_field"),
                           far_field_passes=self.numerics("far_field_passes"),
                           max_degree=self.numerics("max_degree"),
                           fit_annulus=self.numerics("fit_annulus"),
                           deterministic=self.deterministic)

    def with_overrides(self, **overrides):
        """
        Return a copy with top-level values replaced.

        Giving `a` removes `s` and vice versa; None values are ignored.
        """
        data = copy.deepcopy(self._data)
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "a":
                data.pop("s", None)
            if key == "s":
                data.pop("a", None)
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value
        return ExperimentConfig(data, self.filename)

    def experiments(self):
        """
        Return the configurations of the `experiments` list, each one the
        base configuration updated with the list entry; the configuration
        itself if there is no list.
        """
        entries = self._data.get("experiments")
        if not entries:
            return [self]
        base = {key: value for key, value in self._data.items()
                if key != "experiments"}
        variants = []
        for index, entry in enumerate(entries):
            variant = ExperimentConfig(base, self.filename).with_overrides(
                **entry)
            if "name" not in entry:
                variant = variant.with_overrides(
                    name=f"{self.name}-{index}")
            variants.append(variant)
        return variants

    def to_dict(self):
        """
        Return the configuration as a plain dict.
        """
        return copy.deepcopy(self._data)
