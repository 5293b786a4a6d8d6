"""
Persistent cache of calibrated Riesz constants
"""

import json
import os
import threading

from conf import conf
from fraclab.exceptions import CalibrationMissingError, ConfigurationError
import fraclab.logger
from fraclab.potential import RieszParams


def cache_path():
    """
    Return the cache file location, overridden by $FRACLAB_CACHE.
    """
    return os.environ.get(conf.CACHE_ENV_VAR, conf.DEFAULT_CACHE_PATH)


def calibration_key(spec):
    """
    Return the cache key of a grid: (N, a, h, L, mode) as a string.
    """
    return (f"N={spec.dimension_N}|a={spec.weight_a!r}|h={spec.spacing!r}|"
            f"L={spec.half_extent_L!r}|mode={spec.mode}")


class CalibrationCache():
    """
    JSON file mapping calibration keys to calibration results.

    Safe to share between the worker threads of a suite.
    """

    _lock = threading.Lock()

    def __init__(self, filename=None):
        """
        :filename: Cache file; defaults to `cache_path()`
        """
        self.filename = filename or cache_path()
        self._logger = fraclab.logger.get_logger()

    def _read(self):
        if not os.path.exists(self.filename):
            return {}
        try:
            with open(self.filename, encoding="utf8") as cache_file:
                return json.load(cache_file)
        except json.JSONDecodeError as error:
            raise ConfigurationError(
                f"Calibration cache {self.filename} is corrupt: {error}") \
                from error

    def entries(self):
        """
        Return all cached entries.
        """
        with self._lock:
            return self._read()

    def get(self, spec):
        """
        Return the cached entry (a dict) for the grid, None if missing.
        """
        return self.entries().get(calibration_key(spec))

    def riesz_params(self, spec):
        """
        Return RieszParams with the cached constant for the grid.

        :raises CalibrationMissingError: no entry for the grid
        """
        entry = self.get(spec)
        if entry is None:
            raise CalibrationMissingError(calibration_key(spec))
        return RieszParams(spec.dimension_N, spec.weight_a, entry["alpha"])

    def store(self, result):
        """
        Save a CalibrationResult, replacing an older entry for the same key.
        """
        with self._lock:
            entries = self._read()
            entries[calibration_key(result.spec)] = result.to_dict()
            directory = os.path.dirname(self.filename)
            if directory and not os.path.isdir(directory):
                os.makedirs(directory)
            with open(self.filename, "w", encoding="utf8") as cache_file:
                json.dump(entries, cache_file, indent=2, sort_keys=True)
        self._logger.debug("Stored calibration %s in %s",
                           calibration_key(result.spec), self.filename)
