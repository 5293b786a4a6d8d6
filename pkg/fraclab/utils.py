"""
Utility functions
"""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np


def exponents_up_to(n_vars, max_degree):
    """
    Return all exponent tuples of `n_vars` variables with total degree at most
    `max_degree`, ordered by degree and then lexicographically (descending).

    For example exponents_up_to(2, 1) gives [(0, 0), (1, 0), (0, 1)].
    """
    result = []
    for degree in range(max_degree + 1):
        exponents = set()
        for combination in itertools.combinations_with_replacement(
                range(n_vars), degree):
            exponent = [0] * n_vars
            for variable in combination:
                exponent[variable] += 1
            exponents.add(tuple(exponent))
        result.extend(sorted(exponents, reverse=True))
    return result


def summed(values, deterministic=False):
    """
    Return the sum of the given values.

    In deterministic mode the correctly rounded `math.fsum` is used, so that
    the result does not depend on the summation order or vectorization.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if deterministic:
        return math.fsum(values)
    return float(np.sum(values))


def relative_spread(values):
    """
    Return (max - min) / |median| of the given values.
    """
    values = np.asarray(values, dtype=float)
    median = np.median(values)
    if median == 0:
        return math.inf
    return float(np.ptp(values) / abs(median))


def random_rotation(dimension, rng):
    """
    Return a random orthogonal matrix drawn with the given numpy Generator.
    """
    matrix = rng.standard_normal((dimension, dimension))
    q_factor, r_factor = np.linalg.qr(matrix)
    return q_factor * np.sign(np.diag(r_factor))


@contextmanager
def stopwatch():
    """
    Measure the wall-clock time spent inside the `with` block.

    Yields a dict whose "seconds" entry is set when the block exits.
    """
    elapsed = {"seconds": None}
    start = time.perf_counter()
    try:
        yield elapsed
    finally:
        elapsed["seconds"] = time.perf_counter() - start
