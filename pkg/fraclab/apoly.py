"""
Polynomial algebra for the asymptotics class: polynomials in (x', z) that are
even in z, the reduced a-Laplacian, a-harmonic bases, membership
certification and least-squares fitting.

A polynomial is stored as a map from (alpha, k) to its coefficient, where
alpha is the exponent tuple of x' = (x_1, ..., x_N) and k the exponent of z.
"""

from math import comb

import numpy as np
import scipy.linalg
import scipy.optimize

from conf import numerics
from fraclab.exceptions import (
        ConfigurationError,
        FitError,
        MembershipError,
        RankDeficientFitError,
        SymmetryViolationError,
        )
import fraclab.logger
from fraclab.utils import exponents_up_to, random_rotation

CERTIFIED_POSITIVE = "certified_positive"
CERTIFIED_NOT = "certified_not"
INCONCLUSIVE = "inconclusive"


class DimensionMismatchError(ConfigurationError):
    """
    A point or polynomial has the wrong number of variables.
    """


class APolynomial():
    """
    A real polynomial in the N thin-plane variables and z.
    """

    def __init__(self, dimension_N, coeffs=None):
        """
        Create a polynomial, dropping explicit zero coefficients.

        :dimension_N: Number of thin-plane variables
        :coeffs: Dict mapping (alpha, k) to the coefficient, alpha being a
                 tuple of N nonnegative integers and k the exponent of z
        """
        self.dimension_N = int(dimension_N)
        self._coeffs = {}
        for (alpha, k), coef in (coeffs or {}).items():
            alpha = tuple(int(power) for power in alpha)
            if len(alpha) != self.dimension_N:
                raise DimensionMismatchError(
                    f"Exponent {alpha} does not have {self.dimension_N} "
                    "entries")
            if coef != 0:
                key = (alpha, int(k))
                self._coeffs[key] = self._coeffs.get(key, 0.0) + float(coef)
        self._coeffs = {key: coef for key, coef in self._coeffs.items()
                        if coef != 0}

    @classmethod
    def monomial(cls, dimension_N, alpha, k=0, coef=1.0):
        """
        Return coef * x'^alpha * z^k.
        """
        return cls(dimension_N, {(tuple(alpha), k): coef})

    @classmethod
    def constant(cls, dimension_N, value):
        """
        Return the constant polynomial.
        """
        return cls(dimension_N, {((0,) * dimension_N, 0): value})

    @property
    def coeffs(self):
        """
        Return a copy of the coefficient map.
        """
        return dict(self._coeffs)

    def terms(self):
        """
        Return the (alpha, k, coef) triples in a stable order.
        """
        return [(alpha, k, coef)
                for (alpha, k), coef in sorted(self._coeffs.items())]

    def is_zero(self):
        """
        Return True for the zero polynomial.
        """
        return not self._coeffs

    def degree(self):
        """
        Return the total degree; -1 for the zero polynomial.
        """
        if self.is_zero():
            return -1
        return max(sum(alpha) + k for alpha, k in self._coeffs)

    def scale(self):
        """
        Return the largest absolute coefficient, 0 for the zero polynomial.
        """
        return max((abs(coef) for coef in self._coeffs.values()), default=0.0)

    def is_even_in_z(self):
        """
        Return True if all exponents of z are even.
        """
        return all(k % 2 == 0 for _, k in self._coeffs)

    def thin_restriction(self):
        """
        Return q(x') = p(x', 0) as a polynomial without z terms.
        """
        return APolynomial(self.dimension_N,
                           {(alpha, k): coef
                            for (alpha, k), coef in self._coeffs.items()
                            if k == 0})

    def homogeneous_part(self, degree):
        """
        Return the sum of the terms of the given total degree.
        """
        return APolynomial(self.dimension_N,
                           {(alpha, k): coef
                            for (alpha, k), coef in self._coeffs.items()
                            if sum(alpha) + k == degree})

    def pruned(self, relative):
        """
        Return a copy without coefficients below `relative` times the scale.
        """
        threshold = relative * self.scale()
        return APolynomial(self.dimension_N,
                           {key: coef for key, coef in self._coeffs.items()
                            if abs(coef) >= threshold})

    def evaluate(self, points):
        """
        Evaluate at points of R^(N+1).

        :points: Array of shape (N+1,) or (n_points, N+1)
        :returns: A float for a single point, an array otherwise
        """
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        points = np.atleast_2d(points)
        if points.shape[1] != self.dimension_N + 1:
            raise DimensionMismatchError(
                f"Points in R^{points.shape[1]} given to a polynomial on "
                f"R^{self.dimension_N + 1}")
        result = np.zeros(len(points))
        for (alpha, k), coef in sorted(self._coeffs.items()):
            exponents = np.array(alpha + (k,))
            result += coef * np.prod(points ** exponents, axis=1)
        if single:
            return float(result[0])
        return result

    def evaluate_thin(self, points):
        """
        Evaluate at points (x', 0) of the thin plane.

        :points: Array of shape (N,) or (n_points, N)
        """
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.dimension_N:
            raise DimensionMismatchError(
                f"Thin-plane points in R^{points.shape[-1]} given to a "
                f"polynomial on R^{self.dimension_N}")
        padding = [(0, 0)] * (points.ndim - 1) + [(0, 1)]
        return self.evaluate(np.pad(points, padding))

    def __call__(self, points):
        return self.evaluate(points)

    def __add__(self, other):
        _check_same_dimension(self, other)
        coeffs = dict(self._coeffs)
        for key, coef in other.coeffs.items():
            coeffs[key] = coeffs.get(key, 0.0) + coef
        return APolynomial(self.dimension_N, coeffs)

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, factor):
        return APolynomial(self.dimension_N,
                           {key: coef * factor
                            for key, coef in self._coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, APolynomial)
                and self.dimension_N == other.dimension_N
                and self._coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.dimension_N, tuple(sorted(self._coeffs.items()))))

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for alpha, k, coef in self.terms():
            factors = [f"x{index + 1}^{power}"
                       for index, power in enumerate(alpha) if power]
            if k:
                factors.append(f"z^{k}")
            parts.append(" ".join([f"{coef:+g}"] + factors))
        return " ".join(parts)

    def to_dict(self, weight_a=None):
        """
        Return the JSON representation
        {"N": int, "a": real, "terms": [{"alpha": [...], "k": int,
        "coef": real}]}. The "a" entry is present only if given.
        """
        result = {"N": self.dimension_N}
        if weight_a is not None:
            result["a"] = float(weight_a)
        result["terms"] = [{"alpha": list(alpha), "k": k, "coef": coef}
                           for alpha, k, coef in self.terms()]
        return result

    @classmethod
    def from_dict(cls, data):
        """
        Create a polynomial from its JSON representation.
        """
        try:
            return cls(data["N"],
                       {(tuple(term["alpha"]), term["k"]): term["coef"]
                        for term in data["terms"]})
        except (KeyError, TypeError) as error:
            raise ConfigurationError(
                f"Malformed polynomial description: {data}") from error


def _check_same_dimension(first, second):
    """
    Raise DimensionMismatchError if the polynomials live in different spaces.
    """
    if first.dimension_N != second.dimension_N:
        raise DimensionMismatchError(
            f"Polynomials in {first.dimension_N} and {second.dimension_N} "
            "thin-plane variables cannot be combined")


def _thin_laplacian(p):
    """
    Return the Laplacian of p in the x' variables only.
    """
    coeffs = {}
    for (alpha, k), coef in p.coeffs.items():
        for index, power in enumerate(alpha):
            if power >= 2:
                lowered = list(alpha)
                lowered[index] -= 2
                key = (tuple(lowered), k)
                coeffs[key] = coeffs.get(key, 0.0) + coef * power * (power - 1)
    return APolynomial(p.dimension_N, coeffs)


def reduced_la(p, weight_a):
    """
    Return Delta' p + p_zz + (a / z) p_z for a polynomial even in z.

    For such p, L_a p = |z|^a times this polynomial, so p is a-harmonic iff
    the result vanishes. A term z^k contributes (k(k-1) + a k) z^(k-2).

    :raises SymmetryViolationError: if an odd power of z is present
    """
    odd = sorted({k for _, k in p.coeffs if k % 2})
    if odd:
        raise SymmetryViolationError(
            f"Polynomial {p} contains odd powers of z: {odd}")
    result = _thin_laplacian(p)
    z_part = {}
    for (alpha, k), coef in p.coeffs.items():
        if k >= 2:
            z_part[(alpha, k - 2)] = coef * (k * (k - 1) + weight_a * k)
    return result + APolynomial(p.dimension_N, z_part)


def is_a_harmonic(p, weight_a, rtol=numerics.HARMONIC_RTOL):
    """
    Return True if reduced_la(p, a) vanishes up to `rtol` times the scale of
    p.
    """
    residual = reduced_la(p, weight_a)
    return residual.scale() <= rtol * max(p.scale(), 1.0)


def harmonic_extension(q, weight_a):
    """
    Return the unique even-in-z a-harmonic polynomial whose restriction to the
    thin plane is q.

    The extension is sum_j c_j z^(2j) (Delta')^j q with c_0 = 1 and
    c_(j+1) = -c_j / ((2j + 2)(2j + 1 + a)).

    :q: APolynomial; only its z-free terms are used
    """
    current = q.thin_restriction()
    result = APolynomial(q.dimension_N)
    coefficient = 1.0
    j = 0
    while not current.is_zero():
        lifted = {(alpha, 2 * j): coef * coefficient
                  for (alpha, _), coef in current.coeffs.items()}
        result = result + APolynomial(q.dimension_N, lifted)
        coefficient = -coefficient / ((2 * j + 2) * (2 * j + 1 + weight_a))
        current = _thin_laplacian(current)
        j += 1
    return result


def a_harmonic_basis(dimension_N, weight_a, max_degree, radial=False):
    """
    Return a basis of the even-in-z a-harmonic polynomials of degree at most
    `max_degree`.

    The basis consists of the harmonic extensions of the thin-plane monomials,
    so it has comb(N + max_degree, max_degree) members. With `radial` only the
    extensions of |x'|^(2j) are returned; they span the radially symmetric
    members.
    """
    if not 0 <= max_degree <= numerics.MAX_BASIS_DEGREE:
        raise ConfigurationError(
            f"Basis degree must be between 0 and "
            f"{numerics.MAX_BASIS_DEGREE}, got {max_degree}")
    if radial:
        return [harmonic_extension(radial_power(dimension_N, power),
                                   weight_a)
                for power in range(0, max_degree + 1, 2)]
    return [harmonic_extension(APolynomial.monomial(dimension_N, alpha),
                               weight_a)
            for alpha in exponents_up_to(dimension_N, max_degree)]


def radial_power(dimension_N, power):
    """
    Return |x'|^power for an even power as a polynomial.
    """
    result = APolynomial.constant(dimension_N, 1.0)
    square = APolynomial(dimension_N,
                         {(tuple(int(i == j) * 2 for j in range(dimension_N)),
                           0): 1.0
                          for i in range(dimension_N)})
    for _ in range(power // 2):
        result = _multiply(result, square)
    return result


def _multiply(first, second):
    """
    Return the product of two polynomials.
    """
    coeffs = {}
    for (alpha, k), coef in first.coeffs.items():
        for (beta, power_z), other in second.coeffs.items():
            key = (tuple(x + y for x, y in zip(alpha, beta)), k + power_z)
            coeffs[key] = coeffs.get(key, 0.0) + coef * other
    return APolynomial(first.dimension_N, coeffs)


def even_monomials(dimension_N, max_degree):
    """
    Return the (alpha, k) pairs with k even and |alpha| + k <= max_degree.
    """
    result = []
    for exponent in exponents_up_to(dimension_N + 1, max_degree):
        if exponent[-1] % 2 == 0:
            result.append((exponent[:-1], exponent[-1]))
    return result


def reduced_la_matrix(dimension_N, weight_a, max_degree):
    """
    Return the matrix of reduced_la acting on the coefficient space of even
    monomials of degree <= max_degree, with the column monomials.

    The dimension of its null space equals the number of independent
    even a-harmonic polynomials of degree <= max_degree.
    """
    columns = even_monomials(dimension_N, max_degree)
    rows = even_monomials(dimension_N, max(max_degree - 2, 0))
    row_index = {monomial: index for index, monomial in enumerate(rows)}
    matrix = np.zeros((len(rows), len(columns)))
    for column, (alpha, k) in enumerate(columns):
        image = reduced_la(APolynomial.monomial(dimension_N, alpha, k),
                           weight_a)
        for key, coef in image.coeffs.items():
            matrix[row_index[key], column] = coef
    return matrix, columns


def a_harmonic_dimension(dimension_N, weight_a, max_degree):
    """
    Return the null-space dimension of reduced_la_matrix.
    """
    matrix, columns = reduced_la_matrix(dimension_N, weight_a, max_degree)
    if max_degree < 2:
        return len(columns)
    return scipy.linalg.null_space(matrix).shape[1]


def quadratic_member(dimension_N, weight_a, matrix_A, constant_c,
                     require_positive_definite=True):
    """
    Return p(x', z) = x'^T A x' + c - (tr A / (1 + a)) z^2.

    :matrix_A: Symmetric N x N matrix
    :constant_c: Constant term
    :require_positive_definite: Raise MembershipError if A is not positive
                                definite
    """
    matrix_A = np.atleast_2d(np.asarray(matrix_A, dtype=float))
    if matrix_A.shape != (dimension_N, dimension_N):
        raise ConfigurationError(
            f"Matrix of shape {matrix_A.shape} given for N = {dimension_N}")
    if not np.allclose(matrix_A, matrix_A.T, rtol=0, atol=1e-14):
        raise ConfigurationError(f"Matrix {matrix_A.tolist()} is not "
                                 "symmetric")
    if require_positive_definite and \
            np.linalg.eigvalsh(matrix_A).min() <= 0:
        raise MembershipError(
            f"Matrix {matrix_A.tolist()} is not positive definite")
    coeffs = {}
    for i in range(dimension_N):
        for j in range(i, dimension_N):
            alpha = [0] * dimension_N
            alpha[i] += 1
            alpha[j] += 1
            factor = 1.0 if i == j else 2.0
            coeffs[(tuple(alpha), 0)] = factor * matrix_A[i, j]
    coeffs[((0,) * dimension_N, 0)] = constant_c
    coeffs[((0,) * dimension_N, 2)] = -np.trace(matrix_A) / (1 + weight_a)
    return APolynomial(dimension_N, coeffs)


def radial_quadratic(dimension_N, weight_a, constant_c=-1.0):
    """
    Return |x'|^2 + c - (N / (1 + a)) z^2.
    """
    return quadratic_member(dimension_N, weight_a, np.eye(dimension_N),
                            constant_c)


class MembershipReport():
    """
    Outcome of the membership checks for the asymptotics class.
    """
    # pylint: disable=too-few-public-methods

    def __init__(self, is_symmetric, is_a_harmonic, eventual_positivity,
                 witness):
        """
        :is_symmetric: All z exponents are even
        :is_a_harmonic: reduced_la vanishes
        :eventual_positivity: One of `certified_positive`, `certified_not`
                              and `inconclusive`
        :witness: Dict describing the leading-form minimum or a violating
                  direction
        """
        self.is_symmetric = is_symmetric
        self.is_a_harmonic = is_a_harmonic
        self.eventual_positivity = eventual_positivity
        self.witness = witness

    @property
    def is_member(self):
        """
        Return True only if all three checks pass with certainty.
        """
        return (self.is_symmetric and self.is_a_harmonic
                and self.eventual_positivity == CERTIFIED_POSITIVE)

    def to_dict(self):
        """
        Return a JSON-compatible dict.
        """
        return {
            "is_symmetric": self.is_symmetric,
            "is_a_harmonic": self.is_a_harmonic,
            "eventual_positivity": self.eventual_positivity,
            "witness": self.witness,
            "is_member": self.is_member,
            }


def _sphere_minimum(form, seed):
    """
    Return (minimum, direction) of a homogeneous form on the unit sphere of
    the thin plane, found by dense sampling and local refinement.
    """
    dimension = form.dimension_N
    if dimension == 1:
        directions = np.array([[1.0], [-1.0]])
        values = form.evaluate_thin(directions)
        best = int(np.argmin(values))
        return float(values[best]), directions[best]

    rng = np.random.default_rng(seed)
    samples = rng.standard_normal(
        (numerics.POSITIVITY_SAMPLES_PER_DIM * dimension, dimension))
    samples /= np.linalg.norm(samples, axis=1, keepdims=True)
    axes = np.vstack((np.eye(dimension), -np.eye(dimension)))
    samples = np.vstack((axes, samples))
    values = form.evaluate_thin(samples)

    def on_sphere(point):
        return form.evaluate_thin(point / np.linalg.norm(point))

    best_value = float(values.min())
    best_direction = samples[int(np.argmin(values))]
    starts = np.argsort(values)[:numerics.POSITIVITY_REFINE_STARTS]
    for start in starts:
        result = scipy.optimize.minimize(on_sphere, samples[start],
                                         method="Nelder-Mead",
                                         options={"xatol": 1e-12,
                                                  "fatol": 1e-14})
        if result.fun < best_value:
            best_value = float(result.fun)
            best_direction = result.x / np.linalg.norm(result.x)
    return best_value, best_direction


def eventual_positivity(p, delta=numerics.POSITIVITY_DELTA, seed=0):
    """
    Decide whether p(x', 0) > 0 for all sufficiently large |x'|.

    The leading homogeneous part of q = p(., 0) is normalized to unit scale
    and minimized over the unit sphere. A minimum above delta certifies
    positivity, a negative value below -delta (or an odd leading degree)
    certifies the opposite, anything in between is inconclusive.

    :returns: (outcome, witness dict)
    """
    q = p.thin_restriction()
    if q.is_zero():
        return CERTIFIED_NOT, {"reason": "p vanishes on the thin plane"}
    degree = q.degree()
    leading = q.homogeneous_part(degree)
    leading = leading * (1.0 / leading.scale())
    minimum, direction = _sphere_minimum(leading, seed)
    witness = {"degree": degree, "leading_form_minimum": minimum,
               "direction": [float(x) for x in direction]}
    if degree % 2 == 1:
        witness["reason"] = "odd leading degree"
        return CERTIFIED_NOT, witness
    if minimum > delta:
        return CERTIFIED_POSITIVE, witness
    if minimum < -delta:
        witness["reason"] = "leading form negative in direction"
        return CERTIFIED_NOT, witness
    witness["reason"] = "leading form minimum within delta of zero"
    return INCONCLUSIVE, witness


def is_in_P0prime(p, weight_a, seed=0):
    """
    Check membership in the class of even, a-harmonic, eventually positive
    polynomials.

    :returns: MembershipReport
    """
    # pylint: disable=invalid-name
    symmetric = p.is_even_in_z()
    harmonic = symmetric and is_a_harmonic(p, weight_a)
    positivity, witness = eventual_positivity(p, seed=seed)
    report = MembershipReport(symmetric, harmonic, positivity, witness)
    fraclab.logger.get_logger().debug("Membership of %s: %s", p,
                                      report.to_dict())
    return report


def is_radial(p, samples=16, seed=0):
    """
    Return True if p depends on x' only through |x'|.
    """
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1, 1, (samples, p.dimension_N + 1))
    rotation = random_rotation(p.dimension_N, rng)
    rotated = points.copy()
    rotated[:, :-1] = points[:, :-1] @ rotation.T
    difference = np.abs(p.evaluate(points) - p.evaluate(rotated)).max()
    return difference <= 1e-10 * max(p.scale(), 1.0)


def coefficient_error(reference, other):
    """
    Return max |coefficient difference| / max |coefficient of reference|.
    """
    difference = (reference - other).scale()
    scale = reference.scale()
    if scale == 0:
        return difference
    return difference / scale


class FitResult():
    """
    A fitted polynomial with fit diagnostics.
    """
    # pylint: disable=too-few-public-methods

    def __init__(self, polynomial, residual_rms, rank, condition):
        self.polynomial = polynomial
        self.residual_rms = residual_rms
        self.rank = rank
        self.condition = condition

    def to_dict(self):
        """
        Return a JSON-compatible dict.
        """
        return {"residual_rms": self.residual_rms, "rank": self.rank,
                "condition": self.condition}


def fit_a_harmonic(points, values, dimension_N, weight_a, max_degree=2,
                   basis=None, radial=False):
    """
    Least-squares fit of an a-harmonic polynomial to samples.

    :points: Array (n_samples, N+1)
    :values: Array (n_samples,)
    :basis: Optional list of APolynomials to fit with; defaults to
            a_harmonic_basis(N, a, max_degree, radial)
    :returns: FitResult
    :raises FitError: too few samples
    :raises RankDeficientFitError: the samples do not determine all basis
                                   coefficients
    """
    # pylint: disable=too-many-arguments
    if basis is None:
        basis = a_harmonic_basis(dimension_N, weight_a, max_degree, radial)
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(values) < 2 * len(basis):
        raise FitError(f"{len(values)} samples are not enough to fit "
                       f"{len(basis)} basis polynomials; at least "
                       f"{2 * len(basis)} are needed")

    design = np.column_stack([member.evaluate(points) for member in basis])
    column_norms = np.linalg.norm(design, axis=0)
    column_norms[column_norms == 0] = 1.0
    scaled = design / column_norms
    solution, _, rank, singular = np.linalg.lstsq(scaled, values, rcond=1e-10)
    if rank < len(basis):
        raise RankDeficientFitError(
            f"Sample set has rank {rank} for {len(basis)} basis polynomials")
    condition = float(singular[0] / singular[-1])
    coefficients = solution / column_norms

    fitted = APolynomial(dimension_N)
    for coefficient, member in zip(coefficients, basis):
        fitted = fitted + member * coefficient
    residual = values - design @ coefficients
    rms = float(np.sqrt(np.mean(residual ** 2)))
    fraclab.logger.get_logger().debug(
        "Fitted %d basis polynomials to %d samples, rms %.3e, condition %.3e",
        len(basis), len(values), rms, condition)
    return FitResult(fitted, rms, int(rank), condition)


def basis_size(dimension_N, max_degree):
    """
    Return the number of even a-harmonic polynomials of degree <= max_degree.
    """
    return comb(dimension_N + max_degree, max_degree)
