"""
Test the polynomial algebra of the asymptotics class
"""

import numpy as np
import pytest

from fraclab.apoly import (
        CERTIFIED_NOT,
        CERTIFIED_POSITIVE,
        INCONCLUSIVE,
        APolynomial,
        DimensionMismatchError,
        a_harmonic_basis,
        a_harmonic_dimension,
        basis_size,
        coefficient_error,
        eventual_positivity,
        fit_a_harmonic,
        harmonic_extension,
        is_a_harmonic,
        is_in_P0prime,
        is_radial,
        quadratic_member,
        radial_quadratic,
        reduced_la,
        )
from fraclab.exceptions import (
        ConfigurationError,
        FitError,
        MembershipError,
        RankDeficientFitError,
        SymmetryViolationError,
        )

# pylint: disable=missing-function-docstring,redefined-outer-name


def test_radial_quadratic_coefficients():
    p = radial_quadratic(3, 0.5, -2.0)
    assert p.coeffs == {((2, 0, 0), 0): 1.0,
                        ((0, 2, 0), 0): 1.0,
                        ((0, 0, 2), 0): 1.0,
                        ((0, 0, 0), 0): -2.0,
                        ((0, 0, 0), 2): -2.0}
    assert p.degree() == 2
    assert p.is_even_in_z()


def test_zero_coefficients_are_dropped():
    p = APolynomial(1, {((1,), 0): 0.0, ((0,), 0): 2.0})
    assert p.terms() == [((0,), 0, 2.0)]
    assert APolynomial(1).degree() == -1


def test_evaluation():
    p = radial_quadratic(2, 0.0)
    assert p.evaluate([1.0, 2.0, 1.0]) == pytest.approx(1 + 4 - 1 - 2)
    assert np.allclose(p.evaluate_thin([[0.0, 0.0], [1.0, 0.0]]),
                       [-1.0, 0.0])


def test_evaluation_checks_dimension():
    with pytest.raises(DimensionMismatchError):
        radial_quadratic(2, 0.0).evaluate([1.0, 2.0])


def test_sum_checks_dimension():
    with pytest.raises(DimensionMismatchError):
        radial_quadratic(2, 0.0) + radial_quadratic(1, 0.0)


def test_quadratic_is_a_harmonic(weight_fx):
    assert is_a_harmonic(radial_quadratic(3, weight_fx), weight_fx)
    assert reduced_la(radial_quadratic(3, weight_fx), weight_fx).is_zero()


def test_wrong_weight_is_not_a_harmonic():
    assert not is_a_harmonic(radial_quadratic(2, 0.5), -0.5)


def test_odd_power_of_z_is_rejected():
    p = APolynomial.monomial(1, (0,), 3)
    with pytest.raises(SymmetryViolationError):
        reduced_la(p, 0.0)


def test_harmonic_extension_keeps_thin_values(weight_fx):
    q = APolynomial(2, {((4, 0), 0): 1.0, ((2, 2), 0): -3.0,
                        ((0, 1), 0): 2.0})
    extension = harmonic_extension(q, weight_fx)
    assert is_a_harmonic(extension, weight_fx)
    assert extension.thin_restriction() == q
    assert extension.is_even_in_z()


@pytest.mark.parametrize("dimension_N,max_degree", [(1, 4), (2, 2), (2, 4),
                                                    (3, 3)])
def test_basis_dimension_matches_null_space(weight_fx, dimension_N,
                                            max_degree):
    basis = a_harmonic_basis(dimension_N, weight_fx, max_degree)
    assert len(basis) == basis_size(dimension_N, max_degree)
    assert a_harmonic_dimension(dimension_N, weight_fx, max_degree) == \
        len(basis)
    assert all(is_a_harmonic(member, weight_fx) for member in basis)


def test_radial_basis():
    basis = a_harmonic_basis(3, 0.2, 4, radial=True)
    assert len(basis) == 3
    assert all(is_radial(member) for member in basis)


def test_basis_degree_is_limited():
    with pytest.raises(ConfigurationError):
        a_harmonic_basis(2, 0.0, 5)


def test_anisotropic_quadratic_is_not_radial():
    p = quadratic_member(2, 0.0, [[1.0, 0.0], [0.0, 2.0]], -1.0)
    assert not is_radial(p)
    assert is_radial(radial_quadratic(2, 0.0))


@pytest.mark.parametrize("matrix,error", [
    ([[1.0, 0.0], [0.0, -1.0]], MembershipError),
    ([[1.0, 0.5], [0.0, 1.0]], ConfigurationError),
    ([[1.0]], ConfigurationError),
    ])
def test_invalid_quadratic(matrix, error):
    with pytest.raises(error):
        quadratic_member(2, 0.0, matrix, -1.0)


def test_indefinite_quadratic_when_allowed():
    p = quadratic_member(2, 0.0, [[1.0, 0.0], [0.0, -1.0]], 0.0,
                         require_positive_definite=False)
    # the trace vanishes, so there is no z^2 term
    assert ((0, 0), 2) not in p.coeffs


@pytest.mark.parametrize("p,outcome", [
    (radial_quadratic(2, 0.0), CERTIFIED_POSITIVE),
    (APolynomial(2, {((2, 0), 0): 1.0, ((0, 2), 0): -1.0}), CERTIFIED_NOT),
    (APolynomial(2, {((1, 0), 0): 1.0}), CERTIFIED_NOT),
    (APolynomial(1, {((0,), 2): 1.0}), CERTIFIED_NOT),
    (APolynomial(2, {((2, 0), 0): 1.0}), INCONCLUSIVE),
    ])
def test_eventual_positivity(p, outcome):
    result, witness = eventual_positivity(p)
    assert result == outcome
    assert isinstance(witness, dict)


def test_membership_report():
    report = is_in_P0prime(radial_quadratic(2, 0.3), 0.3)
    assert report.is_member
    assert report.to_dict()["is_member"]

    odd = radial_quadratic(1, 0.0) + APolynomial.monomial(1, (0,), 1)
    report = is_in_P0prime(odd, 0.0)
    assert not report.is_symmetric
    assert not report.is_member


def test_dict_representation():
    p = quadratic_member(2, 0.25, [[2.0, 0.5], [0.5, 1.0]], -3.0)
    data = p.to_dict(weight_a=0.25)
    assert data["N"] == 2
    assert data["a"] == 0.25
    assert APolynomial.from_dict(data) == p


def test_malformed_dict():
    with pytest.raises(ConfigurationError):
        APolynomial.from_dict({"N": 1, "terms": [{"alpha": [2]}]})


def test_coefficient_error():
    p = radial_quadratic(1, 0.0)
    q = p + APolynomial.constant(1, 0.1)
    assert coefficient_error(p, q) == pytest.approx(0.1)
    assert coefficient_error(p, p) == 0


def test_fit_recovers_polynomial(weight_fx):
    rng = np.random.default_rng(3)
    points = rng.uniform(-2, 2, (40, 3))
    points[:, -1] = np.abs(points[:, -1])
    p = quadratic_member(2, weight_fx, [[1.0, 0.2], [0.2, 3.0]], -0.5)
    result = fit_a_harmonic(points, p.evaluate(points), 2, weight_fx)
    assert coefficient_error(p, result.polynomial) < 1e-10
    assert result.rank == basis_size(2, 2)
    assert result.residual_rms < 1e-10


def test_fit_needs_enough_samples():
    points = np.ones((5, 3))
    with pytest.raises(FitError):
        fit_a_harmonic(points, np.ones(5), 2, 0.0)


def test_fit_detects_rank_deficiency():
    points = np.zeros((30, 3))
    points[:, 0] = np.linspace(-1, 1, 30)
    with pytest.raises(RankDeficientFitError):
        fit_a_harmonic(points, points[:, 0] ** 2, 2, 0.0)
