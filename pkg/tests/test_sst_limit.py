"""Test eps-perturbed Gamma series and their limits."""
from fractions import Fraction

import mpmath
import pytest

from gkzperiods.constant_ring import eval_numeric, in_ring_report, pi_power
from gkzperiods.errors import (
    InsufficientTruncationError,
    LimitNotFoundError,
    MalformedInputError,
    PoleError,
)
from gkzperiods.gamma_series import (
    basis_for_triangulation,
    default_truncation,
    dwork_exponent,
    fermat_exponent,
)
from gkzperiods.secondary_fan import dwork_triangulation
from gkzperiods.sst_limit import (
    EpsLaurentSeries,
    auto_limit_basis,
    default_perturbation,
    eps_exp_pi_i,
    eps_gamma_coefficient,
    eps_sin_pi,
    family_series,
    group_families,
    perturbed_family,
    sst_limit,
)

DWORK_WEIGHT = (-1, 0, 0)
DWORK_C = (1, 2, 1, 1, 1, 1)


def _value(constant):
    return eval_numeric(constant).midpoint


@pytest.fixture(name="toy_family")
def fixture_toy_family(toy):
    """Factory function for the two coinciding exponents (-1, 0, 0) of the toy T(a_1)."""
    members = [dwork_exponent(toy, (1, 2), (0,), i) for i in (0, 1)]
    return perturbed_family(toy, members)


def test_series_arithmetic():
    """Test if (1 + eps) times its inverse is 1 up to the known order."""
    series = EpsLaurentSeries(0, (1, 1))
    product = series * series.inverse(4)
    assert product.coefficient(0) == 1
    assert all(product.coefficient(k).is_zero() for k in range(1, 4))
    assert (series - series).is_zero()
    assert series.shift(-2).valuation == -2


def test_series_order_is_enforced():
    """Test if coefficients at or beyond the order are unknown."""
    series = EpsLaurentSeries(0, (1, 1, 1), order=2)
    assert series.coefficient(1) == 1
    with pytest.raises(InsufficientTruncationError):
        series.coefficient(2)


def test_series_inverse_needs_order():
    """Test if exact multi-term series and zero cannot be inverted freely."""
    with pytest.raises(MalformedInputError):
        EpsLaurentSeries(0, (1, 1)).inverse()
    with pytest.raises(PoleError):
        EpsLaurentSeries.zero().inverse(3)
    assert EpsLaurentSeries.monomial(2, 3).inverse().coefficient(-3) == Fraction(1, 2)


def test_eps_gamma_coefficient_drops_euler_factor():
    """Test if 1/Gamma(1 + eps) loses its linear term once exp(euler eps) is dropped."""
    series = eps_gamma_coefficient(0, 1, 3)
    assert series.coefficient(0) == 1
    assert series.coefficient(1).is_zero()
    assert mpmath.almosteq(_value(series.coefficient(2)), -mpmath.pi**2 / 12, 1e-30)


def test_eps_gamma_coefficient_keeps_euler_factor():
    """Test if the full expansion starts with 1 + euler_gamma eps."""
    series = eps_gamma_coefficient(0, 1, 3, drop_euler_factor=False)
    assert mpmath.almosteq(_value(series.coefficient(1)), mpmath.euler, 1e-30)


def test_eps_gamma_coefficient_at_pole():
    """Test if 1/Gamma(-1 + eps) = -eps + O(eps^2)."""
    series = eps_gamma_coefficient(-2, 1, 3)
    assert series.valuation == 1
    assert series.coefficient(1) == -1


def test_eps_gamma_coefficient_needs_positive_order():
    """Test if the order must be at least one."""
    with pytest.raises(MalformedInputError):
        eps_gamma_coefficient(0, 1, 0)


def test_eps_trigonometry():
    """Test the first coefficients of sin(pi (1 + eps)) and exp(pi i eps)."""
    sine = eps_sin_pi(1, 1, 3)
    assert sine.coefficient(0).is_zero()
    assert sine.coefficient(1) == -pi_power(1)
    exponential = eps_exp_pi_i(0, 1, 2)
    assert exponential.coefficient(0) == 1
    assert mpmath.almosteq(_value(exponential.coefficient(1)), mpmath.mpc(0, mpmath.pi), 1e-30)


def test_default_perturbation():
    """Test if the deterministic sequence uses powers of the next base."""
    assert default_perturbation(3) == (1, 2, 4)
    assert default_perturbation(2, attempt=1) == (1, 3)


def test_perturbed_family_separates_coinciding_exponents(toy_family):
    """Test if the first valid perturbation gives distinct directions of equal size."""
    assert toy_family.size == 2
    assert toy_family.c_prime == (1, 3)
    assert toy_family.directions[0] != toy_family.directions[1]
    assert sum(toy_family.directions[0]) == sum(toy_family.directions[1])
    assert toy_family.shift_of(1) == (0, 0, 0)


def test_perturbed_family_rejects_degenerate_perturbation(toy):
    """Test if an explicit perturbation with a vanishing direction entry is refused."""
    members = [dwork_exponent(toy, (1, 2), (0,), i) for i in (0, 1)]
    with pytest.raises(MalformedInputError) as error:
        perturbed_family(toy, members, (1, 2))

    assert "coinciding or degenerate" in str(error.value)


def test_perturbed_family_rejects_mixed_classes(toy):
    """Test if exponents from different classes mod Z^N cannot form a family."""
    members = [fermat_exponent(toy, (1, 2), (0,)), fermat_exponent(toy, (1, 2), (1,))]
    with pytest.raises(MalformedInputError) as error:
        perturbed_family(toy, members)

    assert "is not in the class" in str(error.value)


def test_group_families_of_toy_dwork_basis(toy):
    """Test if the T(a_1) basis splits into a coincident pair and a single exponent."""
    basis = basis_for_triangulation(toy, dwork_triangulation(toy), (1, 2))
    families = group_families(toy, basis)
    assert sorted(family.size for family in families) == [1, 2]


def test_sst_limit_removes_simple_pole(toy, toy_family):
    """Test if eps^-1 times a vanishing member has the finite limit -1 at the leading term."""
    exp = toy_family.members[0]
    bound = default_truncation(toy, exp, DWORK_WEIGHT, 3)
    members = family_series(toy, toy_family, DWORK_WEIGHT, bound, 4)
    limit = sst_limit(toy, members, [EpsLaurentSeries.monomial(1, -1), 0])
    assert limit.coefficient((0, 0, 0)) == -1


def test_sst_limit_reports_surviving_pole(toy, toy_family):
    """Test if a pole that does not cancel raises LimitNotFoundError."""
    bound = default_truncation(toy, toy_family.members[0], DWORK_WEIGHT, 3)
    members = family_series(toy, toy_family, DWORK_WEIGHT, bound, 4)
    with pytest.raises(LimitNotFoundError) as error:
        sst_limit(toy, members, [EpsLaurentSeries.monomial(1, -2), 0])

    assert "survives" in str(error.value)


def test_sst_limit_needs_one_coefficient_per_member(toy, toy_family):
    """Test if the coefficient list must match the members."""
    bound = default_truncation(toy, toy_family.members[0], DWORK_WEIGHT, 3)
    members = family_series(toy, toy_family, DWORK_WEIGHT, bound, 2)
    with pytest.raises(MalformedInputError):
        sst_limit(toy, members, [1])


def test_auto_limit_basis_of_toy(toy, toy_family):
    """Test if the coincident toy pair yields two independent limits of log degree at most one."""
    bound = max(default_truncation(toy, exp, DWORK_WEIGHT, 4) for exp in toy_family.members)
    basis = auto_limit_basis(toy, toy_family, DWORK_WEIGHT, bound)
    assert len(basis.limits) == 2
    assert all(limit.terms for limit in basis.limits)
    assert max(limit.max_log_degree for limit in basis.limits) <= 1


@pytest.mark.slow
def test_auto_limit_basis_of_two_monomial_family(two_monomials):
    """Test the four independent limits of the coincident two-monomial family."""
    weight = (0, 100) + (10,) * 6
    members = [dwork_exponent(two_monomials, DWORK_C, (0, 0), i) for i in range(2, 6)]
    family = perturbed_family(two_monomials, members)
    bound = max(default_truncation(two_monomials, exp, weight, 3) for exp in members)
    basis = auto_limit_basis(two_monomials, family, weight, bound)
    assert len(basis.limits) == 4
    degrees = sorted({degree for limit in basis.limits for degree in limit.log_degrees()})
    assert degrees == [0, 1, 2]
    for limit in basis.limits:
        for value in limit.terms.values():
            assert in_ring_report(value, 14).passed
