"""Test degeneration arcs, the pullback to Puiseux-log series and the limiting-period table."""
from fractions import Fraction

import mpmath
import pytest

from gkzperiods.constant_ring import SymbolicConstant, eval_numeric, numerically_equal
from gkzperiods.errors import (
    InsufficientTruncationError,
    MalformedInputError,
    SkeletonHitError,
    UnsupportedTriangulationError,
)
from gkzperiods.fermat_periods import fermat_point_value, period_expansion
from gkzperiods.gamma_series import fermat_exponent, truncated_gamma_series
from gkzperiods.limit_periods import (
    PuiseuxLogSeries,
    emit_csv,
    exponent_denominators_divide,
    initial_log,
    initial_power,
    limiting_period_table,
    make_arc,
    pullback,
    pullback_numeric,
    scale_arc,
    scaling_covariant,
)
from gkzperiods.problem import dump_json, encode_table

FERMAT_WEIGHT = (1, 0, 0)


@pytest.fixture(name="toy_series")
def fixture_toy_series(toy):
    """Factory function for the p = 0 toy series truncated at w.u <= 6."""
    return truncated_gamma_series(toy, fermat_exponent(toy, (1, 2), (0,)), FERMAT_WEIGHT, 6)


@pytest.fixture(name="toy_table")
def fixture_toy_table(toy):
    """Factory function for the toy table along the Fermat arc."""
    return limiting_period_table(toy, make_arc(FERMAT_WEIGHT), [(1, 2)], precision=96)


def test_make_arc_defaults():
    """Test if initial coefficients default to one and the weight is the order vector."""
    arc = make_arc((1, 0, 0))
    assert arc.initials == (1, 1, 1)
    assert arc.weight == (1, 0, 0)
    assert arc.tail(0) == ()


@pytest.mark.parametrize(
    "orders, initials, tails, message",
    (
        ((1, 0), [1], None, "needs an order and an initial value"),
        ((1, 0), [1, 0], None, "must be nonzero"),
        ((1, 0), [1, 1], [[1]], "every arc coordinate or none"),
    ),
)
def test_make_arc_validation(orders, initials, tails, message):
    """Test if malformed arcs are rejected with a readable message."""
    with pytest.raises(MalformedInputError) as error:
        make_arc(orders, initials, tails)

    assert message in str(error.value)


def test_initial_power_and_log():
    """Test principal powers and logs of rational and named initial coefficients."""
    assert initial_power(4, Fraction(1, 2)) == 2
    assert initial_power("s", 0) == 1
    assert not initial_power("s", Fraction(1, 3)).is_zero()
    assert initial_log(1).is_zero()
    value = eval_numeric(initial_log(-1)).midpoint
    assert mpmath.almosteq(value, mpmath.mpc(0, mpmath.pi), 1e-30)


def test_puiseux_series_coefficients():
    """Test the ramification, the sum and the truncation guard of a Puiseux-log series."""
    one = SymbolicConstant.one()
    series = PuiseuxLogSeries(Fraction(2), {(Fraction(1, 3), 0): one, (Fraction(1, 2), 1): one})
    assert series.ramification == 6
    assert series.leading_exponent() == Fraction(1, 3)
    assert series.log_degrees(Fraction(1, 2)) == [1]
    assert (series + series.scale(-1)).terms == {}
    assert series.coefficient(1).is_zero()
    with pytest.raises(InsufficientTruncationError):
        series.coefficient(3)


def test_pullback_along_fermat_arc(toy_series):
    """Test if the Fermat arc gives integer exponents w.u and no logs."""
    expansion = pullback(toy_series, make_arc(FERMAT_WEIGHT))
    assert expansion.exponents() == [0, 3, 6]
    assert expansion.log_degrees() == [0]
    assert numerically_equal(expansion.coefficient(0), toy_series.coefficient((0, 0, 0)))
    assert pullback(toy_series, make_arc(FERMAT_WEIGHT), t_order=4).exponents() == [0, 3]


def test_pullback_with_tail_matches_numeric(toy_series):
    """Test if a tail in t spreads coefficients and agrees with floating recomputation."""
    arc = make_arc(FERMAT_WEIGHT, [2, 1, 1], [[1], [], []])
    expansion = pullback(toy_series, arc)
    assert expansion.exponents() == [0, 3, 4, 5, 6]
    exact = eval_numeric(expansion.coefficient(4)).midpoint
    assert mpmath.almosteq(exact, pullback_numeric(toy_series, arc, 4), 1e-25)


def test_pullback_needs_matching_weight(toy_series):
    """Test if a series truncated along another weight is refused."""
    with pytest.raises(UnsupportedTriangulationError):
        pullback(toy_series, make_arc((2, 0, 0)))
    with pytest.raises(MalformedInputError):
        pullback(toy_series, make_arc((1, 0)))


def test_scaling_covariance(toy_series):
    """Test if t -> 2t rescales the coefficient of t^alpha by 2^alpha."""
    assert scaling_covariant(toy_series, make_arc(FERMAT_WEIGHT), 2)
    scaled = scale_arc(make_arc(FERMAT_WEIGHT, tails=[[1], [], []]), 3)
    assert scaled.initials == (3, 1, 1)
    assert scaled.tail(0) == (3,)


def test_scale_arc_rejects_formal_initials():
    """Test if a named initial coefficient on a moving coordinate cannot be rescaled."""
    with pytest.raises(MalformedInputError) as error:
        scale_arc(make_arc(FERMAT_WEIGHT, ["s", 1, 1]), 2)

    assert "Cannot rescale" in str(error.value)


def test_limiting_period_table_of_toy(toy, toy_table):
    """Test if the toy table holds one row per p with the Fermat period at t^0."""
    assert toy_table.triangulation == "fermat"
    assert toy_table.N_A == 6
    assert [row.p for row in toy_table.rows] == [(0,), (1,)]
    assert toy_table.rows[0].leading_exponent == 0
    assert toy_table.rows[1].leading_exponent == 1
    expected = fermat_point_value(period_expansion(toy, (1, 2)))
    assert numerically_equal(toy_table.rows[0].window[Fraction(0)], expected)
    assert all(row.passed and row.certified for row in toy_table.rows)
    assert all(exponent_denominators_divide(row.expansion, 6) for row in toy_table.rows)


def test_limiting_period_table_is_independent_of_threads(toy, toy_table):
    """Test if four worker threads give the same rows, windows and certificates as one."""
    parallel = limiting_period_table(toy, make_arc(FERMAT_WEIGHT), [(1, 2)], precision=96, threads=4)
    assert dump_json(encode_table(parallel)) == dump_json(encode_table(toy_table))
    assert [row.certified for row in parallel.rows] == [row.certified for row in toy_table.rows]


def test_limiting_period_table_rejects_skeleton(toy):
    """Test if an arc whose weight lies on the skeleton is refused."""
    with pytest.raises(SkeletonHitError) as error:
        limiting_period_table(toy, make_arc((0, 0, 0)), [(1, 2)])

    assert "lies on the cone" in str(error.value)


def test_formal_initials_skip_the_certificate(toy):
    """Test if rows along an arc with unresolved symbols are left uncertified."""
    table = limiting_period_table(toy, make_arc(FERMAT_WEIGHT, ["s", 1, 1]), [(1, 2)])
    assert all(row.certified is None for row in table.rows)


def test_emit_csv(toy_table):
    """Test if the CSV summary has a header and one line per window entry."""
    lines = emit_csv(toy_table).splitlines()
    assert lines[0] == "row,alpha,value,symbolic,ring"
    assert lines[1].startswith('"c=1,2;p=0",0,')
    assert lines[1].endswith(",pass")
    assert len(lines) == 1 + sum(len(row.window) for row in toy_table.rows)


@pytest.mark.slow
def test_limiting_period_table_along_dwork_arc(toy):
    """Test if the continued toy expansion pulls back with exponents in (1/N_A) Z."""
    table = limiting_period_table(toy, make_arc((-1, 0, 0)), [(1, 2)], terms=6, precision=96)
    assert table.triangulation == "dwork"
    assert len(table.rows) == 2
    for row in table.rows:
        assert row.leading_exponent is not None
        assert exponent_denominators_divide(row.expansion, table.N_A)
