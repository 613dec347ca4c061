"""Test exact constants, their numeric evaluation and the ring membership reports."""
import threading
from fractions import Fraction

import mpmath
import pytest

from gkzperiods.constant_ring import (
    Cyclotomic,
    DigammaDiff,
    DirichletL,
    LogSymbol,
    Polygamma,
    SymbolicConstant,
    SymbolRoot,
    digamma_diff,
    digamma_rewrite,
    dirichlet_characters,
    eval_numeric,
    exp_pi_i,
    gamma_value,
    in_ring_report,
    l_value_from_polygamma,
    log_chord,
    log_rational,
    normalize,
    numerically_equal,
    numerically_zero,
    pi_power,
    polygamma_value,
    psi_to_log_L,
    rational_power,
    reciprocal_gamma,
    sin_pi,
    split_formal,
    two_pi_i,
    working_precision,
)
from gkzperiods.errors import MalformedInputError, PoleError


def _value(constant):
    return eval_numeric(constant).midpoint


def test_cyclotomic_arithmetic():
    """Test if roots of unity multiply and invert in the power basis."""
    i = Cyclotomic.imaginary_unit()
    assert i * i == -1
    assert Cyclotomic.root_of_unity(Fraction(1, 4)) == i
    assert Cyclotomic.root_of_unity(Fraction(5, 4)) == i
    one_plus_i = Cyclotomic.rational(1) + i
    assert one_plus_i * one_plus_i.inverse() == 1
    assert i.conjugate() == -i
    assert not i.is_rational()
    assert (i * i).is_rational()


def test_cyclotomic_zero_has_no_inverse():
    """Test if inverting zero is a pole."""
    with pytest.raises(PoleError):
        Cyclotomic.rational(0).inverse()


def test_gamma_half_squared_folds_into_pi():
    """Test if Gamma(1/2)^2 normalizes to pi."""
    assert gamma_value(Fraction(1, 2)) ** 2 == pi_power(1)
    assert gamma_value(Fraction(3, 2)) == gamma_value(Fraction(1, 2)) * Fraction(1, 2)
    assert gamma_value(4) == 6


def test_gamma_poles():
    """Test if Gamma has poles and 1/Gamma zeros at the nonpositive integers."""
    with pytest.raises(PoleError):
        gamma_value(0)
    assert reciprocal_gamma(-2).is_zero()
    assert not reciprocal_gamma(Fraction(-1, 2)).is_zero()


def test_gamma_value_at_negative_fraction():
    """Test if the negative shift of Gamma is folded into a rational factor."""
    assert mpmath.almosteq(_value(gamma_value(Fraction(-1, 2))), -2 * mpmath.sqrt(mpmath.pi), 1e-30)


@pytest.mark.parametrize(
    "x, expected",
    ((Fraction(1, 6), Fraction(1, 2)), (Fraction(7, 6), Fraction(-1, 2)), (Fraction(1, 2), 1)),
)
def test_sin_pi(x, expected):
    """Test if sin(pi x) through the reflection formula has the right value."""
    assert numerically_equal(sin_pi(x), expected)


def test_sin_pi_vanishes_at_integers():
    """Test if sin(pi k) is the structural zero."""
    assert sin_pi(2).is_zero()


def test_rational_power():
    """Test if principal rational powers reduce to exact values where possible."""
    assert rational_power(4, Fraction(1, 2)) == 2
    assert rational_power(-1, Fraction(1, 2)) == exp_pi_i(Fraction(1, 2))
    assert rational_power(Fraction(1, 8), Fraction(1, 3)) == Fraction(1, 2)
    assert mpmath.almosteq(_value(rational_power(3, Fraction(1, 2))), mpmath.sqrt(3), 1e-30)


def test_rational_power_of_zero():
    """Test if 0 cannot be raised to a rational power."""
    with pytest.raises(MalformedInputError):
        rational_power(0, Fraction(1, 2))


def test_two_pi_i():
    """Test if (2 pi i)^2 evaluates to -4 pi^2."""
    assert mpmath.almosteq(_value(two_pi_i(2)), -4 * mpmath.pi**2, 1e-30)


def test_logs():
    """Test if logs of rationals and cyclotomic chords evaluate correctly."""
    assert mpmath.almosteq(_value(log_rational(Fraction(12, 5))), mpmath.log(mpmath.mpf(12) / 5), 1e-30)
    assert log_chord(1, 3) == log_rational(3)
    chord = log_chord(1, 7)
    assert mpmath.almosteq(_value(chord), mpmath.log(2 - 2 * mpmath.cospi(mpmath.mpf(2) / 7)), 1e-30)
    with pytest.raises(MalformedInputError):
        log_rational(-2)


def test_digamma_and_polygamma_shifts():
    """Test if integer shifts are folded into rational corrections."""
    assert digamma_diff(1) == 0
    assert digamma_diff(3) == Fraction(3, 2)
    value = _value(digamma_diff(Fraction(7, 3)))
    assert mpmath.almosteq(value, mpmath.digamma(mpmath.mpf(7) / 3) + mpmath.euler, 1e-30)
    value = _value(polygamma_value(1, Fraction(5, 4)))
    assert mpmath.almosteq(value, mpmath.psi(1, mpmath.mpf(5) / 4), 1e-30)
    with pytest.raises(MalformedInputError):
        polygamma_value(0, Fraction(1, 2))


def test_normalize_raw_trees():
    """Test if raw expression trees normalize to the same canonical constant."""
    tree = ("mul", ("gamma", Fraction(1, 2)), ("gamma", Fraction(1, 2)))
    assert normalize(tree) == pi_power(1)
    assert normalize(("add", 1, ("pow", ("pi",), 0))) == 2
    with pytest.raises(MalformedInputError):
        normalize(("zeta", 3))


def test_only_monomials_are_invertible():
    """Test if inverting a sum of monomials is refused."""
    with pytest.raises(PoleError):
        (pi_power(1) + 1).inverse()


def test_eval_numeric_precision_floor():
    """Test if numeric evaluation refuses fewer than 64 bits."""
    with pytest.raises(MalformedInputError):
        eval_numeric(pi_power(1), precision=32)


def test_eval_numeric_reports_error_radius():
    """Test if the error radius is tiny compared with the value."""
    value = eval_numeric(gamma_value(Fraction(1, 3)), precision=128)
    assert value.radius < mpmath.mpf(10) ** -30
    assert value.agrees_with(mpmath.gamma(mpmath.mpf(1) / 3), mpmath.mpf(10) ** -30)


@pytest.mark.parametrize(
    "constant, reference",
    (
        (gamma_value(Fraction(1, 3)), lambda: mpmath.gamma(mpmath.mpf(1) / 3)),
        (digamma_diff(Fraction(2, 5)), lambda: mpmath.digamma(mpmath.mpf(2) / 5) + mpmath.euler),
        (polygamma_value(2, Fraction(3, 7)), lambda: mpmath.psi(2, mpmath.mpf(3) / 7)),
        (log_chord(2, 9), lambda: mpmath.log(2 - 2 * mpmath.cospi(mpmath.mpf(4) / 9))),
        (SymbolicConstant.generator(DirichletL(2, 4, 1)), lambda: +mpmath.catalan),
        (SymbolicConstant.generator(DirichletL(1, 4, 1)), lambda: mpmath.pi / 4),
        (exp_pi_i(Fraction(1, 5)) * pi_power(-2), lambda: mpmath.expjpi(mpmath.mpf(1) / 5) / mpmath.pi**2),
    ),
)
def test_eval_numeric_encloses_the_value(constant, reference):
    """Test if the balls at 64 and 128 bits contain the value computed at 600 bits."""
    with working_precision(600):
        exact = reference()
    for precision in (64, 128):
        value = eval_numeric(constant, precision)
        with working_precision(600):
            assert abs(value.midpoint - exact) <= value.radius


def test_doubling_precision_shrinks_the_radius():
    """Test if every doubling of the precision gives a strictly smaller enclosure."""
    constant = gamma_value(Fraction(1, 3)) ** 2 * pi_power(-1) + polygamma_value(1, Fraction(1, 4))
    radii = [eval_numeric(constant, precision).radius for precision in (64, 128, 256)]
    assert radii[0] > radii[1] > radii[2] > 0


def test_principal_l_value_at_one_is_a_pole():
    """Test if L(1, chi) of the principal character has no enclosure."""
    with pytest.raises(PoleError):
        eval_numeric(SymbolicConstant.generator(DirichletL(1, 4, 0)))


def test_precision_blocks_are_serialised():
    """Test if evaluations in another thread cannot change the precision inside a held block."""
    samples = []
    done = threading.Event()

    def evaluate():
        while not done.is_set():
            eval_numeric(SymbolicConstant.one(), 64)

    worker = threading.Thread(target=evaluate)
    with working_precision(400):
        worker.start()
        for _ in range(5000):
            samples.append(mpmath.mp.prec)
        done.set()
    worker.join()
    assert set(samples) == {400}


def test_formal_symbols_need_values():
    """Test if formal logs are evaluated from the symbol table."""
    constant = SymbolicConstant.generator(LogSymbol("s"))
    with pytest.raises(MalformedInputError):
        eval_numeric(constant)
    assert mpmath.almosteq(eval_numeric(constant, symbols={"s": mpmath.mpf(5)}).midpoint, mpmath.log(5))


def test_formal_symbols_take_principal_branches():
    """Test if a negative rational symbol gives log |s| + pi i and a principal root."""
    log_s = eval_numeric(SymbolicConstant.generator(LogSymbol("s")), symbols={"s": Fraction(-2)}).midpoint
    assert mpmath.almosteq(log_s, mpmath.mpc(mpmath.log(2), mpmath.pi), 1e-30)
    root = eval_numeric(SymbolicConstant.generator(SymbolRoot("s", 2)), symbols={"s": Fraction(-4)}).midpoint
    assert mpmath.almosteq(root, mpmath.mpc(0, 2), 1e-30)


def test_numerically_zero_groups_formal_symbols():
    """Test if vanishing is judged separately per formal-symbol group."""
    log_s = SymbolicConstant.generator(LogSymbol("s"))
    assert numerically_zero(log_s * (sin_pi(Fraction(1, 6)) - Fraction(1, 2)))
    assert not numerically_zero(log_s + sin_pi(Fraction(1, 6)) - Fraction(1, 2))
    assert len(split_formal(log_s + 1)) == 2


def test_dirichlet_characters():
    """Test the count, principality and primitivity of characters."""
    characters = dirichlet_characters(5)
    assert len(characters) == 4
    assert characters[0].is_principal()
    assert sum(character.is_primitive() for character in characters) == 3
    assert sum(character.is_primitive() for character in dirichlet_characters(8)) == 2
    assert characters[1].value(5) == 0


def test_dirichlet_characters_are_multiplicative():
    """Test if chi(a) chi(b) = chi(a b) for every character mod 7."""
    for character in dirichlet_characters(7):
        for a in range(1, 7):
            for b in range(1, 7):
                assert character.value(a) * character.value(b) == character.value(a * b)


def test_l_value_from_polygamma_gives_catalan():
    """Test if L(2, chi_4) computed from trigamma values is Catalan's constant."""
    (chi,) = [character for character in dirichlet_characters(4) if not character.is_principal()]
    value = _value(l_value_from_polygamma(2, chi))
    assert mpmath.almosteq(value, mpmath.catalan, 1e-30)


@pytest.mark.parametrize("p, q", ((1, 3), (2, 5), (1, 7), (3, 14)))
def test_digamma_rewrite_agrees(p, q):
    """Test if the log and cotangent rewrite of psi(p/q) - psi(1) is numerically exact."""
    assert numerically_equal(digamma_rewrite(p, q), digamma_diff(Fraction(p, q)))
    assert psi_to_log_L(DigammaDiff(Fraction(p, q))).agrees


def test_psi_to_log_l_needs_all_characters():
    """Test if the polygamma rewrite holds with all characters and carries a caveat otherwise."""
    full = psi_to_log_L(Polygamma(1, Fraction(1, 4)), all_characters=True)
    assert full.agrees
    assert full.caveat is None
    restricted = psi_to_log_L(Polygamma(1, Fraction(1, 4)))
    assert restricted.caveat is not None


def test_in_ring_report():
    """Test if Gamma denominators and the weight modulo 1 are checked per monomial."""
    constant = gamma_value(Fraction(1, 14)) ** 4 * gamma_value(Fraction(3, 14)) * pi_power(-2)
    assert in_ring_report(constant, 14, Fraction(1, 2)).passed
    failed = in_ring_report(constant, 14, 0)
    assert not failed.passed
    assert "Gamma weight" in failed.verdicts[0].reasons[0]
    foreign = in_ring_report(gamma_value(Fraction(1, 5)), 14, Fraction(1, 5))
    assert not foreign.passed
    assert "does not divide 14" in foreign.verdicts[0].reasons[0]


def test_in_ring_report_rejects_foreign_generators():
    """Test if generators outside the allowed kinds fail the report."""
    report = in_ring_report(SymbolicConstant.generator(DigammaDiff(Fraction(1, 7))) * 1, 14)
    assert report.passed
    report = in_ring_report(log_chord(1, 7), 14)
    assert not report.passed
    assert "outside the ring" in report.verdicts[0].reasons[0]
