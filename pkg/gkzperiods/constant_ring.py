"""
    The ring of limiting-period constants.
    Gamma and polygamma values at rationals, pi, logarithms and L-values as monomial
    generators, with exact cyclotomic coefficients and arbitrary-precision evaluation.
"""
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial, floor, gcd, lcm
from threading import RLock
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath
from mpmath import iv
from sympy import Poly, QQ, Rational, Symbol, cyclotomic_poly, factorint, totient
from sympy.ntheory import discrete_log, primitive_root

from gkzperiods.errors import MalformedInputError, PoleError

logger = logging.getLogger(__name__)

X = Symbol("x")
GUARD_BITS = 32

Number = Union[int, Fraction]


@lru_cache(maxsize=None)
def _cyclotomic_modulus(level: int) -> Tuple[int, ...]:
    """Return the coefficients (lowest degree first) of the cyclotomic polynomial of the level."""
    poly = cyclotomic_poly(level, X, polys=True)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


def _reduce(coefficients: List[Fraction], level: int) -> Tuple[Fraction, ...]:
    modulus = _cyclotomic_modulus(level)
    degree = len(modulus) - 1
    coefficients = list(coefficients) + [Fraction(0)] * max(0, degree - len(coefficients))
    for k in range(len(coefficients) - 1, degree - 1, -1):
        lead = coefficients[k]
        if lead:
            for t in range(degree):
                coefficients[k - degree + t] -= lead * modulus[t]
            coefficients[k] = Fraction(0)
    return tuple(coefficients[:degree])


class Cyclotomic:
    """An element of the cyclotomic field Q(zeta_level) in the power basis."""

    __slots__ = ("level", "coefficients")

    def __init__(self, level: int, coefficients: Sequence[Number]):
        self.level = level
        self.coefficients = _reduce([Fraction(c) for c in coefficients], level)

    @classmethod
    def rational(cls, value: Number) -> "Cyclotomic":
        """Return a rational number as cyclotomic element of level 1."""
        return cls(1, (Fraction(value),))

    @classmethod
    def root_of_unity(cls, turns: Number) -> "Cyclotomic":
        """Return exp(2 pi i * turns) for a rational number of turns."""
        turns = Fraction(turns) % 1
        level = turns.denominator
        coefficients = [Fraction(0)] * (turns.numerator + 1)
        coefficients[turns.numerator] = Fraction(1)
        return cls(level, coefficients)

    @classmethod
    def imaginary_unit(cls) -> "Cyclotomic":
        """Return i."""
        return cls.root_of_unity(Fraction(1, 4))

    def lift(self, level: int) -> Tuple[Fraction, ...]:
        """Return the coordinates of this element in Q(zeta_level), a multiple of self.level."""
        if level == self.level:
            return self.coefficients
        step = level // self.level
        coefficients = [Fraction(0)] * ((len(self.coefficients) - 1) * step + 1)
        for k, value in enumerate(self.coefficients):
            coefficients[k * step] = value
        return _reduce(coefficients, level)

    def is_zero(self) -> bool:
        """Return True for the zero element."""
        return not any(self.coefficients)

    def is_rational(self) -> bool:
        """Return True if the element lies in Q."""
        return self.level in (1, 2) or not any(self.coefficients[1:])

    def as_rational(self) -> Fraction:
        """Return the rational value of a rational element."""
        if not self.is_rational():
            raise MalformedInputError("Cyclotomic number is not rational.")
        return self.coefficients[0]

    def __add__(self, other: "Cyclotomic") -> "Cyclotomic":
        if self.level == other.level:
            return Cyclotomic(self.level, [a + b for a, b in zip(self.coefficients, other.coefficients)])
        level = lcm(self.level, other.level)
        return Cyclotomic(level, [a + b for a, b in zip(self.lift(level), other.lift(level))])

    def __neg__(self) -> "Cyclotomic":
        return Cyclotomic(self.level, [-a for a in self.coefficients])

    def __sub__(self, other: "Cyclotomic") -> "Cyclotomic":
        return self + (-other)

    def __mul__(self, other: "Cyclotomic") -> "Cyclotomic":
        if self.level == 1:
            return other.scale(self.coefficients[0])
        if other.level == 1:
            return self.scale(other.coefficients[0])
        level = lcm(self.level, other.level)
        left, right = self.lift(level), other.lift(level)
        product_coefficients = [Fraction(0)] * (len(left) + len(right) - 1)
        for i, a in enumerate(left):
            if a:
                for j, b in enumerate(right):
                    if b:
                        product_coefficients[i + j] += a * b
        return Cyclotomic(level, product_coefficients)

    def scale(self, factor: Number) -> "Cyclotomic":
        """Return the element multiplied by a rational number."""
        return Cyclotomic(self.level, [a * factor for a in self.coefficients])

    def inverse(self) -> "Cyclotomic":
        """Return the multiplicative inverse."""
        if self.is_zero():
            raise PoleError("Division by the cyclotomic zero.")
        if self.level == 1:
            return Cyclotomic.rational(1 / self.coefficients[0])
        element = Poly(
            [Rational(c.numerator, c.denominator) for c in reversed(self.coefficients)], X, domain=QQ
        )
        modulus = Poly(list(reversed(_cyclotomic_modulus(self.level))), X, domain=QQ)
        inverse = element.invert(modulus)
        return Cyclotomic(
            self.level,
            [Fraction(int(c.p), int(c.q)) for c in reversed(inverse.all_coeffs())],
        )

    def conjugate(self) -> "Cyclotomic":
        """Return the complex conjugate."""
        coefficients = [Fraction(0)] * (self.level + 1)
        for k, value in enumerate(self.coefficients):
            coefficients[(-k) % self.level] += value
        return Cyclotomic(self.level, coefficients)

    def enclosure(self):
        """Return a complex interval around the value at the current interval precision."""
        total = iv.mpc(0)
        for k, value in enumerate(self.coefficients):
            if value:
                angle = 2 * iv.pi * k / self.level
                total += _interval_rational(value) * iv.mpc(iv.cos(angle), iv.sin(angle))
        return total

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Cyclotomic.rational(other)
        if not isinstance(other, Cyclotomic):
            return NotImplemented
        level = lcm(self.level, other.level)
        return self.lift(level) == other.lift(level)

    __hash__ = None

    def __repr__(self) -> str:
        if self.is_rational():
            return str(self.coefficients[0])
        terms = [f"{c}*z{self.level}^{k}" for k, c in enumerate(self.coefficients) if c]
        return "(" + " + ".join(terms) + ")"


# --- interval enclosures ----------------------------------------------------------------


def _interval_rational(value: Number):
    value = Fraction(value)
    return iv.mpf(value.numerator) / value.denominator


def _symbol_log(value):
    """Enclose the principal logarithm of a symbol value."""
    if isinstance(value, Fraction):
        value = _interval_rational(value)
    elif hasattr(value, "imag") and value.imag:
        return iv.ln(iv.mpc(value.real, value.imag))
    else:
        value = iv.mpf(value.real if hasattr(value, "real") else value)
    if value.b < 0:
        return iv.mpc(iv.ln(-value), iv.pi)
    return iv.ln(value)


def digamma_shift_enclosure(x: Fraction):
    """Enclose psi(x) - psi(1) for a rational 0 < x < 1 with Gauss's digamma theorem."""
    p, q = x.numerator, x.denominator
    total = -iv.ln(2 * q) - iv.pi / 2 * iv.cos(iv.pi * p / q) / iv.sin(iv.pi * p / q)
    for k in range(1, (q + 1) // 2):
        total += 2 * iv.cos(2 * iv.pi * k * p / q) * iv.ln(iv.sin(iv.pi * k / q))
    return total


def hurwitz_zeta_enclosure(s: int, x: Fraction):
    """Enclose zeta(s, x) for an integer s >= 2 and a rational x > 0 by Euler-Maclaurin summation."""
    terms = iv.prec // 4 + 10
    start = _interval_rational(x)
    total = iv.mpf(0)
    for n in range(terms):
        total += (start + n) ** -s
    shifted = start + terms
    total += shifted ** (1 - s) / (s - 1) + shifted**-s / 2
    rising = s
    for j in range(1, terms + 1):
        numerator, denominator = mpmath.bernfrac(2 * j)
        total += iv.mpf(numerator) / (denominator * factorial(2 * j)) * rising * shifted ** (1 - s - 2 * j)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    order = 2 * terms
    # |R| <= 4 (s)_2M / (2 pi)^2M * (x + N)^(1 - s - 2M) / (s + 2M - 1)
    bound = 4 * (rising // (s + order)) / (2 * iv.pi) ** order * shifted ** (1 - s - order) / (s + order - 1)
    return total + bound * iv.mpf([-1, 1])


def dirichlet_l_enclosure(s: int, character: "DirichletCharacter"):
    """Enclose L(s, chi) through Hurwitz zeta values, or digamma values at s = 1."""
    q = character.modulus
    if s == 1:
        if character.is_principal():
            raise PoleError("L(s, chi) has a pole at s = 1 for the principal character.")
        total = iv.mpc(0)
        for a in range(1, q):
            if gcd(a, q) == 1:
                total -= character.value(a).enclosure() * digamma_shift_enclosure(Fraction(a, q))
        return total / q
    total = iv.mpc(0)
    for a in range(1, q + 1):
        if gcd(a, q) == 1:
            total += character.value(a).enclosure() * hurwitz_zeta_enclosure(s, Fraction(a, q))
    return total / iv.mpf(q) ** s


# --- generators -------------------------------------------------------------------------


@dataclass(frozen=True)
class Pi:
    """The constant pi."""

    kind = "pi"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (0,)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        return +iv.pi


@dataclass(frozen=True)
class GammaValue:
    """Gamma(q) for a rational 0 < q < 1."""

    q: Fraction
    kind = "gamma"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (1, self.q)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        return iv.gamma(_interval_rational(self.q))


@dataclass(frozen=True)
class DigammaDiff:
    """psi(q) - psi(1) for a rational 0 < q < 1."""

    q: Fraction
    kind = "psi0"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (2, self.q)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        return digamma_shift_enclosure(self.q)


@dataclass(frozen=True)
class Polygamma:
    """psi^(k)(q) for k >= 1 and a rational 0 < q <= 1."""

    k: int
    q: Fraction
    kind = "psi"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (3, self.k, self.q)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        sign = 1 if self.k % 2 else -1
        return sign * factorial(self.k) * hurwitz_zeta_enclosure(self.k + 1, self.q)


@dataclass(frozen=True)
class LogPrime:
    """log(p) for a prime p."""

    p: int
    kind = "logp"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (4, self.p)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        return iv.ln(self.p)


@dataclass(frozen=True)
class LogChord:
    """log(2 - 2 cos(2 pi j / q)), the log of a real cyclotomic unit."""

    j: int
    q: int
    kind = "logchord"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (5, self.q, self.j)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        return iv.ln(2 - 2 * iv.cos(2 * iv.pi * self.j / self.q))


@dataclass(frozen=True)
class DirichletL:
    """L(s, chi) for the character with the given index among the characters mod modulus."""

    s: int
    modulus: int
    index: int
    kind = "L"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (6, self.s, self.modulus, self.index)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        character = dirichlet_characters(self.modulus)[self.index]
        return dirichlet_l_enclosure(self.s, character)


@dataclass(frozen=True)
class PrimeRoot:
    """p^(1/N) for a prime p."""

    p: int
    root: int
    kind = "primeroot"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (7, self.p, self.root)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        return iv.exp(iv.ln(self.p) / self.root)


@dataclass(frozen=True)
class LogSymbol:
    """The formal logarithm of a named quantity."""

    name: str
    kind = "log"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (8, self.name)

    def enclosure(self, symbols):
        """Return an interval around the value from the symbol table."""
        if self.name not in symbols:
            raise MalformedInputError(f"No numeric value for symbol: {self.name}")
        return _symbol_log(symbols[self.name])


@dataclass(frozen=True)
class SymbolRoot:
    """The principal N-th root of a named quantity."""

    name: str
    root: int
    kind = "root"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (9, self.name, self.root)

    def enclosure(self, symbols):
        """Return an interval around the value from the symbol table."""
        if self.name not in symbols:
            raise MalformedInputError(f"No numeric value for symbol: {self.name}")
        return iv.exp(_symbol_log(symbols[self.name]) / self.root)


@dataclass(frozen=True)
class EulerGamma:
    """Euler's constant -psi(1); only used to keep the e(eps) factor of SST limits."""

    kind = "eulergamma"

    def sort_key(self):
        """Return the key ordering generators inside a monomial."""
        return (10,)

    def enclosure(self, symbols):  # pylint: disable=unused-argument
        """Return an interval around the value."""
        return +iv.euler


GENERATOR_KINDS = {
    cls.kind: cls
    for cls in (
        Pi,
        GammaValue,
        DigammaDiff,
        Polygamma,
        LogPrime,
        LogChord,
        DirichletL,
        PrimeRoot,
        LogSymbol,
        SymbolRoot,
        EulerGamma,
    )
}
FORMAL_KINDS = ("log", "root")

Monomial = Tuple[Tuple[object, int], ...]
HALF = Fraction(1, 2)


def _normalize_monomial(exponents: Dict[object, int]) -> Tuple[Monomial, Fraction]:
    """Fold Gamma(1/2)^2 into pi and p^(N/N) into p; return the monomial and a rational factor."""
    factor = Fraction(1)
    gamma_half = exponents.pop(GammaValue(HALF), 0)
    if gamma_half:
        exponents[Pi()] = exponents.get(Pi(), 0) + gamma_half // 2
        if gamma_half % 2:
            exponents[GammaValue(HALF)] = 1
    for generator in [g for g in exponents if isinstance(g, PrimeRoot)]:
        whole, rest = divmod(exponents[generator], generator.root)
        factor *= Fraction(generator.p) ** whole
        exponents[generator] = rest
    monomial = tuple(
        sorted(
            ((g, e) for g, e in exponents.items() if e),
            key=lambda item: (type(item[0]).__name__, item[0].sort_key()),
        )
    )
    return monomial, factor


def _multiply_monomials(left: Monomial, right: Monomial) -> Tuple[Monomial, Fraction]:
    if not left:
        return right, Fraction(1)
    if not right:
        return left, Fraction(1)
    exponents = dict(left)
    for generator, power in right:
        exponents[generator] = exponents.get(generator, 0) + power
    return _normalize_monomial(exponents)


class SymbolicConstant:
    """A finite sum of generator monomials with cyclotomic coefficients, kept canonical."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Cyclotomic]] = None):
        self._terms = {m: c for m, c in (terms or {}).items() if not c.is_zero()}

    @classmethod
    def zero(cls) -> "SymbolicConstant":
        """Return 0."""
        return cls()

    @classmethod
    def one(cls) -> "SymbolicConstant":
        """Return 1."""
        return cls({(): Cyclotomic.rational(1)})

    @classmethod
    def rational(cls, value: Number) -> "SymbolicConstant":
        """Return a rational constant."""
        return cls({(): Cyclotomic.rational(value)})

    @classmethod
    def scalar(cls, value: Cyclotomic) -> "SymbolicConstant":
        """Return a cyclotomic constant."""
        return cls({(): value})

    @classmethod
    def generator(cls, generator, power: int = 1) -> "SymbolicConstant":
        """Return generator^power."""
        monomial, factor = _normalize_monomial({generator: power})
        return cls({monomial: Cyclotomic.rational(factor)})

    @property
    def terms(self) -> Dict[Monomial, Cyclotomic]:
        """Return a copy of the term mapping."""
        return dict(self._terms)

    def is_zero(self) -> bool:
        """Return True for the structural zero."""
        return not self._terms

    def is_monomial(self) -> bool:
        """Return True if the constant has exactly one term."""
        return len(self._terms) == 1

    def is_rational(self) -> bool:
        """Return True if the constant is a rational number."""
        return self.is_zero() or (
            set(self._terms) == {()} and self._terms[()].is_rational()
        )

    def as_rational(self) -> Fraction:
        """Return the rational value of a rational constant."""
        if self.is_zero():
            return Fraction(0)
        if not self.is_rational():
            raise MalformedInputError(f"Not a rational constant: {self}")
        return self._terms[()].as_rational()

    def __add__(self, other) -> "SymbolicConstant":
        other = as_constant(other)
        terms = dict(self._terms)
        for monomial, coefficient in other._terms.items():
            if monomial in terms:
                terms[monomial] = terms[monomial] + coefficient
            else:
                terms[monomial] = coefficient
        return SymbolicConstant(terms)

    __radd__ = __add__

    def __neg__(self) -> "SymbolicConstant":
        return SymbolicConstant({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "SymbolicConstant":
        return self + (-as_constant(other))

    def __rsub__(self, other) -> "SymbolicConstant":
        return as_constant(other) - self

    def __mul__(self, other) -> "SymbolicConstant":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return SymbolicConstant()
            return SymbolicConstant({m: c.scale(other) for m, c in self._terms.items()})
        other = as_constant(other)
        terms: Dict[Monomial, Cyclotomic] = {}
        for left, a in self._terms.items():
            for right, b in other._terms.items():
                monomial, factor = _multiply_monomials(left, right)
                value = a * b
                if factor != 1:
                    value = value.scale(factor)
                if monomial in terms:
                    terms[monomial] = terms[monomial] + value
                else:
                    terms[monomial] = value
        return SymbolicConstant(terms)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SymbolicConstant":
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return self * as_constant(other).inverse()

    def __rtruediv__(self, other) -> "SymbolicConstant":
        return as_constant(other) * self.inverse()

    def inverse(self) -> "SymbolicConstant":
        """Return the inverse of a single-term constant."""
        if not self.is_monomial():
            raise PoleError(f"Only single-term constants are invertible: {self}")
        ((monomial, coefficient),) = self._terms.items()
        inverse_monomial, factor = _normalize_monomial({g: -e for g, e in monomial})
        return SymbolicConstant({inverse_monomial: coefficient.inverse().scale(factor)})

    def __pow__(self, exponent: int) -> "SymbolicConstant":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = SymbolicConstant.one()
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def conjugate(self) -> "SymbolicConstant":
        """Return the complex conjugate, treating all generators as real."""
        return SymbolicConstant({m: c.conjugate() for m, c in self._terms.items()})

    def map_terms(self, function: Callable[[Monomial, Cyclotomic], "SymbolicConstant"]):
        """Return the sum of function(monomial, coefficient) over all terms."""
        total = SymbolicConstant()
        for monomial, coefficient in self._terms.items():
            total = total + function(monomial, coefficient)
        return total

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = SymbolicConstant.rational(other)
        if not isinstance(other, SymbolicConstant):
            return NotImplemented
        if set(self._terms) != set(other._terms):
            return False
        return all(self._terms[m] == other._terms[m] for m in self._terms)

    __hash__ = None

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for monomial, coefficient in self._terms.items():
            factors = [repr(coefficient)] + [
                f"{_generator_label(g)}^{e}" if e != 1 else _generator_label(g) for g, e in monomial
            ]
            parts.append("*".join(factors))
        return " + ".join(parts)


def _generator_label(generator) -> str:
    fields = ",".join(str(value) for value in vars(generator).values())
    return f"{generator.kind}({fields})" if fields else generator.kind


def as_constant(value) -> SymbolicConstant:
    """Coerce ints, fractions and cyclotomic numbers into SymbolicConstant."""
    if isinstance(value, SymbolicConstant):
        return value
    if isinstance(value, (int, Fraction)):
        return SymbolicConstant.rational(value)
    if isinstance(value, Cyclotomic):
        return SymbolicConstant.scalar(value)
    raise TypeError(f"Cannot convert {type(value).__name__} into a symbolic constant.")


# --- special values ---------------------------------------------------------------------


def pi_power(power: int = 1) -> SymbolicConstant:
    """Return pi^power."""
    return SymbolicConstant.generator(Pi(), power)


def two_pi_i(power: int = 1) -> SymbolicConstant:
    """Return (2 pi i)^power as 2^power i^power pi^power."""
    scalar = Cyclotomic.root_of_unity(Fraction(power, 4)).scale(Fraction(2) ** power)
    return pi_power(power) * scalar


def exp_pi_i(turns: Number) -> SymbolicConstant:
    """Return exp(pi i x) for rational x."""
    return SymbolicConstant.scalar(Cyclotomic.root_of_unity(Fraction(turns) / 2))


def pochhammer(x: Fraction, k: int) -> Fraction:
    """Return the rising factorial (x)_k for k >= 0."""
    result = Fraction(1)
    for j in range(k):
        result *= x + j
    return result


def gamma_value(x: Number) -> SymbolicConstant:
    """Return Gamma(x) with the integer shift folded into a rational coefficient."""
    x = Fraction(x)
    if x.denominator == 1:
        if x <= 0:
            raise PoleError(f"Gamma has a pole at {x}.")
        return SymbolicConstant.rational(factorial(int(x) - 1))
    shift = floor(x)
    q = x - shift
    if shift >= 0:
        factor = pochhammer(q, shift)
    else:
        factor = 1 / pochhammer(x, -shift)
    return SymbolicConstant.generator(GammaValue(q)) * factor


def reciprocal_gamma(x: Number) -> SymbolicConstant:
    """Return 1/Gamma(x), which vanishes at the nonpositive integers."""
    x = Fraction(x)
    if x.denominator == 1 and x <= 0:
        return SymbolicConstant.zero()
    return gamma_value(x).inverse()


def sin_pi(x: Number) -> SymbolicConstant:
    """Return sin(pi x) rewritten as pi / (Gamma(q) Gamma(1 - q))."""
    x = Fraction(x)
    shift = floor(x)
    q = x - shift
    if q == 0:
        return SymbolicConstant.zero()
    sign = -1 if shift % 2 else 1
    value = pi_power(1) * SymbolicConstant.generator(GammaValue(q), -1)
    value = value * SymbolicConstant.generator(GammaValue(1 - q), -1)
    return value * sign


def cos_pi(x: Number) -> SymbolicConstant:
    """Return cos(pi x) = sin(pi (x + 1/2))."""
    return sin_pi(Fraction(x) + HALF)


def digamma_diff(x: Number) -> SymbolicConstant:
    """Return psi(x) - psi(1) with the shift folded into harmonic sums."""
    x = Fraction(x)
    if x.denominator == 1 and x <= 0:
        raise PoleError(f"Digamma has a pole at {x}.")
    shift = floor(x)
    q = x - shift
    if q == 0:
        q, shift = Fraction(1), shift - 1
    base = SymbolicConstant.zero() if q == 1 else SymbolicConstant.generator(DigammaDiff(q))
    if shift >= 0:
        harmonic = sum((1 / (q + j) for j in range(shift)), Fraction(0))
    else:
        harmonic = -sum((1 / (q - j) for j in range(1, -shift + 1)), Fraction(0))
    return base + harmonic


def polygamma_value(k: int, x: Number) -> SymbolicConstant:
    """Return psi^(k)(x) for k >= 1 with the shift folded into Hurwitz finite sums."""
    if k == 0:
        raise MalformedInputError("Use digamma_diff for k = 0.")
    x = Fraction(x)
    if x.denominator == 1 and x <= 0:
        raise PoleError(f"Polygamma has a pole at {x}.")
    shift = floor(x)
    q = x - shift
    if q == 0:
        q, shift = Fraction(1), shift - 1
    sign_factorial = (-1) ** k * factorial(k)
    if shift >= 0:
        correction = sum((1 / (q + j) ** (k + 1) for j in range(shift)), Fraction(0))
    else:
        correction = -sum((1 / (q - j) ** (k + 1) for j in range(1, -shift + 1)), Fraction(0))
    return SymbolicConstant.generator(Polygamma(k, q)) + correction * sign_factorial


def log_rational(value: Number) -> SymbolicConstant:
    """Return log of a positive rational as a combination of log p."""
    value = Fraction(value)
    if value <= 0:
        raise MalformedInputError(f"log needs a positive rational, got {value}.")
    total = SymbolicConstant.zero()
    for prime, power in factorint(value.numerator).items():
        total = total + SymbolicConstant.generator(LogPrime(int(prime))) * int(power)
    for prime, power in factorint(value.denominator).items():
        total = total - SymbolicConstant.generator(LogPrime(int(prime))) * int(power)
    return total


def log_chord(j: int, q: int) -> SymbolicConstant:
    """Return log(2 - 2 cos(2 pi j / q)) for 0 < j < q."""
    divisor = gcd(j, q)
    j, q = j // divisor, q // divisor
    j = min(j, q - j)
    rational_values = {2: Fraction(4), 3: Fraction(3), 4: Fraction(2), 6: Fraction(1)}
    if q in rational_values:
        return log_rational(rational_values[q])
    return SymbolicConstant.generator(LogChord(j, q))


def rational_power(base: Number, exponent: Fraction) -> SymbolicConstant:
    """Return the principal value of base^exponent for a nonzero rational base."""
    base = Fraction(base)
    exponent = Fraction(exponent)
    if base == 0:
        raise MalformedInputError("Cannot raise 0 to a rational power.")
    result = SymbolicConstant.one()
    if base < 0:
        result = exp_pi_i(exponent)
        base = -base
    root = exponent.denominator
    for number, sign in ((base.numerator, 1), (base.denominator, -1)):
        for prime, multiplicity in factorint(number).items():
            power = sign * exponent.numerator * int(multiplicity)
            if root == 1:
                result = result * Fraction(int(prime)) ** power
            else:
                result = result * SymbolicConstant.generator(PrimeRoot(int(prime), root), power)
    return result


def gauss_multiplication(d: int, x: Number) -> Tuple[Fraction, Fraction, List[Fraction]]:
    """
    Return (power of d, power of 2 pi, arguments) of the multiplication formula
    Gamma(d x) = d^(d x - 1/2) (2 pi)^((1 - d)/2) prod_j Gamma(x + j/d).
    """
    x = Fraction(x)
    return (d * x - HALF, Fraction(1 - d, 2), [x + Fraction(j, d) for j in range(d)])


# --- normalization of raw expression trees -----------------------------------------------

RAW_NODES = {
    "gamma": lambda args: gamma_value(args[0]),
    "rgamma": lambda args: reciprocal_gamma(args[0]),
    "sin": lambda args: sin_pi(args[0]),
    "cos": lambda args: cos_pi(args[0]),
    "exp": lambda args: exp_pi_i(args[0]),
    "psi0": lambda args: digamma_diff(args[0]),
    "psi": lambda args: polygamma_value(args[0], args[1]),
    "pi": lambda args: pi_power(args[0] if args else 1),
    "log": lambda args: log_rational(args[0]),
}


def normalize(tree) -> SymbolicConstant:
    """
    Normalize a raw expression tree into a canonical SymbolicConstant.
    Trees are numbers, SymbolicConstant/Cyclotomic leaves or tuples
    ("add", *children), ("mul", *children), ("pow", child, exponent) and
    (kind, *arguments) for kind in RAW_NODES.
    """
    if isinstance(tree, (int, Fraction, SymbolicConstant, Cyclotomic)):
        return as_constant(tree)
    if not isinstance(tree, tuple) or not tree:
        raise MalformedInputError(f"Invalid expression tree: {tree!r}")
    kind, *arguments = tree
    if kind == "add":
        total = SymbolicConstant.zero()
        for child in arguments:
            total = total + normalize(child)
        return total
    if kind == "mul":
        result = SymbolicConstant.one()
        for child in arguments:
            result = result * normalize(child)
        return result
    if kind == "pow":
        return normalize(arguments[0]) ** int(arguments[1])
    if kind in RAW_NODES:
        return RAW_NODES[kind](arguments)
    raise MalformedInputError(f"Unknown expression node: {kind}")


# --- numeric evaluation -----------------------------------------------------------------


@dataclass(frozen=True)
class NumericValue:
    """A complex midpoint with an error radius at a recorded precision."""

    midpoint: mpmath.mpc
    radius: mpmath.mpf
    precision: int

    def agrees_with(self, other, tolerance) -> bool:
        """Return True if the values differ by at most radius + tolerance."""
        other_mid = other.midpoint if isinstance(other, NumericValue) else other
        other_radius = other.radius if isinstance(other, NumericValue) else 0
        return abs(self.midpoint - other_mid) <= self.radius + other_radius + tolerance

    def contains(self, other: "NumericValue") -> bool:
        """Return True if the other ball lies inside this ball."""
        return abs(self.midpoint - other.midpoint) + other.radius <= self.radius

    def __str__(self) -> str:
        digits = max(int(self.precision * 0.30103), 15)
        return mpmath.nstr(self.midpoint, digits)


# pylint: disable=invalid-name
numeric_cache: Dict[Tuple[object, int], object] = {}
# pylint: enable=invalid-name
numeric_lock = RLock()


@contextmanager
def working_precision(bits: int):
    """Run a block at the given mpmath precision while holding the numeric lock."""
    with numeric_lock, mpmath.workprec(bits):
        yield


@contextmanager
def _interval_precision(bits: int):
    with numeric_lock:
        saved = iv.prec
        iv.prec = bits
        try:
            yield
        finally:
            iv.prec = saved


def _generator_enclosure(generator, bits: int, symbols):
    if generator.kind in FORMAL_KINDS:
        return generator.enclosure(symbols)
    key = (generator, bits)
    value = numeric_cache.get(key)
    if value is None:
        value = generator.enclosure(symbols)
        numeric_cache[key] = value
    return value


def _enclose(constant: SymbolicConstant, bits: int, symbols):
    with _interval_precision(bits):
        total = iv.mpc(0)
        for monomial, coefficient in constant.terms.items():
            term = coefficient.enclosure()
            for generator, power in monomial:
                term *= _generator_enclosure(generator, bits, symbols) ** power
            total += term
        return total


def _center_and_half_width(part) -> Tuple[mpmath.mpf, mpmath.mpf]:
    lower, upper = (mpmath.mpf(end) for end in part._mpi_)  # pylint: disable=protected-access
    center = mpmath.ldexp(mpmath.fadd(lower, upper, exact=True), -1)
    return center, mpmath.ldexp(mpmath.fsub(upper, lower, exact=True), -1)


def eval_numeric(
    constant: SymbolicConstant, precision: int = 128, symbols: Optional[Mapping] = None
) -> NumericValue:
    """Enclose a constant in a complex ball computed with interval arithmetic at precision + guard bits."""
    if precision < 64:
        raise MalformedInputError("Numeric evaluation needs at least 64 bits.")
    symbols = symbols or {}
    bits = precision + GUARD_BITS
    with numeric_lock:
        enclosure = _enclose(constant, bits, symbols)
        with mpmath.workprec(bits + GUARD_BITS):
            real, real_radius = _center_and_half_width(enclosure.real)
            imag, imag_radius = _center_and_half_width(enclosure.imag)
            midpoint = mpmath.mpc(real, imag)
            rounding = mpmath.ldexp(abs(midpoint), 1 - mpmath.mp.prec)
            radius = mpmath.fadd(mpmath.fadd(real_radius, imag_radius, rounding="u"), rounding, rounding="u")
    return NumericValue(midpoint, radius, precision)


def split_formal(constant: SymbolicConstant) -> Dict[Monomial, SymbolicConstant]:
    """Group the terms by their formal-symbol part; the values carry the remaining factors."""
    groups: Dict[Monomial, SymbolicConstant] = {}
    for monomial, coefficient in constant.terms.items():
        formal = tuple((g, e) for g, e in monomial if g.kind in FORMAL_KINDS)
        rest = tuple((g, e) for g, e in monomial if g.kind not in FORMAL_KINDS)
        part = SymbolicConstant({rest: coefficient})
        groups[formal] = groups.get(formal, SymbolicConstant.zero()) + part
    return groups


def numerically_zero(constant: SymbolicConstant, precision: int = 128, tolerance=None) -> bool:
    """Return True if every formal-symbol group of the constant evaluates to zero."""
    if constant.is_zero():
        return True
    with working_precision(precision + GUARD_BITS):
        for group in split_formal(constant).values():
            value = eval_numeric(group, precision)
            scale = max(
                (abs(eval_numeric(SymbolicConstant({m: c}), precision).midpoint) for m, c in group.terms.items()),
                default=mpmath.mpf(1),
            )
            bound = tolerance if tolerance is not None else mpmath.ldexp(scale, -precision // 2)
            if abs(value.midpoint) > value.radius + bound:
                return False
    return True


def numerically_equal(left, right, precision: int = 128, tolerance=None) -> bool:
    """Two-tier equality: structural first, numeric enclosure second."""
    left, right = as_constant(left), as_constant(right)
    if left == right:
        return True
    return numerically_zero(left - right, precision, tolerance)


# --- polygamma rewriting ----------------------------------------------------------------


@dataclass(frozen=True)
class DirichletCharacter:
    """A Dirichlet character given by its values exp(2 pi i r_a) on the units mod q."""

    modulus: int
    turns: Tuple[Optional[Fraction], ...]

    def value(self, a: int) -> Cyclotomic:
        """Return chi(a) as cyclotomic number (0 for a not coprime to the modulus)."""
        turns = self.turns[a % self.modulus]
        if turns is None:
            return Cyclotomic.rational(0)
        return Cyclotomic.root_of_unity(turns)

    def is_principal(self) -> bool:
        """Return True for the principal character."""
        return all(t is None or t == 0 for t in self.turns)

    def is_primitive(self) -> bool:
        """Return True if the character is not induced from a proper divisor of its modulus."""
        q = self.modulus
        if q == 1:
            return True
        for prime in factorint(q):
            divisor = q // int(prime)
            trivial = all(
                self.turns[a] == 0
                for a in range(1, q)
                if gcd(a, q) == 1 and (a - 1) % divisor == 0
            )
            if trivial:
                return False
        return True


def _unit_group_factors(q: int) -> List[Tuple[int, Callable[[int], int]]]:
    """Return (order, discrete-log function) for every cyclic factor of (Z/q)^x."""
    factors = []
    for prime, power in sorted(factorint(q).items()):
        prime, power = int(prime), int(power)
        modulus = prime**power
        if prime == 2:
            if power == 2:
                factors.append((2, lambda a: 0 if a % 4 == 1 else 1))
            elif power >= 3:
                factors.append((2, lambda a: 0 if a % 4 == 1 else 1))
                factors.append(
                    (
                        2 ** (power - 2),
                        lambda a, m=modulus: int(
                            discrete_log(m, (a if a % 4 == 1 else -a) % m, 5)
                        ),
                    )
                )
            continue
        root = int(primitive_root(modulus))
        order = int(totient(modulus))
        factors.append((order, lambda a, m=modulus, g=root: int(discrete_log(m, a % m, g))))
    return factors


@lru_cache(maxsize=None)
def dirichlet_characters(q: int) -> Tuple[DirichletCharacter, ...]:
    """Return all Dirichlet characters mod q, the principal one first."""
    factors = _unit_group_factors(q)
    logs = {
        a: [log(a) for _, log in factors] for a in range(q) if gcd(a, q) == 1 or q == 1
    }
    characters = []
    for exponents in product(*(range(order) for order, _ in factors)):
        turns = []
        for a in range(q):
            if a not in logs:
                turns.append(None)
                continue
            total = sum(
                (Fraction(j * k, order) for j, k, (order, _) in zip(exponents, logs[a], factors)),
                Fraction(0),
            )
            turns.append(total % 1)
        characters.append(DirichletCharacter(q, tuple(turns)))
    return tuple(characters)


@dataclass(frozen=True)
class Rewrite:
    """A rewritten constant with its numeric-equality certificate."""

    source: SymbolicConstant
    value: SymbolicConstant
    agrees: bool
    difference: object
    caveat: Optional[str] = None


def _certify(source, value, precision: int, tolerance) -> Tuple[bool, object]:
    with working_precision(precision + GUARD_BITS):
        left = eval_numeric(source, precision)
        right = eval_numeric(value, precision)
        difference = abs(left.midpoint - right.midpoint)
        return difference <= left.radius + right.radius + tolerance, difference


def digamma_rewrite(p: int, q: int) -> SymbolicConstant:
    """Return psi(p/q) - psi(1) through log q, a cotangent and logs of cyclotomic units."""
    result = -log_rational(q)
    zeta = Cyclotomic.root_of_unity(Fraction(p, 2 * q))
    cotangent = Cyclotomic.imaginary_unit() * (zeta + zeta.inverse()) * (zeta - zeta.inverse()).inverse()
    result = result - pi_power(1) * SymbolicConstant.scalar(cotangent.scale(HALF))
    for j in range(1, q):
        rotation = Cyclotomic.root_of_unity(Fraction(j * p, q))
        cosine = (rotation + rotation.inverse()).scale(HALF)
        result = result + log_chord(j, q) * SymbolicConstant.scalar(cosine.scale(HALF))
    return result


def l_value_from_polygamma(s: int, character: DirichletCharacter) -> SymbolicConstant:
    """Return L(s, chi) = (-1)^s / ((s-1)! q^s) sum_a chi(a) psi^(s-1)(a/q) for s >= 2."""
    k = s - 1
    q = character.modulus
    factor = Fraction((-1) ** (k + 1), factorial(k) * q**s)
    total = SymbolicConstant.zero()
    for a in range(1, q + 1):
        value = character.value(a)
        if value.is_zero():
            continue
        total = total + polygamma_value(k, Fraction(a, q)) * SymbolicConstant.scalar(value)
    return total * factor


def psi_to_log_L(  # pylint: disable=invalid-name
    generator,
    precision: int = 128,
    tolerance=mpmath.mpf(10) ** -25,
    all_characters: bool = False,
) -> Rewrite:
    """Rewrite a digamma or polygamma generator in logs or Dirichlet L-values."""
    source = SymbolicConstant.generator(generator)
    q_value = Fraction(generator.q)
    p, q = q_value.numerator, q_value.denominator
    if q == 1:
        return Rewrite(source, source, True, 0, "Value at an integer is already normalized.")
    if isinstance(generator, DigammaDiff):
        value = digamma_rewrite(p, q)
        agrees, difference = _certify(source, value, precision, tolerance)
        return Rewrite(source, value, agrees, difference)
    k = generator.k
    characters = dirichlet_characters(q)
    indices = [
        i for i, character in enumerate(characters) if all_characters or character.is_primitive()
    ]
    if not all_characters and q == 2:
        return Rewrite(
            source, source, True, 0, "No primitive character of conductor 2; rewriting skipped."
        )
    scale = Fraction((-1) ** (k - 1) * factorial(k) * q ** (k + 1), int(totient(q)))
    value = SymbolicConstant.zero()
    for i in indices:
        weight = characters[i].value(p).conjugate()
        value = value + SymbolicConstant.generator(DirichletL(k + 1, q, i)) * SymbolicConstant.scalar(weight)
    value = value * scale
    agrees, difference = _certify(source, value, precision, tolerance)
    caveat = None
    if not all_characters:
        caveat = (
            "Sum restricted to primitive characters; the inverse identity needs all "
            "characters mod q."
        )
    logger.debug("psi^(%d)(%s) rewritten with %d characters", k, q_value, len(indices))
    return Rewrite(source, value, agrees, difference, caveat)


# --- ring membership --------------------------------------------------------------------


@dataclass(frozen=True)
class MonomialVerdict:
    """Ring membership of one monomial."""

    monomial: Monomial
    passed: bool
    reasons: Tuple[str, ...]


@dataclass(frozen=True)
class RingReport:
    """Ring membership of every monomial of a constant."""

    M: int
    e: Fraction
    verdicts: Tuple[MonomialVerdict, ...]

    @property
    def passed(self) -> bool:
        """Return True if every monomial passed."""
        return all(verdict.passed for verdict in self.verdicts)


ALLOWED_EXTRA_KINDS = ("pi", "log", "root", "logp", "primeroot")


def in_ring_report(
    constant: SymbolicConstant,
    M: int,  # pylint: disable=invalid-name
    e: Number = 0,
    allowed_kinds: Iterable[str] = ALLOWED_EXTRA_KINDS,
) -> RingReport:
    """Check every monomial against PG(M, e) extended by the allowed generator kinds."""
    e = Fraction(e)
    allowed_kinds = set(allowed_kinds)
    verdicts = []
    for monomial, coefficient in constant.terms.items():
        reasons = []
        weight = Fraction(0)
        for generator, power in monomial:
            if generator.kind in ("gamma", "psi0", "psi"):
                if M % generator.q.denominator:
                    reasons.append(f"denominator of {generator.q} does not divide {M}")
                if generator.kind == "gamma":
                    weight += power * generator.q
            elif generator.kind == "pi":
                continue
            elif generator.kind not in allowed_kinds:
                reasons.append(f"generator {_generator_label(generator)} outside the ring")
        if (weight - e) % 1:
            reasons.append(f"Gamma weight {weight % 1} differs from {e % 1} mod 1")
        field_level = lcm(2 * M, 4)
        if field_level % coefficient.level:
            reasons.append(f"coefficient field of level {coefficient.level} not inside Q(zeta_{field_level})")
        verdicts.append(MonomialVerdict(monomial, not reasons, tuple(reasons)))
    return RingReport(M, e, tuple(verdicts))
