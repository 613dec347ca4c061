"""Epsilon-perturbed Gamma series and their SST limits."""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from gkzperiods.constant_ring import (
    EulerGamma,
    SymbolicConstant,
    as_constant,
    digamma_diff,
    exp_pi_i,
    numerically_zero,
    pi_power,
    polygamma_value,
    reciprocal_gamma,
    sin_pi,
    two_pi_i,
)
from gkzperiods.errors import (
    InsufficientTruncationError,
    InternalError,
    LimitNotFoundError,
    MalformedInputError,
    PoleError,
)
from gkzperiods.gamma_series import (
    Exponent,
    LaurentLogSeries,
    exponent,
    lattice_points,
)
from gkzperiods.lattice_core import ExponentMatrix, IntVector, RationalVector, solve_rational

logger = logging.getLogger(__name__)

PERTURBATION_BASES = (2, 3, 5, 7, 11, 13)
MAX_ORDER_DOUBLINGS = 4
DEFAULT_PRECISION = 128


def _min_order(*orders: Optional[int]) -> Optional[int]:
    known = [order for order in orders if order is not None]
    return min(known) if known else None


class EpsLaurentSeries:
    """
    A truncated Laurent series sum_k a_k eps^k with SymbolicConstant coefficients.
    The coefficients are known for k < order; order None marks an exact Laurent polynomial.
    """

    __slots__ = ("valuation", "coefficients", "order")

    def __init__(
        self,
        valuation: int,
        coefficients: Sequence[SymbolicConstant] = (),
        order: Optional[int] = None,
    ):
        coefficients = [as_constant(value) for value in coefficients]
        if order is not None:
            coefficients = coefficients[: max(order - valuation, 0)]
        start = 0
        while start < len(coefficients) and coefficients[start].is_zero():
            start += 1
        coefficients = coefficients[start:]
        while coefficients and coefficients[-1].is_zero():
            coefficients.pop()
        valuation += start
        if not coefficients:
            valuation = order if order is not None else 0
        self.valuation = valuation
        self.coefficients = tuple(coefficients)
        self.order = order

    @classmethod
    def zero(cls, order: Optional[int] = None) -> "EpsLaurentSeries":
        """Return 0, exact or known up to an order."""
        return cls(0 if order is None else order, (), order)

    @classmethod
    def constant(cls, value, order: Optional[int] = None) -> "EpsLaurentSeries":
        """Return a constant series."""
        return cls(0, (as_constant(value),), order)

    @classmethod
    def monomial(cls, value, power: int) -> "EpsLaurentSeries":
        """Return value * eps^power exactly."""
        return cls(power, (as_constant(value),))

    @classmethod
    def from_mapping(cls, values: Dict[int, SymbolicConstant], order: Optional[int] = None):
        """Build a series from a power -> coefficient mapping."""
        powers = [k for k, v in values.items() if not v.is_zero()]
        if not powers:
            return cls.zero(order)
        low, high = min(powers), max(powers)
        zero = SymbolicConstant.zero()
        return cls(low, [values.get(k, zero) for k in range(low, high + 1)], order)

    def is_zero(self) -> bool:
        """Return True if no known coefficient is structurally nonzero."""
        return not self.coefficients

    def is_exact(self) -> bool:
        """Return True for an exact Laurent polynomial."""
        return self.order is None

    def coefficient(self, power: int) -> SymbolicConstant:
        """Return the coefficient of eps^power."""
        if self.order is not None and power >= self.order:
            raise InsufficientTruncationError(
                f"Coefficient of eps^{power} requested, series known below eps^{self.order}."
            )
        index = power - self.valuation
        if 0 <= index < len(self.coefficients):
            return self.coefficients[index]
        return SymbolicConstant.zero()

    def leading(self) -> SymbolicConstant:
        """Return the coefficient at the valuation."""
        return self.coefficients[0] if self.coefficients else SymbolicConstant.zero()

    def items(self) -> List[Tuple[int, SymbolicConstant]]:
        """Return the nonzero (power, coefficient) pairs."""
        return [
            (self.valuation + index, value)
            for index, value in enumerate(self.coefficients)
            if not value.is_zero()
        ]

    def truncate(self, order: Optional[int]) -> "EpsLaurentSeries":
        """Forget the coefficients from eps^order on."""
        return EpsLaurentSeries(self.valuation, self.coefficients, _min_order(self.order, order))

    def shift(self, power: int) -> "EpsLaurentSeries":
        """Return eps^power times the series."""
        order = None if self.order is None else self.order + power
        return EpsLaurentSeries(self.valuation + power, self.coefficients, order)

    def __add__(self, other) -> "EpsLaurentSeries":
        other = as_series(other)
        order = _min_order(self.order, other.order)
        values: Dict[int, SymbolicConstant] = dict(self.items())
        for power, value in other.items():
            values[power] = values.get(power, SymbolicConstant.zero()) + value
        return EpsLaurentSeries.from_mapping(values, order)

    __radd__ = __add__

    def __neg__(self) -> "EpsLaurentSeries":
        return EpsLaurentSeries(self.valuation, [-value for value in self.coefficients], self.order)

    def __sub__(self, other) -> "EpsLaurentSeries":
        return self + (-as_series(other))

    def __mul__(self, other) -> "EpsLaurentSeries":
        if not isinstance(other, EpsLaurentSeries):
            factor = as_constant(other)
            return EpsLaurentSeries(
                self.valuation, [value * factor for value in self.coefficients], self.order
            )
        if self.is_zero() and self.order is None or other.is_zero() and other.order is None:
            return EpsLaurentSeries.zero()
        order = _min_order(
            None if self.order is None else self.order + other.valuation,
            None if other.order is None else other.order + self.valuation,
        )
        values: Dict[int, SymbolicConstant] = {}
        for left_power, left in self.items():
            for right_power, right in other.items():
                power = left_power + right_power
                if order is not None and power >= order:
                    continue
                values[power] = values.get(power, SymbolicConstant.zero()) + left * right
        return EpsLaurentSeries.from_mapping(values, order)

    __rmul__ = __mul__

    def inverse(self, order: Optional[int] = None) -> "EpsLaurentSeries":
        """Return 1/series; exact inputs need a target order."""
        if self.is_zero():
            raise PoleError("The zero series has no inverse.")
        lead = self.leading()
        if not lead.is_monomial():
            raise PoleError(f"Leading coefficient {lead} is not invertible.")
        relative = None if self.order is None else self.order - self.valuation
        if order is not None:
            relative = _min_order(relative, order + self.valuation)
        if relative is None:
            if len(self.coefficients) == 1:
                return EpsLaurentSeries(-self.valuation, (lead.inverse(),))
            raise MalformedInputError("Inverting an exact series needs a truncation order.")
        head = lead.inverse()
        tail = self.coefficients
        result = [head]
        for n in range(1, relative):
            total = SymbolicConstant.zero()
            for k in range(1, min(n, len(tail) - 1) + 1):
                total = total + tail[k] * result[n - k]
            result.append(-(total * head))
        return EpsLaurentSeries(-self.valuation, result, relative - self.valuation)

    def strip(self, precision: int = DEFAULT_PRECISION) -> "EpsLaurentSeries":
        """Drop leading coefficients that vanish numerically as well as structurally."""
        coefficients = list(self.coefficients)
        valuation = self.valuation
        while coefficients and numerically_zero(coefficients[0], precision):
            coefficients.pop(0)
            valuation += 1
        return EpsLaurentSeries(valuation, coefficients, self.order)

    def __repr__(self) -> str:
        parts = [f"({value})*eps^{power}" for power, value in self.items()] or ["0"]
        if self.order is not None:
            parts.append(f"O(eps^{self.order})")
        return " + ".join(parts)


def as_series(value) -> EpsLaurentSeries:
    """Coerce constants into exact constant series."""
    if isinstance(value, EpsLaurentSeries):
        return value
    return EpsLaurentSeries.constant(as_constant(value))


def eps_exp(series: EpsLaurentSeries, order: int) -> EpsLaurentSeries:
    """Return exp(series) for a series of positive valuation, known below eps^order."""
    if not series.is_zero() and series.valuation < 1:
        raise MalformedInputError("exp needs a series of positive valuation.")
    order = _min_order(order, series.order)
    terms = [SymbolicConstant.one()]
    for n in range(1, order):
        total = SymbolicConstant.zero()
        for k in range(1, n + 1):
            coefficient = series.coefficient(k)
            if not coefficient.is_zero():
                total = total + coefficient * terms[n - k] * k
        terms.append(total * Fraction(1, n))
    return EpsLaurentSeries(0, terms, order)


@lru_cache(maxsize=8192)
def _log_reciprocal_gamma(y: Fraction, delta: Fraction, order: int) -> EpsLaurentSeries:
    """Return log(Gamma(y) / Gamma(y + eps delta)) without the Euler-constant term."""
    values = {}
    for n in range(1, order):
        if y.denominator == 1:
            if n == 1:
                continue
            value = polygamma_value(n - 1, 1)
        elif n == 1:
            value = digamma_diff(y)
        else:
            value = polygamma_value(n - 1, y)
        values[n] = value * (-(delta**n) / factorial(n))
    return EpsLaurentSeries.from_mapping(values, order)


@lru_cache(maxsize=8192)
def eps_gamma_coefficient(
    x, delta, order: int, drop_euler_factor: bool = True
) -> EpsLaurentSeries:
    """
    Return the expansion of 1/Gamma(1 + x + eps delta) below eps^order.
    Without drop_euler_factor the common factor exp(euler_gamma eps delta) is kept.
    """
    if order < 1:
        raise MalformedInputError(f"The eps order must be at least 1, got {order}.")
    x, delta = Fraction(x), Fraction(delta)
    y = 1 + x
    if delta == 0:
        return EpsLaurentSeries.constant(reciprocal_gamma(y))
    series = eps_exp(_log_reciprocal_gamma(y, delta, order), order)
    if y.denominator != 1:
        series = series * reciprocal_gamma(y)
    elif y <= 0:
        # eps delta (eps delta - 1) ... (eps delta + y)
        for j in range(0, int(-y) + 1):
            series = series * EpsLaurentSeries(0, (Fraction(-j), delta))
    else:
        for j in range(1, int(y)):
            series = series * EpsLaurentSeries(0, (Fraction(j), delta)).inverse(order)
    if not drop_euler_factor:
        euler = EpsLaurentSeries.monomial(SymbolicConstant.generator(EulerGamma()) * delta, 1)
        series = series * eps_exp(euler, order)
    return series.truncate(order)


def eps_sin_pi(x, y, order: int) -> EpsLaurentSeries:
    """Return sin(pi (x + eps y)) below eps^order."""
    x, y = Fraction(x), Fraction(y)
    values = {
        k: sin_pi(x + Fraction(k, 2)) * pi_power(k) * (y**k / factorial(k)) for k in range(order)
    }
    return EpsLaurentSeries.from_mapping(values, order)


def eps_exp_pi_i(x, y, order: int) -> EpsLaurentSeries:
    """Return exp(pi i (x + eps y)) below eps^order."""
    x, y = Fraction(x), Fraction(y)
    pi_i = two_pi_i(1) * Fraction(1, 2)
    values = {k: exp_pi_i(x) * pi_i**k * (y**k / factorial(k)) for k in range(order)}
    return EpsLaurentSeries.from_mapping(values, order)


@dataclass(frozen=True)
class PerturbedExponentFamily:
    """Exponents of one class mod Z^N with directions delta_k solving A.delta = -c'."""

    members: Tuple[Exponent, ...]
    directions: Tuple[RationalVector, ...]
    c_prime: RationalVector

    @property
    def residue_class(self) -> RationalVector:
        """Return gamma mod Z^N shared by the members."""
        return self.members[0].fractional_parts()

    @property
    def size(self) -> int:
        """Return the number of members."""
        return len(self.members)

    def shift_of(self, k: int) -> IntVector:
        """Return the integer vector gamma_k - gamma_1."""
        return tuple(int(a - b) for a, b in zip(self.members[k].gamma, self.members[0].gamma))


def default_perturbation(n: int, attempt: int = 0) -> RationalVector:
    """Return (1, b, b^2, ...) for the attempt-th base b of the deterministic sequence."""
    base = PERTURBATION_BASES[attempt]
    return tuple(Fraction(base) ** k for k in range(n))


def _directions(A: ExponentMatrix, members: Sequence[Exponent], c_prime) -> Tuple[RationalVector, ...]:
    return tuple(exponent(A, exp.simplex, {j: 0 for j, _ in exp.offsets}, c_prime).gamma for exp in members)


def _directions_valid(members: Sequence[Exponent], directions: Sequence[RationalVector]) -> bool:
    pairs = [(exp.gamma, delta) for exp, delta in zip(members, directions)]
    if len(set(pairs)) != len(pairs):
        return False
    return all(
        delta[j] != 0
        for exp, delta in zip(members, directions)
        for j in exp.simplex
        if exp.gamma[j].denominator == 1
    )


def perturbed_family(
    A: ExponentMatrix, members: Sequence[Exponent], c_prime=None
) -> PerturbedExponentFamily:
    """Attach perturbation directions to exponents of one class."""
    members = tuple(members)
    if not members:
        raise MalformedInputError("A perturbed family needs at least one exponent.")
    residue_class = members[0].fractional_parts()
    for exp in members[1:]:
        if exp.fractional_parts() != residue_class:
            raise MalformedInputError(
                f"Exponent {exp.gamma} is not in the class {residue_class} mod Z^N."
            )
    if c_prime is not None:
        c_prime = tuple(Fraction(value) for value in c_prime)
        directions = _directions(A, members, c_prime)
        if not _directions_valid(members, directions):
            raise MalformedInputError(
                f"Perturbation {c_prime} gives coinciding or degenerate directions."
            )
    else:
        for attempt in range(len(PERTURBATION_BASES)):
            c_prime = default_perturbation(A.n, attempt)
            directions = _directions(A, members, c_prime)
            if _directions_valid(members, directions):
                break
        else:
            raise InternalError("No perturbation vector separates the family directions.")
    sizes = {sum(delta) for delta in directions}
    if len(sizes) != 1:
        raise InternalError(f"Direction sizes differ across the family: {sorted(sizes)}")
    logger.debug("Family of %d members perturbed along c'=%s", len(members), c_prime)
    return PerturbedExponentFamily(members, directions, c_prime)


def group_families(
    A: ExponentMatrix, exponents: Sequence[Exponent], c_prime=None
) -> List[PerturbedExponentFamily]:
    """Split exponents into perturbed families by their class mod Z^N."""
    groups: Dict[RationalVector, List[Exponent]] = {}
    for exp in exponents:
        groups.setdefault(exp.fractional_parts(), []).append(exp)
    return [perturbed_family(A, members, c_prime) for members in groups.values()]


@dataclass
class PerturbedSeries:
    """
    The series sum_u z^(gamma+u+eps delta) / prod Gamma(1 + gamma + u + eps delta),
    stored as u -> eps-expansion of the Gamma factor; z^(eps delta) stays formal.
    """

    exponent: Exponent
    direction: RationalVector
    weight: RationalVector
    bound: Fraction
    order: int
    terms: Dict[IntVector, EpsLaurentSeries] = field(default_factory=dict)

    @property
    def gamma(self) -> RationalVector:
        """Return the exponent at eps = 0."""
        return self.exponent.gamma


def perturbed_series(
    A: ExponentMatrix, exp: Exponent, direction: Sequence, w, bound, order: int
) -> PerturbedSeries:
    """Expand every term of the perturbed Gamma series below eps^order."""
    direction = tuple(Fraction(value) for value in direction)
    weight = tuple(Fraction(value) for value in w)
    terms = {}
    for u in lattice_points(A, exp, weight, bound):
        product = EpsLaurentSeries.constant(1)
        for g, x, delta in zip(exp.gamma, u, direction):
            product = product * eps_gamma_coefficient(g + x, delta, order)
            if product.is_zero() and product.order is None:
                break
        product = product.truncate(order)
        if not (product.is_zero() and product.order is None):
            terms[u] = product
    logger.debug("Perturbed series for %s: %d terms", exp.gamma, len(terms))
    return PerturbedSeries(exp, direction, weight, Fraction(bound), order, terms)


def family_series(
    A: ExponentMatrix, family: PerturbedExponentFamily, w, bound, order: int
) -> List[PerturbedSeries]:
    """Return the perturbed series of every member."""
    return [
        perturbed_series(A, exp, delta, w, bound, order)
        for exp, delta in zip(family.members, family.directions)
    ]


# --- combination rows -------------------------------------------------------------------

RowKey = Tuple[IntVector, IntVector]
Row = Dict[RowKey, EpsLaurentSeries]


@lru_cache(maxsize=None)
def _log_multi_indices(variables: int, degree: int) -> Tuple[IntVector, ...]:
    if variables == 0:
        return ((),) if degree == 0 else ()
    found = []
    for head in range(degree + 1):
        for rest in _log_multi_indices(variables - 1, degree - head):
            found.append((head,) + rest)
    return tuple(found)


def _log_coordinates(
    A: ExponentMatrix, members: Sequence[PerturbedSeries]
) -> List[RationalVector]:
    """Write delta_k - delta_1 in the kernel basis; these carry the surviving logs."""
    basis = A.kernel.basis
    columns = [tuple(vector[j] for vector in basis) for j in range(A.N)]
    reference = members[0].direction
    coordinates = []
    for member in members:
        difference = [a - b for a, b in zip(member.direction, reference)]
        if not basis:
            coordinates.append(())
            continue
        solution = solve_rational(columns, difference)
        if solution is None:
            raise InternalError("Perturbation directions differ outside the kernel of A.")
        coordinates.append(tuple(solution))
    return coordinates


def _member_row(
    member: PerturbedSeries, shift: IntVector, mu: RationalVector, order: int, euler: Optional[EpsLaurentSeries]
) -> Row:
    """Return the member as (u, l) -> eps series with exp(eps mu.log) expanded to order."""
    row: Row = {}
    for degree in range(order):
        for ell in _log_multi_indices(len(mu), degree):
            factor = Fraction(1)
            for value, power in zip(mu, ell):
                factor *= value**power / factorial(power)
            if factor == 0:
                continue
            for u, series in member.terms.items():
                key = (tuple(a + b for a, b in zip(u, shift)), ell)
                value = series.shift(degree) * factor
                if euler is not None:
                    value = value * euler
                value = value.truncate(order)
                if not (value.is_zero() and value.order is None):
                    row[key] = value
    return row


def _combine(rows: Sequence[Row], coefficients: Sequence[EpsLaurentSeries]) -> Row:
    combined: Row = {}
    for row, coefficient in zip(rows, coefficients):
        if coefficient.is_zero() and coefficient.order is None:
            continue
        for key, value in row.items():
            term = value * coefficient
            combined[key] = combined[key] + term if key in combined else term
    return combined


def _row_valuation(row: Row, precision: int) -> Tuple[Row, Optional[int], Optional[int]]:
    """Strip numerically vanishing heads; return the row, its valuation and known order."""
    stripped = {key: value.strip(precision) for key, value in row.items()}
    order = _min_order(*(value.order for value in stripped.values()))
    valuations = [value.valuation for value in stripped.values() if not value.is_zero()]
    valuation = min(valuations) if valuations else order
    return stripped, valuation, order


def _shift_row(row: Row, power: int) -> Row:
    return {key: value.shift(power) for key, value in row.items()}


def _log_expansion(
    basis: Tuple[IntVector, ...], ell: IntVector, width: int
) -> Dict[IntVector, Fraction]:
    """Expand prod_t (log z^(b_t))^(l_t) into monomials in the coordinate logs."""
    polynomial = {(0,) * width: Fraction(1)}
    for vector, power in zip(basis, ell):
        for _ in range(power):
            product: Dict[IntVector, Fraction] = {}
            for monomial, value in polynomial.items():
                for j, entry in enumerate(vector):
                    if entry:
                        raised = monomial[:j] + (monomial[j] + 1,) + monomial[j + 1 :]
                        product[raised] = product.get(raised, Fraction(0)) + value * entry
            polynomial = product
    return polynomial


def _limit_layer(
    A: ExponentMatrix, members: Sequence[PerturbedSeries], row: Row
) -> LaurentLogSeries:
    """Return the eps^0 layer of a row as a series in the coordinate logs."""
    reference = members[0]
    basis = A.kernel.basis
    result = LaurentLogSeries(reference.gamma, reference.weight, min(m.bound for m in members), {})
    for (u, ell), value in row.items():
        coefficient = value.coefficient(0)
        if coefficient.is_zero():
            continue
        for logs, factor in _log_expansion(basis, ell, A.N).items():
            key = (u, logs)
            total = result.terms.get(key, SymbolicConstant.zero()) + coefficient * factor
            if total.is_zero():
                result.terms.pop(key, None)
            else:
                result.terms[key] = total
    return result


def _euler_factor(members: Sequence[PerturbedSeries], order: int) -> EpsLaurentSeries:
    size = sum(members[0].direction)
    return eps_exp(EpsLaurentSeries.monomial(SymbolicConstant.generator(EulerGamma()) * size, 1), order)


def _key_label(member: PerturbedSeries, key: RowKey) -> str:
    u, ell = key
    return f"z^{tuple(str(g + x) for g, x in zip(member.gamma, u))} log-index {ell}"


def sst_limit(
    A: ExponentMatrix,
    members: Sequence[PerturbedSeries],
    coefficients: Sequence,
    precision: int = DEFAULT_PRECISION,
    drop_euler_factor: bool = True,
) -> LaurentLogSeries:
    """Return lim_{eps -> 0} sum_k C_k(eps) phi_k(eps) or raise LimitNotFoundError."""
    if len(members) != len(coefficients) or not members:
        raise MalformedInputError("Every member needs exactly one coefficient.")
    coefficients = [as_series(value) for value in coefficients]
    pole = max((-c.valuation for c in coefficients if not c.is_zero()), default=0)
    pole = max(pole, 0)
    order = min(member.order for member in members)
    if order < pole + 1:
        raise InsufficientTruncationError(
            f"Members are known below eps^{order}; the coefficients need eps^{pole + 1}."
        )
    reference = members[0]
    shifts = []
    for member in members:
        difference = [a - b for a, b in zip(member.gamma, reference.gamma)]
        if any(x.denominator != 1 for x in difference):
            raise MalformedInputError("SST limits combine exponents of one class mod Z^N only.")
        shifts.append(tuple(int(x) for x in difference))
    mu = _log_coordinates(A, members)
    euler = None if drop_euler_factor else _euler_factor(members, order)
    rows = [
        _member_row(member, shift, coordinates, order, euler)
        for member, shift, coordinates in zip(members, shifts, mu)
    ]
    combined = _combine(rows, coefficients)
    for key, value in combined.items():
        for power, coefficient in value.items():
            if power >= 0:
                break
            if not numerically_zero(coefficient, precision):
                raise LimitNotFoundError(
                    f"eps^{power} survives on {_key_label(reference, key)}: {coefficient}"
                )
    limit = _limit_layer(A, members, combined)
    logger.info("SST limit with %d terms, log degrees %s", len(limit.terms), limit.log_degrees())
    return limit


# --- automatic limit basis --------------------------------------------------------------


def _is_zero(value: SymbolicConstant, precision: int) -> bool:
    return value.is_zero() or numerically_zero(value, precision)


def _sort_key(key: RowKey):
    u, ell = key
    return (sum(ell), u, ell)


def _dependency(
    vectors: Sequence[Dict[RowKey, SymbolicConstant]], precision: int
) -> Optional[Tuple[int, List[SymbolicConstant]]]:
    """Fraction-free elimination; return the first dependent vector and its relation."""
    size = len(vectors)
    pivots = []
    for index, vector in enumerate(vectors):
        reduced = dict(vector)
        transform = [SymbolicConstant.zero()] * size
        transform[index] = SymbolicConstant.one()
        for key, pivot_vector, pivot_transform in pivots:
            entry = reduced.get(key)
            if entry is None or entry.is_zero():
                continue
            head = pivot_vector[key]
            for other in set(reduced) | set(pivot_vector):
                reduced[other] = head * reduced.get(other, SymbolicConstant.zero()) - entry * pivot_vector.get(
                    other, SymbolicConstant.zero()
                )
            transform = [head * t - entry * s for t, s in zip(transform, pivot_transform)]
        reduced = {k: v for k, v in reduced.items() if not _is_zero(v, precision)}
        if not reduced:
            return index, transform
        key = min(reduced, key=_sort_key)
        pivots.append((key, reduced, transform))
    return None


@dataclass
class LimitBasis:
    """Independent SST limits of one family with the Laurent coefficients producing them."""

    family: PerturbedExponentFamily
    limits: List[LaurentLogSeries]
    combinations: List[List[EpsLaurentSeries]]
    order: int


def _attempt_basis(
    A: ExponentMatrix,
    family: PerturbedExponentFamily,
    w,
    bound,
    order: int,
    precision: int,
) -> Optional[LimitBasis]:
    members = family_series(A, family, w, bound, order)
    shifts = [family.shift_of(k) for k in range(family.size)]
    mu = _log_coordinates(A, members)
    rows = [_member_row(m, s, x, order, None) for m, s, x in zip(members, shifts, mu)]
    transforms = [
        [EpsLaurentSeries.constant(1) if j == k else EpsLaurentSeries.zero() for j in range(family.size)]
        for k in range(family.size)
    ]
    cumulative = [0] * family.size

    def normalize(k):
        row, valuation, known = _row_valuation(rows[k], precision)
        if valuation is None or (known is not None and valuation >= known):
            return False
        rows[k] = _shift_row(row, -valuation)
        transforms[k] = [t.shift(-valuation) for t in transforms[k]]
        cumulative[k] += valuation
        return True

    for k in range(family.size):
        if not normalize(k):
            return None
    while True:
        heads = [
            {key: value.coefficient(0) for key, value in row.items() if not value.coefficient(0).is_zero()}
            for row in rows
        ]
        found = _dependency(heads, precision)
        if found is None:
            break
        index, relation = found
        logger.debug("Leading vectors dependent; replacing row %d (shift %d)", index, cumulative[index])
        scalars = [EpsLaurentSeries.constant(value) for value in relation]
        rows[index] = _combine(rows, scalars)
        transforms[index] = [
            sum((s * transforms[j][col] for j, s in enumerate(scalars)), EpsLaurentSeries.zero())
            for col in range(family.size)
        ]
        if not normalize(index):
            return None
    limits = [_limit_layer(A, members, row) for row in rows]
    for limit in limits:
        if limit.max_log_degree >= family.size:
            raise InternalError(
                f"Log degree {limit.max_log_degree} exceeds the family size {family.size}."
            )
    return LimitBasis(family, limits, transforms, order)


def auto_limit_basis(
    A: ExponentMatrix,
    family: PerturbedExponentFamily,
    w,
    bound,
    order: Optional[int] = None,
    precision: int = DEFAULT_PRECISION,
) -> LimitBasis:
    """Find Laurent combinations whose limits give family.size independent series."""
    order = order or 2 * family.size
    for _ in range(MAX_ORDER_DOUBLINGS + 1):
        basis = _attempt_basis(A, family, w, bound, order, precision)
        if basis is not None:
            logger.info(
                "Limit basis for class %s: %d series at eps order %d",
                family.residue_class,
                len(basis.limits),
                order,
            )
            return basis
        logger.debug("Eps order %d exhausted, retrying with %d", order, 2 * order)
        order *= 2
    raise InternalError(f"No independent limits for the family {family.residue_class}.")
