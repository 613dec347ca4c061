"""Exponents, truncated Gamma series and the GKZ operators acting on them."""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb, gcd
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import mpmath
from sympy import Matrix

from gkzperiods.constant_ring import (
    SymbolicConstant,
    eval_numeric,
    numerically_zero,
    reciprocal_gamma,
    working_precision,
)
from gkzperiods.errors import (
    InsufficientTruncationError,
    MalformedInputError,
    UnsupportedTriangulationError,
)
from gkzperiods.lattice_core import (
    ExponentMatrix,
    IntVector,
    RationalVector,
    mat_vec,
    simplex_inverse,
    solve_rational,
)
from gkzperiods.secondary_fan import dwork_triangulation, fermat_triangulation

logger = logging.getLogger(__name__)

DEFAULT_TERMS_PER_DIRECTION = 8
Key = Tuple[IntVector, IntVector]


@dataclass(frozen=True)
class Exponent:
    """A solution of A.gamma = -c with prescribed integers off the simplex."""

    gamma: RationalVector
    simplex: Tuple[int, ...]
    offsets: Tuple[Tuple[int, int], ...]

    @property
    def offset_map(self) -> Dict[int, int]:
        """Return the prescribed integer entries keyed by column."""
        return dict(self.offsets)

    def fractional_parts(self) -> RationalVector:
        """Return gamma mod 1, the local monodromy data."""
        return tuple(value % 1 for value in self.gamma)


@dataclass(frozen=True)
class GkzParameter:
    """The parameter vector c with its interiority and genericity certificates."""

    c: RationalVector
    interior: bool
    very_generic: bool
    offending: Tuple[Tuple[Tuple[int, ...], Tuple[Tuple[int, int], ...], int], ...] = ()


@dataclass(frozen=True)
class GkzOperator:
    """A toric box operator for u in L_A or the Euler operator of one row."""

    kind: str
    u: Optional[IntVector] = None
    row: Optional[int] = None
    c: Optional[Fraction] = None

    @property
    def positive(self) -> IntVector:
        """Return u+."""
        return tuple(max(x, 0) for x in self.u)

    @property
    def negative(self) -> IntVector:
        """Return u-."""
        return tuple(max(-x, 0) for x in self.u)


@dataclass
class LaurentLogSeries:
    """
    A truncated series sum C[u, l] z^(gamma + u) prod_j (log z_j)^(l_j).
    Every term with w.(gamma + u) <= bound is present (zero coefficients are dropped).
    """

    gamma: RationalVector
    weight: RationalVector
    bound: Fraction
    terms: Dict[Key, SymbolicConstant] = field(default_factory=dict)

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Return the number of variables."""
        return len(self.gamma)

    def exponent_of(self, u: Sequence[int]) -> RationalVector:
        """Return gamma + u."""
        return tuple(g + x for g, x in zip(self.gamma, u))

    def weight_of(self, u: Sequence[int]) -> Fraction:
        """Return w.(gamma + u)."""
        return sum((w * e for w, e in zip(self.weight, self.exponent_of(u))), Fraction(0))

    def coefficient(self, u: Sequence[int], ell: Optional[Sequence[int]] = None) -> SymbolicConstant:
        """Return the coefficient of z^(gamma+u) (log z)^ell."""
        u = tuple(u)
        if self.weight_of(u) > self.bound:
            raise InsufficientTruncationError(f"Term {u} lies beyond the bound {self.bound}.")
        ell = tuple(ell) if ell is not None else (0,) * self.N
        return self.terms.get((u, ell), SymbolicConstant.zero())

    @property
    def max_log_degree(self) -> int:
        """Return the largest total log degree present."""
        return max((sum(ell) for _, ell in self.terms), default=0)

    def log_degrees(self) -> List[int]:
        """Return the total log degrees present, sorted."""
        return sorted({sum(ell) for _, ell in self.terms})

    def __add__(self, other: "LaurentLogSeries") -> "LaurentLogSeries":
        shift = _integer_shift(other.gamma, self.gamma)
        terms = dict(self.terms)
        for (u, ell), value in other.terms.items():
            key = (tuple(a + b for a, b in zip(u, shift)), ell)
            terms[key] = terms.get(key, SymbolicConstant.zero()) + value
        return LaurentLogSeries(
            self.gamma,
            self.weight,
            min(self.bound, other.bound),
            {k: v for k, v in terms.items() if not v.is_zero()},
        )

    def scale(self, factor) -> "LaurentLogSeries":
        """Return the series multiplied by a constant."""
        terms = {key: value * factor for key, value in self.terms.items()}
        return LaurentLogSeries(
            self.gamma, self.weight, self.bound, {k: v for k, v in terms.items() if not v.is_zero()}
        )

    def truncate(self, bound) -> "LaurentLogSeries":
        """Return the terms of weight at most bound."""
        bound = Fraction(bound)
        terms = {k: v for k, v in self.terms.items() if self.weight_of(k[0]) <= bound}
        return LaurentLogSeries(self.gamma, self.weight, min(bound, self.bound), terms)

    def is_zero(self, precision: Optional[int] = None) -> bool:
        """Return True if every coefficient vanishes structurally, or numerically at a precision."""
        for value in self.terms.values():
            if value.is_zero():
                continue
            if precision is None or not numerically_zero(value, precision):
                return False
        return True

    def sorted_terms(self) -> List[Tuple[Key, SymbolicConstant]]:
        """Return the terms ordered by weight, lattice point and log index."""
        return sorted(self.terms.items(), key=lambda item: (self.weight_of(item[0][0]), item[0]))


class TruncatedSeries(LaurentLogSeries):
    """A log-free truncated Gamma series of one exponent."""

    exponent: Exponent

    @classmethod
    def from_exponent(cls, exponent: Exponent, weight, bound, terms) -> "TruncatedSeries":
        """Build the series and remember its exponent."""
        series = cls(exponent.gamma, weight, bound, terms)
        series.exponent = exponent
        return series


def _integer_shift(source: Sequence[Fraction], target: Sequence[Fraction]) -> IntVector:
    shift = []
    for a, b in zip(source, target):
        difference = a - b
        if difference.denominator != 1:
            raise MalformedInputError("Series with exponents in different classes cannot be added.")
        shift.append(int(difference))
    return tuple(shift)


def exponent(A: ExponentMatrix, simplex: Sequence[int], offsets: Mapping[int, int], c) -> Exponent:
    """Solve A.gamma = -c with gamma_j = offsets[j] off the simplex."""
    simplex = tuple(sorted(simplex))
    c = tuple(Fraction(value) for value in c)
    if len(c) != A.n:
        raise MalformedInputError(f"The parameter needs {A.n} entries.")
    outside = [j for j in range(A.N) if j not in simplex]
    if len(simplex) != A.n or set(offsets) != set(outside):
        raise MalformedInputError(f"Offsets {dict(offsets)} do not complement simplex {simplex}.")
    inverse = simplex_inverse(A.column_submatrix(simplex))
    if inverse is None:
        raise MalformedInputError(f"Simplex {simplex} is singular.")
    rhs = [-value for value in c]
    for j in outside:
        for k in range(A.n):
            rhs[k] -= offsets[j] * A.columns[j][k]
    solved = mat_vec(inverse, rhs)
    gamma = [Fraction(0)] * A.N
    for position, j in enumerate(simplex):
        gamma[j] = solved[position]
    for j in outside:
        gamma[j] = Fraction(offsets[j])
    return Exponent(tuple(gamma), simplex, tuple(sorted((j, int(offsets[j])) for j in outside)))


def fermat_exponent(A: ExponentMatrix, c, p: Sequence[int]) -> Exponent:
    """Return gamma^c_p on T(Fer): p on the deformation monomials."""
    (simplex,) = fermat_triangulation(A)
    return exponent(A, simplex, dict(enumerate(p)), c)


def dwork_exponent(A: ExponentMatrix, c, q: Sequence[int], i: int, pivot: int = 0) -> Exponent:
    """Return gamma^c_q(a_pivot, i): q_1 on the dropped pure power d.e_i, q_2.. on the other monomials."""
    if A.columns[pivot][i] == 0:
        raise MalformedInputError(f"Column {pivot} has a zero entry in row {i}.")
    simplex = (pivot,) + tuple(A.m + k for k in range(A.n) if k != i)
    others = [j for j in range(A.m) if j != pivot]
    if len(q) != A.m:
        raise MalformedInputError(f"q needs {A.m} entries.")
    offsets = {A.m + i: q[0]}
    offsets.update({j: q[1 + position] for position, j in enumerate(others)})
    return exponent(A, simplex, offsets, c)


def _cell_normal(A: ExponentMatrix, simplex: Sequence[int], weight: Sequence[Fraction]) -> RationalVector:
    normal = solve_rational(A.column_submatrix(simplex), [weight[j] for j in simplex])
    if normal is None:
        raise MalformedInputError(f"Simplex {tuple(simplex)} is singular.")
    return normal


def _direction_weights(A: ExponentMatrix, exp: Exponent, weight: Sequence[Fraction]) -> Dict[int, Fraction]:
    normal = _cell_normal(A, exp.simplex, weight)
    heights = {}
    for j, _ in exp.offsets:
        heights[j] = weight[j] - sum((x * a for x, a in zip(normal, A.columns[j])), Fraction(0))
        if heights[j] <= 0:
            raise UnsupportedTriangulationError(
                f"Weight {tuple(weight)} is outside the cone of simplex {exp.simplex}; "
                "the series region would be unbounded."
            )
    return heights


def default_truncation(
    A: ExponentMatrix, exp: Exponent, w, terms: int = DEFAULT_TERMS_PER_DIRECTION
) -> Fraction:
    """Return the smallest bound admitting the given number of steps in every off-simplex direction."""
    weight = tuple(Fraction(value) for value in w)
    heights = _direction_weights(A, exp, weight)
    base = sum((wj * g for wj, g in zip(weight, exp.gamma)), Fraction(0))
    if not heights:
        return base
    return base + (terms - 1) * max(heights.values())


@lru_cache(maxsize=4096)
def _reciprocal_gamma_one_plus(x: Fraction) -> SymbolicConstant:
    return reciprocal_gamma(1 + x)


def lattice_points(
    A: ExponentMatrix, exp: Exponent, w, bound
) -> List[IntVector]:
    """Return the u in L_A with (gamma+u)_j >= 0 off the simplex and w.(gamma+u) <= bound."""
    weight = tuple(Fraction(value) for value in w)
    bound = Fraction(bound)
    heights = _direction_weights(A, exp, weight)
    inverse = simplex_inverse(A.column_submatrix(exp.simplex))
    outside = [j for j, _ in exp.offsets]
    offsets = exp.offset_map
    base = sum((wj * g for wj, g in zip(weight, exp.gamma)), Fraction(0))
    budget = bound - base
    # u_j >= -p_j; shift to nonnegative steps s_j = u_j + p_j costing heights[j] each
    floor_cost = sum((-offsets[j] * heights[j] for j in outside), Fraction(0))
    remaining = budget - floor_cost
    points = []
    if remaining < 0:
        return points

    def walk(position, steps, left):
        if position == len(outside):
            ell = {j: s - offsets[j] for j, s in zip(outside, steps)}
            rhs = [Fraction(0)] * A.n
            for j, value in ell.items():
                for k in range(A.n):
                    rhs[k] -= value * A.columns[j][k]
            inner = mat_vec(inverse, rhs)
            if any(x.denominator != 1 for x in inner):
                return
            u = [0] * A.N
            for index, j in enumerate(exp.simplex):
                u[j] = int(inner[index])
            for j, value in ell.items():
                u[j] = value
            points.append(tuple(u))
            return
        j = outside[position]
        step = 0
        while step * heights[j] <= left:
            walk(position + 1, steps + [step], left - step * heights[j])
            step += 1

    walk(0, [], remaining)
    return points


def truncated_gamma_series(A: ExponentMatrix, exp: Exponent, w, bound=None) -> TruncatedSeries:
    """Return sum over the finite region of z^(gamma+u) / prod Gamma(1 + gamma + u)."""
    weight = tuple(Fraction(value) for value in w)
    if bound is None:
        bound = default_truncation(A, exp, weight)
    bound = Fraction(bound)
    terms = {}
    zero_logs = (0,) * A.N
    for u in lattice_points(A, exp, weight, bound):
        coefficient = SymbolicConstant.one()
        for g, x in zip(exp.gamma, u):
            factor = _reciprocal_gamma_one_plus(g + x)
            if factor.is_zero():
                coefficient = factor
                break
            coefficient = coefficient * factor
        if not coefficient.is_zero():
            terms[(u, zero_logs)] = coefficient
    logger.debug("Gamma series for %s: %d terms up to weight %s", exp.gamma, len(terms), bound)
    return TruncatedSeries.from_exponent(exp, weight, bound, terms)


def toric_operator(u: Sequence[int]) -> GkzOperator:
    """Return the box operator d^(u+) - d^(u-)."""
    return GkzOperator("toric", u=tuple(int(x) for x in u))


def euler_operators(A: ExponentMatrix, c) -> List[GkzOperator]:
    """Return sum_j a_ij z_j d_j + c_i for every row."""
    return [GkzOperator("euler", row=i, c=Fraction(value)) for i, value in enumerate(c)]


def toric_spanning_set(A: ExponentMatrix) -> List[GkzOperator]:
    """Return box operators for the kernel basis and the pairwise sums and differences."""
    basis = A.kernel.basis
    vectors = list(basis)
    for left, right in combinations(basis, 2):
        vectors.append(tuple(a + b for a, b in zip(left, right)))
        vectors.append(tuple(a - b for a, b in zip(left, right)))
    return [toric_operator(u) for u in vectors]


@lru_cache(maxsize=None)
def _falling_polynomial(k: int) -> Tuple[int, ...]:
    """Return the coefficients of b (b-1) ... (b-k+1), lowest degree first."""
    coefficients = [1]
    for j in range(k):
        shifted = [0] + coefficients
        for index, value in enumerate(coefficients):
            shifted[index] -= j * value
        coefficients = shifted
    return tuple(coefficients)


def _falling_derivative(k: int, order: int, b: Fraction) -> Fraction:
    """Return the order-th derivative in b of the falling factorial of length k at b."""
    total = Fraction(0)
    for degree, value in enumerate(_falling_polynomial(k)):
        if degree >= order and value:
            falling = 1
            for t in range(order):
                falling *= degree - t
            total += value * falling * b ** (degree - order)
    return total


def _differentiate(term_exponent: Fraction, log_power: int, times: int) -> List[Tuple[int, Fraction]]:
    """Return (log power, factor) pairs of d^times (z^b (log z)^l), the z-power lowered by times."""
    if times == 0:
        return [(log_power, Fraction(1))]
    result = []
    for i in range(log_power + 1):
        factor = comb(log_power, i) * _falling_derivative(times, i, term_exponent)
        if factor:
            result.append((log_power - i, factor))
    return result


def _apply_monomial_derivative(series: LaurentLogSeries, powers: IntVector) -> Dict[Key, SymbolicConstant]:
    output: Dict[Key, SymbolicConstant] = {}
    for (u, ell), value in series.terms.items():
        beta = series.exponent_of(u)
        pieces = [((), Fraction(1))]
        for j in range(series.N):
            expanded = _differentiate(beta[j], ell[j], powers[j])
            pieces = [(logs + (l,), f * g) for logs, f in pieces for l, g in expanded]
        shifted = tuple(x - k for x, k in zip(u, powers))
        for logs, factor in pieces:
            key = (shifted, logs)
            output[key] = output.get(key, SymbolicConstant.zero()) + value * factor
    return output


def gkz_apply(A: ExponentMatrix, operator: GkzOperator, series: LaurentLogSeries) -> LaurentLogSeries:
    """Apply a GKZ generator term by term; the result is exact on its (shrunken) region."""
    if operator.kind == "euler":
        row = A.rows[operator.row]
        output: Dict[Key, SymbolicConstant] = {}
        for (u, ell), value in series.terms.items():
            beta = series.exponent_of(u)
            scalar = sum((a * b for a, b in zip(row, beta)), Fraction(0)) + operator.c
            if scalar:
                output[(u, ell)] = output.get((u, ell), SymbolicConstant.zero()) + value * scalar
            for j, power in enumerate(ell):
                if power and row[j]:
                    lowered = ell[:j] + (power - 1,) + ell[j + 1 :]
                    key = (u, lowered)
                    output[key] = output.get(key, SymbolicConstant.zero()) + value * (row[j] * power)
        bound = series.bound
    elif operator.kind == "toric":
        plus = _apply_monomial_derivative(series, operator.positive)
        minus = _apply_monomial_derivative(series, operator.negative)
        output = dict(plus)
        for key, value in minus.items():
            output[key] = output.get(key, SymbolicConstant.zero()) - value
        lowest = Fraction(0)
        positive_weight = sum((w * x for w, x in zip(series.weight, operator.positive)), lowest)
        negative_weight = sum((w * x for w, x in zip(series.weight, operator.negative)), lowest)
        bound = series.bound - max(positive_weight, negative_weight)
    else:
        raise MalformedInputError(f"Unknown GKZ operator kind: {operator.kind}")
    result = LaurentLogSeries(series.gamma, series.weight, bound, {})
    for (u, ell), value in output.items():
        if value.is_zero():
            continue
        if operator.kind == "toric":
            # exponents are gamma + u - u+ here; the region is measured at the input points
            source = tuple(x + k for x, k in zip(u, operator.positive))
            if series.weight_of(source) > series.bound:
                continue
            source = tuple(x + k for x, k in zip(u, operator.negative))
            if series.weight_of(source) > series.bound:
                continue
        result.terms[(u, ell)] = value
    return result


def annihilated(A: ExponentMatrix, series: LaurentLogSeries, c, precision: Optional[int] = None) -> bool:
    """Return True if every Euler operator and a spanning set of box operators kill the series."""
    operators = euler_operators(A, c) + toric_spanning_set(A)
    return all(gkz_apply(A, op, series).is_zero(precision) for op in operators)


def simplex_representatives(A: ExponentMatrix, simplex: Sequence[int]) -> List[Tuple[int, ...]]:
    """
    Return the lexicographically smallest offset vectors (over the columns off the simplex)
    giving pairwise different exponent classes mod Z^N; their number is vol(simplex).
    """
    simplex = tuple(sorted(simplex))
    outside = [j for j in range(A.N) if j not in simplex]
    inverse = simplex_inverse(A.column_submatrix(simplex))
    if inverse is None:
        raise MalformedInputError(f"Simplex {simplex} is singular.")
    images = [tuple(x % 1 for x in mat_vec(inverse, A.columns[j])) for j in outside]
    orders = []
    for image in images:
        order = 1
        for x in image:
            order = order * x.denominator // gcd(order, x.denominator)
        orders.append(order)
    seen = set()
    representatives = []
    for offsets in product(*(range(order) for order in orders)):
        key = tuple(
            sum((k * image[t] for k, image in zip(offsets, images)), Fraction(0)) % 1
            for t in range(A.n)
        )
        if key not in seen:
            seen.add(key)
            representatives.append(offsets)
    return representatives


def basis_for_triangulation(A: ExponentMatrix, cells: Sequence[Sequence[int]], c) -> List[Exponent]:
    """Return one exponent per simplex and offset class; their number is vol(A)."""
    cells = tuple(tuple(sorted(cell)) for cell in cells)
    if cells == fermat_triangulation(A):
        kind = "fermat"
    elif A.m and cells == dwork_triangulation(A, 0):
        kind = "dwork"
    else:
        raise UnsupportedTriangulationError(f"No basis enumeration for triangulation {cells}.")
    basis = []
    for simplex in cells:
        outside = [j for j in range(A.N) if j not in simplex]
        for offsets in simplex_representatives(A, simplex):
            basis.append(exponent(A, simplex, dict(zip(outside, offsets)), c))
    logger.debug("Basis for %s triangulation: %d exponents", kind, len(basis))
    return basis


def is_interior(A: ExponentMatrix, c) -> bool:
    """Return True if c lies in the interior of pos(A)."""
    c = tuple(Fraction(value) for value in c)
    facets = []
    for subset in combinations(range(A.N), A.n - 1):
        matrix = Matrix([list(A.columns[j]) for j in subset]) if subset else Matrix.zeros(0, A.n)
        if subset and matrix.rank() != A.n - 1:
            continue
        space = matrix.nullspace() if subset else [Matrix.eye(A.n)[:, 0]]
        if len(space) != 1:
            continue
        normal = [Fraction(int(x.p), int(x.q)) for x in space[0]]
        values = [sum((y * a for y, a in zip(normal, column)), Fraction(0)) for column in A.columns]
        if all(v >= 0 for v in values):
            facets.append(normal)
        elif all(v <= 0 for v in values):
            facets.append([-y for y in normal])
    return all(sum((y * x for y, x in zip(normal, c)), Fraction(0)) > 0 for normal in facets)


def is_very_generic(A: ExponentMatrix, cells: Sequence[Sequence[int]], c) -> GkzParameter:
    """Check that no simplex entry of any basis exponent is an integer."""
    offending = []
    for exp in basis_for_triangulation(A, cells, c):
        for j in exp.simplex:
            if exp.gamma[j].denominator == 1:
                offending.append((exp.simplex, exp.offsets, j))
    c = tuple(Fraction(value) for value in c)
    return GkzParameter(c, is_interior(A, c), not offending, tuple(offending))


def evaluate_series(
    series: LaurentLogSeries, z: Sequence, precision: int = 128, symbols: Optional[Mapping] = None
):
    """Sum the truncated series at a point with principal branches of z^beta and log z."""
    with working_precision(precision):
        logs = [mpmath.log(mpmath.mpmathify(value)) for value in z]
        total = mpmath.mpc(0)
        for (u, ell), value in series.terms.items():
            beta = series.exponent_of(u)
            term = eval_numeric(value, precision, symbols).midpoint
            exponent_sum = sum(
                (mpmath.mpf(b.numerator) / b.denominator * log_z for b, log_z in zip(beta, logs)),
                mpmath.mpc(0),
            )
            term *= mpmath.exp(exponent_sum)
            for power, log_z in zip(ell, logs):
                if power:
                    term *= log_z**power
            total += term
        return total
