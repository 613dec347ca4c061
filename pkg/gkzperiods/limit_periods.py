"""Pull solution series back along degeneration arcs and tabulate the limiting periods."""
import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb, floor, lcm
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath

from gkzperiods.constant_ring import (
    LogSymbol,
    RingReport,
    SymbolicConstant,
    SymbolRoot,
    eval_numeric,
    in_ring_report,
    log_rational,
    numerically_equal,
    rational_power,
    two_pi_i,
    working_precision,
)
from gkzperiods.dwork_continuation import DEFAULT_DWORK_TERMS, continue_to_dwork
from gkzperiods.errors import (
    InsufficientTruncationError,
    MalformedInputError,
    SkeletonHitError,
    UnsupportedTriangulationError,
)
from gkzperiods.fermat_periods import period_expansion
from gkzperiods.gamma_series import LaurentLogSeries, default_truncation, truncated_gamma_series
from gkzperiods.lattice_core import ExponentMatrix, RationalVector, compute_N_A
from gkzperiods.secondary_fan import (
    classify_triangulation,
    gale_cone_report,
    subdivision_from_weight,
)

logger = logging.getLogger(__name__)

Initial = Union[Fraction, str]
TPoly = Dict[int, SymbolicConstant]
CERTIFICATE_TOLERANCE = mpmath.mpf(10) ** -20
GENERATING_SET_NOTE = (
    "Rows form a generating set of the limiting-period entries; "
    "the V-filtration and the Betti lattice are not computed."
)


@dataclass(frozen=True)
class DegenerationArc:
    """
    t -> z with z_i = in_i t^(o_i) (1 + tail_i(t)); tail_i lists the coefficients of
    t, t^2, .. relative to the initial term. Named initials stay formal.
    """

    orders: Tuple[int, ...]
    initials: Tuple[Initial, ...]
    tails: Tuple[Tuple[Fraction, ...], ...] = ()
    symbols: Mapping[str, object] = field(default_factory=dict)
    base_field: str = "Q"

    def __post_init__(self):
        if len(self.initials) != len(self.orders):
            raise MalformedInputError("Every arc coordinate needs an order and an initial value.")
        for value in self.initials:
            if not isinstance(value, str) and Fraction(value) == 0:
                raise MalformedInputError("Initial coefficients of an arc must be nonzero.")
        if self.tails and len(self.tails) != len(self.orders):
            raise MalformedInputError("Tails must be given for every arc coordinate or none.")

    @property
    def weight(self) -> RationalVector:
        """Return w_f = (ord_t f_i)_i."""
        return tuple(Fraction(order) for order in self.orders)

    def tail(self, i: int) -> Tuple[Fraction, ...]:
        """Return the relative Taylor coefficients of coordinate i."""
        return tuple(Fraction(x) for x in self.tails[i]) if self.tails else ()


def make_arc(orders: Sequence[int], initials: Sequence = None, tails=None, symbols=None) -> DegenerationArc:
    """Build an arc, defaulting to initial coefficients 1 and no tails."""
    initials = initials if initials is not None else [1] * len(orders)
    return DegenerationArc(
        tuple(int(o) for o in orders),
        tuple(value if isinstance(value, str) else Fraction(value) for value in initials),
        tuple(tuple(Fraction(x) for x in tail) for tail in tails) if tails else (),
        dict(symbols or {}),
    )


@dataclass
class PuiseuxLogSeries:
    """sum C[alpha, l] t^alpha (log t)^l, known for alpha <= order."""

    order: Fraction
    terms: Dict[Tuple[Fraction, int], SymbolicConstant] = field(default_factory=dict)

    @property
    def ramification(self) -> int:
        """Return the lcm of the exponent denominators."""
        result = 1
        for alpha, _ in self.terms:
            result = lcm(result, alpha.denominator)
        return result

    def coefficient(self, alpha, ell: int = 0) -> SymbolicConstant:
        """Return the coefficient of t^alpha (log t)^ell."""
        alpha = Fraction(alpha)
        if alpha > self.order:
            raise InsufficientTruncationError(
                f"Coefficient of t^{alpha} requested, expansion known up to t^{self.order}."
            )
        return self.terms.get((alpha, ell), SymbolicConstant.zero())

    def exponents(self) -> List[Fraction]:
        """Return the t-exponents present, sorted."""
        return sorted({alpha for alpha, _ in self.terms})

    def log_degrees(self, alpha=None) -> List[int]:
        """Return the log degrees present, optionally at one exponent."""
        return sorted({ell for a, ell in self.terms if alpha is None or a == Fraction(alpha)})

    def leading_exponent(self) -> Optional[Fraction]:
        """Return the smallest exponent with a nonzero coefficient."""
        exponents = self.exponents()
        return exponents[0] if exponents else None

    def __add__(self, other: "PuiseuxLogSeries") -> "PuiseuxLogSeries":
        terms = dict(self.terms)
        for key, value in other.terms.items():
            terms[key] = terms.get(key, SymbolicConstant.zero()) + value
        return PuiseuxLogSeries(
            min(self.order, other.order), {k: v for k, v in terms.items() if not v.is_zero()}
        )

    def scale(self, factor) -> "PuiseuxLogSeries":
        """Return the expansion multiplied by a constant."""
        terms = {key: value * factor for key, value in self.terms.items()}
        return PuiseuxLogSeries(self.order, {k: v for k, v in terms.items() if not v.is_zero()})


# --- truncated polynomials in t ---------------------------------------------------------


def _poly_mul(left: TPoly, right: TPoly, length: int) -> TPoly:
    product: TPoly = {}
    for i, a in left.items():
        for j, b in right.items():
            if i + j < length:
                product[i + j] = product.get(i + j, SymbolicConstant.zero()) + a * b
    return {k: v for k, v in product.items() if not v.is_zero()}


def _poly_add(left: TPoly, right: TPoly) -> TPoly:
    total = dict(left)
    for k, v in right.items():
        total[k] = total.get(k, SymbolicConstant.zero()) + v
    return {k: v for k, v in total.items() if not v.is_zero()}


def _tail_powers(tail: Sequence[Fraction], length: int) -> List[Dict[int, Fraction]]:
    """Return T^0, T^1, .. truncated below t^length for T = sum tail_k t^k."""
    base = {k + 1: value for k, value in enumerate(tail) if value and k + 1 < length}
    powers = [{0: Fraction(1)}]
    while len(powers) < length and base:
        previous = powers[-1]
        product: Dict[int, Fraction] = {}
        for i, a in previous.items():
            for j, b in base.items():
                if i + j < length:
                    product[i + j] = product.get(i + j, Fraction(0)) + a * b
        if not product:
            break
        powers.append(product)
    return powers


def _binomial(exponent: Fraction, j: int) -> Fraction:
    value = Fraction(1)
    for k in range(j):
        value *= (exponent - k) / (k + 1)
    return value


def _power_of_tail(tail: Sequence[Fraction], exponent: Fraction, length: int) -> TPoly:
    """Return (1 + T)^exponent below t^length by the binomial series."""
    result: Dict[int, Fraction] = {}
    for j, power in enumerate(_tail_powers(tail, length)):
        factor = _binomial(exponent, j)
        for k, value in power.items():
            result[k] = result.get(k, Fraction(0)) + factor * value
    return {k: SymbolicConstant.rational(v) for k, v in result.items() if v}


def _log_of_tail(tail: Sequence[Fraction], length: int) -> TPoly:
    """Return log(1 + T) below t^length."""
    result: Dict[int, Fraction] = {}
    for j, power in enumerate(_tail_powers(tail, length)):
        if j == 0:
            continue
        factor = Fraction((-1) ** (j + 1), j)
        for k, value in power.items():
            result[k] = result.get(k, Fraction(0)) + factor * value
    return {k: SymbolicConstant.rational(v) for k, v in result.items() if v}


def initial_power(initial: Initial, exponent: Fraction) -> SymbolicConstant:
    """Return in^exponent: principal power of a rational or a formal root of a symbol."""
    exponent = Fraction(exponent)
    if isinstance(initial, str):
        if exponent == 0:
            return SymbolicConstant.one()
        return SymbolicConstant.generator(SymbolRoot(initial, exponent.denominator), exponent.numerator)
    return rational_power(Fraction(initial), exponent)


def initial_log(initial: Initial) -> SymbolicConstant:
    """Return the principal log of the initial coefficient."""
    if isinstance(initial, str):
        return SymbolicConstant.generator(LogSymbol(initial))
    value = Fraction(initial)
    result = log_rational(abs(value)) if abs(value) != 1 else SymbolicConstant.zero()
    if value < 0:
        result = result + two_pi_i(1) * Fraction(1, 2)
    return result


def _check_cone(series: LaurentLogSeries, arc: DegenerationArc):
    weight = arc.weight
    if len(weight) != series.N:
        raise MalformedInputError(f"The arc has {len(weight)} coordinates, the series {series.N}.")
    if tuple(series.weight) != weight:
        raise UnsupportedTriangulationError(
            f"Series truncated along {tuple(series.weight)}, arc weight is {weight}; "
            "the series would need to be continued first."
        )


def pullback(series: LaurentLogSeries, arc: DegenerationArc, t_order=None) -> PuiseuxLogSeries:
    """Substitute z = f(t) and expand in t^(1/N) and log t up to t^order."""
    _check_cone(series, arc)
    order = Fraction(series.bound if t_order is None else min(Fraction(t_order), series.bound))
    result: Dict[Tuple[Fraction, int], SymbolicConstant] = {}
    for (u, ell), value in series.terms.items():
        beta = series.exponent_of(u)
        base = sum((Fraction(o) * b for o, b in zip(arc.orders, beta)), Fraction(0))
        if base > order:
            continue
        length = floor(order - base) + 1
        head = value
        for initial, b in zip(arc.initials, beta):
            head = head * initial_power(initial, b)
        factor: TPoly = {0: head}
        for i, b in enumerate(beta):
            tail = arc.tail(i)
            if tail and b:
                factor = _poly_mul(factor, _power_of_tail(tail, b, length), length)
        # polynomial in log t with t-polynomial coefficients
        logs: Dict[int, TPoly] = {0: {0: SymbolicConstant.one()}}
        for i, power in enumerate(ell):
            constant = _poly_add({0: initial_log(arc.initials[i])}, _log_of_tail(arc.tail(i), length))
            for _ in range(power):
                grown: Dict[int, TPoly] = {}
                for degree, poly in logs.items():
                    if arc.orders[i]:
                        lifted = {k: v * arc.orders[i] for k, v in poly.items()}
                        grown[degree + 1] = _poly_add(grown.get(degree + 1, {}), lifted)
                    grown[degree] = _poly_add(grown.get(degree, {}), _poly_mul(poly, constant, length))
                logs = grown
        for degree, poly in logs.items():
            for k, coefficient in _poly_mul(poly, factor, length).items():
                key = (base + k, degree)
                result[key] = result.get(key, SymbolicConstant.zero()) + coefficient
    terms = {k: v for k, v in result.items() if not v.is_zero()}
    return PuiseuxLogSeries(order, terms)


def pullback_numeric(
    series: LaurentLogSeries, arc: DegenerationArc, alpha, precision: int = 128
):
    """Recompute the log-free coefficient of t^alpha in floating point, term by term."""
    _check_cone(series, arc)
    alpha = Fraction(alpha)
    with working_precision(precision + 20):
        total = mpmath.mpc(0)
        for (u, ell), value in series.terms.items():
            beta = series.exponent_of(u)
            base = sum((Fraction(o) * b for o, b in zip(arc.orders, beta)), Fraction(0))
            gap = alpha - base
            if gap < 0 or gap.denominator != 1:
                continue
            length = int(gap) + 1
            coefficients = [mpmath.mpc(0)] * length
            coefficients[0] = eval_numeric(value, precision).midpoint
            for initial, b in zip(arc.initials, beta):
                coefficients[0] *= mpmath.power(
                    _arc_value(arc, initial), mpmath.mpf(b.numerator) / b.denominator
                )
            series_t = coefficients
            for i, b in enumerate(beta):
                tail = arc.tail(i)
                if tail and b:
                    series_t = _numeric_mul(series_t, _numeric_binomial_series(tail, b, length))
            logs = [[mpmath.mpc(1)] + [mpmath.mpc(0)] * (length - 1)]
            for i, power in enumerate(ell):
                if not power:
                    continue
                # o_i log t never reaches the log-free layer
                initial = arc.initials[i]
                constant = [mpmath.log(_arc_value(arc, initial))] + [mpmath.mpc(0)] * (length - 1)
                for k, v in _log_of_tail(arc.tail(i), length).items():
                    constant[k] += eval_numeric(v, precision).midpoint
                for _ in range(power):
                    logs = [_numeric_mul(logs[0], constant)]
            total += _numeric_mul(series_t, logs[0])[int(gap)]
        return total


def _arc_value(arc: DegenerationArc, initial: Initial):
    if isinstance(initial, str):
        return mpmath.mpmathify(arc.symbols[initial])
    return mpmath.mpf(initial.numerator) / initial.denominator


def _numeric_mul(left, right):
    length = len(left)
    product = [mpmath.mpc(0)] * length
    for i, a in enumerate(left):
        if a == 0:
            continue
        for j in range(length - i):
            product[i + j] += a * right[j]
    return product


def _numeric_binomial_series(tail, exponent: Fraction, length: int):
    values = [mpmath.mpc(0)] * length
    b = mpmath.mpf(exponent.numerator) / exponent.denominator
    for j, power in enumerate(_tail_powers(tail, length)):
        factor = mpmath.binomial(b, j)
        for k, value in power.items():
            values[k] += factor * mpmath.mpf(value.numerator) / value.denominator
    return values


def initial_coefficient(expansion: PuiseuxLogSeries, alpha) -> SymbolicConstant:
    """Return in_alpha: the coefficient of t^alpha in the log-free layer."""
    return expansion.coefficient(alpha, 0)


def scale_arc(arc: DegenerationArc, scale) -> DegenerationArc:
    """Return the arc reparametrized by t -> scale t."""
    scale = Fraction(scale)
    if scale == 0:
        raise MalformedInputError("The scale of an arc must be nonzero.")
    initials = []
    for initial, order in zip(arc.initials, arc.orders):
        if isinstance(initial, str):
            if scale ** order != 1:
                raise MalformedInputError(f"Cannot rescale the formal initial coefficient {initial}.")
            initials.append(initial)
        else:
            initials.append(Fraction(initial) * scale**order)
    tails = tuple(
        tuple(value * scale ** (k + 1) for k, value in enumerate(arc.tail(i)))
        for i in range(len(arc.orders))
    ) if arc.tails else ()
    return replace(arc, initials=tuple(initials), tails=tails)


def scaling_covariant(
    series: LaurentLogSeries, arc: DegenerationArc, scale, t_order=None, precision: int = 128
) -> bool:
    """Check that t -> scale t multiplies t^alpha by scale^alpha and shifts log t by log scale."""
    scale = Fraction(scale)
    if scale <= 0:
        raise MalformedInputError("The covariance check needs a positive scale.")
    original = pullback(series, arc, t_order)
    scaled = pullback(series, scale_arc(arc, scale), t_order)
    log_scale = log_rational(scale)
    for alpha in set(original.exponents()) | set(scaled.exponents()):
        degrees = set(original.log_degrees(alpha)) | set(scaled.log_degrees(alpha))
        for ell in degrees:
            expected = SymbolicConstant.zero()
            for higher in original.log_degrees(alpha):
                if higher >= ell:
                    expected = expected + (
                        original.coefficient(alpha, higher)
                        * comb(higher, ell)
                        * log_scale ** (higher - ell)
                    )
            expected = expected * rational_power(scale, alpha)
            if not numerically_equal(scaled.coefficient(alpha, ell), expected, precision):
                return False
    return True


# --- the limiting-period table ----------------------------------------------------------


@dataclass
class LimitRow:
    """Leading data of one period expansion pulled back along the arc."""

    c: Tuple[int, ...]
    p: Tuple[int, ...]
    leading_exponent: Optional[Fraction]
    leading: Dict[int, SymbolicConstant]
    window: Dict[Fraction, SymbolicConstant]
    expansion: PuiseuxLogSeries
    reports: Dict[Fraction, RingReport]
    certified: Optional[bool]

    @property
    def row_id(self) -> str:
        """Return a stable label for the row."""
        return f"c={','.join(map(str, self.c))};p={','.join(map(str, self.p))}"

    @property
    def passed(self) -> bool:
        """Return True if every window coefficient passed the ring check."""
        return all(report.passed for report in self.reports.values())


@dataclass
class LimitingPeriodTable:
    """Rows ordered by (class representative, p) with the data shared by all rows."""

    weight: RationalVector
    triangulation: str
    pivot: Optional[int]
    N_A: int  # pylint: disable=invalid-name
    rows: List[LimitRow]
    note: str = GENERATING_SET_NOTE


def _row(c, p, expansion: PuiseuxLogSeries, N_A: int, certificate) -> LimitRow:  # pylint: disable=invalid-name
    lead = expansion.leading_exponent()
    leading, window, reports = {}, {}, {}
    if lead is not None:
        leading = {ell: expansion.coefficient(lead, ell) for ell in expansion.log_degrees(lead)}
        for alpha in expansion.exponents():
            if lead <= alpha < lead + 1 and alpha <= expansion.order:
                value = initial_coefficient(expansion, alpha)
                if value.is_zero():
                    continue
                window[alpha] = value
                reports[alpha] = in_ring_report(value, N_A)
    certified = certificate(window) if certificate else None
    return LimitRow(tuple(c), tuple(p), lead, leading, window, expansion, reports, certified)


def _certifier(pieces, arc: DegenerationArc, precision: int, tolerance):
    """Return a check of every window entry against the floating recomputation."""
    if any(isinstance(value, str) and value not in arc.symbols for value in arc.initials):
        return None

    def certify(window: Dict[Fraction, SymbolicConstant]) -> bool:
        with working_precision(precision + 20):
            bound = mpmath.mpf(tolerance)
            for alpha, value in window.items():
                numeric = mpmath.mpc(0)
                for factor, series in pieces:
                    scale = eval_numeric(factor, precision).midpoint
                    numeric += scale * pullback_numeric(series, arc, alpha, precision)
                symbolic = eval_numeric(value, precision, arc.symbols)
                if not symbolic.agrees_with(numeric, bound * max(1, abs(numeric))):
                    logger.info("Certificate failed at t^%s: %s vs %s", alpha, symbolic, numeric)
                    return False
        return True

    return certify


def limiting_period_table(
    A: ExponentMatrix,
    arc: DegenerationArc,
    classes: Sequence[Sequence[int]],
    terms: int = DEFAULT_DWORK_TERMS,
    t_order=None,
    precision: int = 128,
    c_prime=None,
    threads: int = 1,
    tolerance=CERTIFICATE_TOLERANCE,
) -> LimitingPeriodTable:
    """Run the pipeline: skeleton test, continuation, pullback, leading data, ring reports."""
    weight = arc.weight
    cone = gale_cone_report(A, weight)
    if cone.in_skeleton:
        raise SkeletonHitError(
            f"w_f = {weight} lies on the cone of Gale vectors {cone.gale_vectors} "
            f"(columns {cone.cone})."
        )
    kind, pivot = classify_triangulation(A, subdivision_from_weight(A, weight))
    N_A = compute_N_A(A)  # pylint: disable=invalid-name
    jobs = []
    for c in classes:
        c = tuple(int(x) for x in c)
        expansion = period_expansion(A, c)
        jobs.extend((expansion, member) for member in expansion.members)

    def compute(job) -> LimitRow:
        expansion, member = job
        if kind == "fermat":
            bound = default_truncation(A, member.exponent, weight, terms)
            series = truncated_gamma_series(A, member.exponent, weight, bound)
            pieces = [(expansion.prefactor, series)]
        else:
            continued = continue_to_dwork(
                A, expansion.c, member.p, weight, terms, pivot, c_prime, precision
            )
            pieces = [
                (expansion.prefactor * piece.coefficient, piece.series)
                for piece in continued.pieces
            ]
        pulled = None
        for factor, series in pieces:
            part = pullback(series, arc, t_order).scale(factor)
            pulled = part if pulled is None else pulled + part
        certificate = _certifier(pieces, arc, precision, tolerance)
        row = _row(expansion.c, member.p, pulled, N_A, certificate)
        logger.info("Row %s: leading exponent %s", row.row_id, row.leading_exponent)
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(compute, jobs))
    else:
        rows = [compute(job) for job in jobs]
    return LimitingPeriodTable(weight, kind, pivot, N_A, rows)


def emit_csv(table: LimitingPeriodTable, precision: int = 64) -> str:
    """Return the CSV summary: row id, exponent, decimal value, symbolic form, ring verdict."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["row", "alpha", "value", "symbolic", "ring"])
    for row in table.rows:
        for alpha, value in sorted(row.window.items()):
            try:
                decimal = str(eval_numeric(value, max(precision, 64)))
            except MalformedInputError:
                decimal = ""
            verdict = "pass" if row.reports[alpha].passed else "fail"
            writer.writerow([row.row_id, str(alpha), decimal, str(value), verdict])
    return buffer.getvalue()


def exponent_denominators_divide(expansion: PuiseuxLogSeries, N_A: int) -> bool:  # pylint: disable=invalid-name
    """Return True if every t-exponent lies in (1/N_A) Z."""
    return N_A % expansion.ramification == 0
