"""Analytic continuation from T(Fer) to a Dwork triangulation T(a_i)."""
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
from sympy import Rational, Symbol, expand

from gkzperiods.constant_ring import (
    NumericValue,
    SymbolicConstant,
    eval_numeric,
    exp_pi_i,
    pochhammer,
    reciprocal_gamma,
    sin_pi,
    working_precision,
)
from gkzperiods.errors import ContourError, MalformedInputError, PoleError, UnsupportedTriangulationError
from gkzperiods.gamma_series import (
    Exponent,
    LaurentLogSeries,
    default_truncation,
    dwork_exponent,
    evaluate_series,
    exponent,
    fermat_exponent,
    lattice_points,
    truncated_gamma_series,
)
from gkzperiods.lattice_core import ExponentMatrix, IntVector, RationalVector, basis_condition, p_set
from gkzperiods.sst_limit import (
    EpsLaurentSeries,
    eps_exp_pi_i,
    eps_gamma_coefficient,
    eps_sin_pi,
    family_series,
    perturbed_family,
    sst_limit,
)

logger = logging.getLogger(__name__)

DEFAULT_MB_PRECISION = 96
DEFAULT_RESIDUE_LAYERS = 8
DEFAULT_DWORK_TERMS = 8
PANELS_PER_UNIT = 1


def _require_single_monomial(A: ExponentMatrix):
    if not A.is_fermat_deformation or A.m != 1:
        raise MalformedInputError("This construction needs a Fermat deformation by one monomial.")


# --- hypergeometric form on T(Fer) ------------------------------------------------------


@dataclass(frozen=True)
class HypergeometricData:
    """Cancelled parameters alpha, beta with the scale kappa and the monomial u."""

    alpha: Tuple[Fraction, ...]
    beta: Tuple[Fraction, ...]
    scale: Optional[Fraction] = None
    u: Optional[IntVector] = None


def cancell(alpha_raw: Sequence, beta_raw: Sequence) -> HypergeometricData:
    """Remove the common values of alpha and beta as multisets; alpha comes back sorted."""
    alpha = Counter(Fraction(value) for value in alpha_raw)
    beta_order = [Fraction(value) for value in beta_raw]
    beta = Counter(beta_order)
    common = alpha & beta
    alpha -= common
    remaining = Counter(common)
    kept_beta = []
    for value in beta_order:
        if remaining[value]:
            remaining[value] -= 1
            continue
        kept_beta.append(value)
    return HypergeometricData(tuple(sorted(alpha.elements())), tuple(kept_beta))


def hypergeometric_data(A: ExponentMatrix, c: Sequence) -> HypergeometricData:
    """Return the cancelled parameters of the one-monomial deformation x^a with parameter c."""
    _require_single_monomial(A)
    d, a = A.d, A.columns[0]
    divisor = d
    for entry in a:
        divisor = gcd(divisor, entry)
    if divisor != 1:
        raise MalformedInputError(f"The hypergeometric form requires gcd(d, a) = 1, got {divisor}.")
    c = tuple(Fraction(value) for value in c)
    alpha_raw = [
        Fraction(ell, a_k) + c_k / (d * a_k)
        for a_k, c_k in zip(a, c)
        if a_k > 0
        for ell in range(a_k)
    ]
    beta_raw = [Fraction(1)] + [Fraction(j, d) for j in range(1, d)]
    data = cancell(alpha_raw, beta_raw)
    scale = Fraction(-d) ** (-d)
    for a_k in a:
        scale *= Fraction(a_k) ** a_k
    return HypergeometricData(data.alpha, data.beta, scale, (d,) + tuple(-a_k for a_k in a))


@dataclass(frozen=True)
class HypergeometricForm:
    """phi(gamma^c_p; z) = prefactor z^gamma_p F(p/d + alpha; p/d + beta; kappa z^u)."""

    data: HypergeometricData
    p: int
    exponent: Exponent
    alpha: Tuple[Fraction, ...]
    beta: Tuple[Fraction, ...]
    start: SymbolicConstant

    def coefficient(self, i: int) -> SymbolicConstant:
        """Return the coefficient of z^(gamma_p + i u)."""
        ratio = self.data.scale**i
        for value in self.alpha:
            ratio *= pochhammer(value, i)
        for value in self.beta:
            ratio /= pochhammer(value, i)
        return self.start * ratio

    def matches(self, series: LaurentLogSeries) -> bool:
        """Compare term by term with a truncated Gamma series of the same exponent."""
        for (u, ell), value in series.terms.items():
            if any(ell):
                return False
            step = Fraction(u[0], self.data.u[0])
            if step.denominator != 1 or tuple(step * x for x in self.data.u) != tuple(u):
                return False
            if value != self.coefficient(int(step)):
                return False
        return True


def hypergeometric_form(A: ExponentMatrix, c: Sequence, p: int) -> HypergeometricForm:
    """Rewrite the Fermat series with offset p as a shifted hypergeometric series."""
    data = hypergeometric_data(A, c)
    exp = fermat_exponent(A, c, (p,))
    start = SymbolicConstant.one()
    for value in exp.gamma:
        start = start * reciprocal_gamma(1 + value)
    if start.is_zero():
        raise PoleError(f"p = {p} is not in P_c: 1/Gamma(1 + gamma_p) vanishes.")
    shift = Fraction(p, A.d)
    return HypergeometricForm(
        data,
        p,
        exp,
        tuple(shift + value for value in data.alpha),
        tuple(shift + value for value in data.beta),
        start,
    )


def beta_matches_p_set(A: ExponentMatrix, c: Sequence[int]) -> bool:
    """Check that the cancelled beta equals {1 - p/d : p in P_c}."""
    data = hypergeometric_data(A, c)
    expected = sorted(1 - Fraction(p[0], A.d) for p in p_set(c, A.generators, A.d))
    return sorted(data.beta) == expected


@dataclass(frozen=True)
class PicardFuchsOperator:
    """P = prod (D + beta_i - 1) - z prod (D + alpha_i) with D = z d/dz."""

    alpha: Tuple[Fraction, ...]
    beta: Tuple[Fraction, ...]

    def expression(self):
        """Return P as a sympy polynomial in the symbols D and z."""
        theta, z = Symbol("D"), Symbol("z")
        left, right = 1, 1
        for value in self.beta:
            left *= theta + Rational(value.numerator, value.denominator) - 1
        for value in self.alpha:
            right *= theta + Rational(value.numerator, value.denominator)
        return expand(left - z * right)

    def apply(self, coefficients: Sequence) -> List[Fraction]:
        """Return the coefficients of P applied to sum_k f_k z^k."""
        residual = []
        for k, value in enumerate(coefficients):
            term = Fraction(value)
            for b in self.beta:
                term *= k + b - 1
            if k:
                previous = Fraction(coefficients[k - 1])
                for a in self.alpha:
                    previous *= k - 1 + a
                term -= previous
            residual.append(term)
        return residual


def picard_fuchs(data: HypergeometricData, p: int = 0, d: Optional[int] = None) -> PicardFuchsOperator:
    """Return the operator annihilating F(p/d + alpha; p/d + beta; z)."""
    if p and d is None:
        raise MalformedInputError("A shifted operator needs the degree d.")
    shift = Fraction(p, d) if p else Fraction(0)
    return PicardFuchsOperator(
        tuple(shift + value for value in data.alpha), tuple(shift + value for value in data.beta)
    )


def hypergeometric_coefficients(alpha: Sequence, beta: Sequence, terms: int) -> List[Fraction]:
    """Return f_k = prod (alpha)_k / prod (beta)_k for k < terms."""
    values = []
    for k in range(terms):
        value = Fraction(1)
        for a in alpha:
            value *= pochhammer(Fraction(a), k)
        for b in beta:
            value /= pochhammer(Fraction(b), k)
        values.append(value)
    return values


# --- Mellin-Barnes representation -------------------------------------------------------


@dataclass(frozen=True)
class MellinBarnesSpec:
    """
    I_p(zeta) = (-1)^p 2^(d-1) / (2 pi i) int Gamma(d s) prod_i sin(pi (s + (p+i)/d))
    prod_k Gamma(alpha_k - (p/d) a_k - a_k s) X^(-d s - p) ds with X = exp(-pi i/d) zeta.
    """

    d: int
    a: IntVector
    alpha: RationalVector
    p: int = 0
    abscissa: Optional[Fraction] = None
    precision: int = DEFAULT_MB_PRECISION

    @property
    def reduced_alpha(self) -> RationalVector:
        """Return alpha - (p/d) a."""
        return tuple(Fraction(x) - Fraction(self.p, self.d) * a_k for x, a_k in zip(self.alpha, self.a))

    def separation(self) -> Tuple[Fraction, Fraction]:
        """Return the open interval between the left and the right pole families."""
        left = Fraction(-self.p, self.d)
        right = min(
            (x / a_k for x, a_k in zip(self.reduced_alpha, self.a) if a_k > 0), default=None
        )
        if right is None or right <= left:
            raise ContourError(
                f"No vertical line separates the poles: left {left}, right {right}."
            )
        return left, right

    def contour(self) -> Fraction:
        """Return the abscissa of the integration line."""
        left, right = self.separation()
        if self.abscissa is None:
            return (left + right) / 2
        abscissa = Fraction(self.abscissa)
        if not left < abscissa < right:
            raise ContourError(f"Abscissa {abscissa} is outside ({left}, {right}).")
        return abscissa


def mellin_barnes_spec(A: ExponentMatrix, c: Sequence, p: int, **options) -> MellinBarnesSpec:
    """Return the integral attached to the Fermat series gamma^c_p."""
    _require_single_monomial(A)
    a = A.columns[0]
    alpha = tuple(Fraction(c_k) / A.d + Fraction(p, A.d) * a_k for c_k, a_k in zip(c, a))
    return MellinBarnesSpec(A.d, a, alpha, p, **options)


def _x_variable(spec: MellinBarnesSpec, zeta):
    x = mpmath.exp(-mpmath.mpc(0, 1) * mpmath.pi / spec.d) * mpmath.mpmathify(zeta)
    if x == 0:
        raise ContourError("X = 0 is outside the sector of convergence.")
    if abs(mpmath.arg(x)) >= mpmath.pi / spec.d:
        raise ContourError(f"|arg X| = {mpmath.nstr(abs(mpmath.arg(x)), 8)} is not below pi/{spec.d}.")
    return x


def _integrand(spec: MellinBarnesSpec, s, log_x):
    value = mpmath.gamma(spec.d * s)
    for i in range(1, spec.d):
        value *= mpmath.sinpi(s + mpmath.mpf(spec.p + i) / spec.d)
    for x, a_k in zip(spec.reduced_alpha, spec.a):
        value *= mpmath.gamma(mpmath.mpf(x.numerator) / x.denominator - a_k * s)
    return value * mpmath.exp(-(spec.d * s + spec.p) * log_x)


def mb_eval(spec: MellinBarnesSpec, zeta) -> NumericValue:
    """Evaluate I_p(zeta) by Gauss-Legendre quadrature on the vertical line."""
    sigma = spec.contour()
    with working_precision(spec.precision + 20):
        x = _x_variable(spec, zeta)
        log_x = mpmath.log(x)
        decay = mpmath.pi - spec.d * abs(mpmath.im(log_x))
        real = mpmath.mpf(sigma.numerator) / sigma.denominator
        prefactor = (-1) ** spec.p * mpmath.mpf(2) ** (spec.d - 1) / (2 * mpmath.pi)
        scale = abs(_integrand(spec, mpmath.mpc(real, 0), log_x))
        height = (spec.precision * mpmath.log(2) + 30 + mpmath.log(1 + scale)) / decay
        height = int(mpmath.ceil(1.25 * height)) + 10
        nodes = mpmath.linspace(-height, height, PANELS_PER_UNIT * 2 * height + 1)
        value, error = mpmath.quad(
            lambda t: _integrand(spec, mpmath.mpc(real, t), log_x),
            nodes,
            method="gauss-legendre",
            error=True,
        )
        logger.debug("MB quadrature on Re s = %s over |t| <= %d, error %s", sigma, height, error)
        return NumericValue(
            mpmath.mpc(prefactor * value), abs(prefactor) * error, spec.precision
        )


def mb_series(spec: MellinBarnesSpec, zeta, terms: Optional[int] = None) -> NumericValue:
    """Sum the lacunary series sum_k Gamma(alpha + k a) zeta^(dk) / Gamma(1 + p + dk)."""
    with working_precision(spec.precision + 20):
        zeta = mpmath.mpmathify(zeta)
        alpha = [mpmath.mpf(x.numerator) / x.denominator for x in spec.alpha]
        epsilon = mpmath.ldexp(1, -spec.precision)
        total = mpmath.mpc(0)
        last = mpmath.inf
        size = mpmath.mpf(0)
        k = 0
        while terms is None or k < terms:
            term = mpmath.rgamma(1 + spec.p + spec.d * k) * zeta ** (spec.d * k)
            for x, a_k in zip(alpha, spec.a):
                term *= mpmath.gamma(x + k * a_k)
            total += term
            size = abs(term)
            if terms is None and k > 2 and size <= epsilon * abs(total) and size <= last:
                break
            if terms is None and k > 100000:
                raise ContourError(f"The lacunary series does not converge at |zeta| = {abs(zeta)}.")
            last = size
            k += 1
        return NumericValue(mpmath.mpc(total), mpmath.mpf(last if terms else size), spec.precision)


@dataclass
class ResidueExpansion:
    """I_p as sum over (exponent e, log power k) of coefficient X^e (log X)^k."""

    spec: MellinBarnesSpec
    poles: Tuple[Fraction, ...]
    terms: Dict[Tuple[Fraction, int], SymbolicConstant] = field(default_factory=dict)

    def leading(self) -> Tuple[Fraction, Dict[int, SymbolicConstant]]:
        """Return the largest exponent of X and its coefficients by log power."""
        top = max(e for e, _ in self.terms)
        return top, {k: v for (e, k), v in self.terms.items() if e == top}

    def max_log_degree(self) -> int:
        """Return the largest power of log X."""
        return max((k for _, k in self.terms), default=0)


def _pole_multiplicities(spec: MellinBarnesSpec, layers: int) -> Dict[Fraction, int]:
    reduced = spec.reduced_alpha
    starts = [x / a_k for x, a_k in zip(reduced, spec.a) if a_k > 0]
    ceiling = min(starts) + layers
    poles: Dict[Fraction, int] = {}
    for x, a_k in zip(reduced, spec.a):
        if a_k <= 0:
            continue
        j = 0
        while (x + j) / a_k < ceiling:
            s0 = (x + j) / a_k
            poles[s0] = poles.get(s0, 0) + 1
            j += 1
    return dict(sorted(poles.items()))


def _gamma_expansion(x: Fraction, delta: int, relative: int) -> EpsLaurentSeries:
    """Return Gamma(x + w delta) with `relative` known coefficients."""
    pole = x.denominator == 1 and x <= 0
    reciprocal = eps_gamma_coefficient(x - 1, Fraction(delta), relative + (1 if pole else 0), False)
    return reciprocal.inverse()


def _residue_at(spec: MellinBarnesSpec, s0: Fraction, multiplicity: int) -> Dict[int, SymbolicConstant]:
    relative = multiplicity + 1
    product = _gamma_expansion(spec.d * s0, spec.d, relative)
    for i in range(1, spec.d):
        x = s0 + Fraction(spec.p + i, spec.d)
        zero = x.denominator == 1
        product = product * eps_sin_pi(x, 1, relative + (1 if zero else 0))
    for x, a_k in zip(spec.reduced_alpha, spec.a):
        if a_k == 0:
            product = product * reciprocal_gamma(x).inverse()
            continue
        product = product * _gamma_expansion(x - a_k * s0, -a_k, relative)
    # exp(-d w log X) contributes (-d)^k / k! (log X)^k against w^(-1-k)
    values = {}
    factorial = 1
    for k in range(multiplicity):
        if k:
            factorial *= k
        coefficient = product.coefficient(-1 - k)
        if not coefficient.is_zero():
            values[k] = coefficient * Fraction((-spec.d) ** k, factorial)
    return values


def mb_residue_sum(spec: MellinBarnesSpec, layers: int = DEFAULT_RESIDUE_LAYERS) -> ResidueExpansion:
    """Return the exact residue expansion of I_p valid for large |X|."""
    spec.separation()
    sign = (-1) ** (spec.p + 1) * 2 ** (spec.d - 1)
    poles = _pole_multiplicities(spec, layers)
    terms = {}
    for s0, multiplicity in poles.items():
        e = -spec.d * s0 - spec.p
        for k, value in _residue_at(spec, s0, multiplicity).items():
            terms[(e, k)] = value * sign
    logger.debug("Residue expansion with %d poles and %d terms", len(poles), len(terms))
    return ResidueExpansion(spec, tuple(poles), terms)


def mb_residue_value(
    spec: MellinBarnesSpec, zeta, layers: int = DEFAULT_RESIDUE_LAYERS, expansion=None
) -> NumericValue:
    """Evaluate the residue expansion at zeta with the principal log X."""
    expansion = expansion or mb_residue_sum(spec, layers)
    with working_precision(spec.precision + 20):
        x = _x_variable(spec, zeta)
        log_x = mpmath.log(x)
        total = mpmath.mpc(0)
        radius = mpmath.mpf(0)
        tail = mpmath.mpf(0)
        top_pole = expansion.poles[-1] if expansion.poles else None
        for (e, k), value in expansion.terms.items():
            numeric = eval_numeric(value, max(spec.precision, 64))
            term = numeric.midpoint * mpmath.exp(e * log_x) * log_x**k
            total += term
            radius += numeric.radius * abs(mpmath.exp(e * log_x) * log_x**k)
            if top_pole is not None and e == -spec.d * top_pole - spec.p:
                tail += abs(term)
        return NumericValue(mpmath.mpc(total), radius + tail, spec.precision)


# --- connection coefficients ------------------------------------------------------------


@dataclass(frozen=True)
class ConnectionCoefficient:
    """The coefficient of phi(gamma^c_q(a_pivot, i)) in the continuation of phi(gamma^c_p)."""

    i: int
    p: IntVector
    q: IntVector
    exponent: Exponent
    value: SymbolicConstant


def _coefficient_data(A: ExponentMatrix, i: int, p: Sequence[int], q: Sequence[int], c, pivot: int):
    if not A.is_fermat_deformation or A.m < 1:
        raise MalformedInputError("Connection coefficients need a Fermat deformation.")
    if len(p) != A.m:
        raise MalformedInputError(f"p needs {A.m} entries.")
    exp = dwork_exponent(A, c, q, i, pivot)
    c = tuple(Fraction(value) for value in c)
    shifted = list(c)
    for p_j, column in zip(p, A.generators):
        for k in range(A.n):
            shifted[k] += p_j * column[k]
    others = [j for j in range(A.m) if j != pivot]
    sign = (-1) ** (sum(p[j] for j in others) + sum(q) + p[pivot] + A.n)
    return exp, shifted, sign


def connection_coefficient(
    A: ExponentMatrix, i: int, p: Sequence[int], q: Sequence[int], c, pivot: int = 0
) -> ConnectionCoefficient:
    """
    Return C^c_{i,p,q}; a vanishing sine in the denominator raises PoleError and
    sends the caller to the eps-perturbed route.
    """
    exp, shifted, sign = _coefficient_data(A, i, p, q, c, pivot)
    d, m, gamma = A.d, A.m, exp.gamma
    lead = gamma[pivot] - p[pivot]
    denominator = sin_pi(gamma[pivot]) * A.columns[pivot][i]
    for k in range(A.n):
        if k != i:
            denominator = denominator * sin_pi(gamma[m + k])
    if denominator.is_zero():
        raise PoleError(f"C for i={i}, q={tuple(q)} has a pole at c={tuple(c)}.")
    value = SymbolicConstant.rational(sign * 2 ** (d - 1))
    for entry in shifted:
        value = value * sin_pi(entry / d)
    for ell in range(1, d):
        value = value * sin_pi((lead + ell) / d)
    value = value * exp_pi_i((d - 1) * lead / d) * denominator.inverse()
    return ConnectionCoefficient(i, tuple(p), tuple(q), exp, value)


def connection_coefficient_eps(
    A: ExponentMatrix,
    i: int,
    p: Sequence[int],
    q: Sequence[int],
    c,
    c_prime,
    order: int,
    pivot: int = 0,
) -> EpsLaurentSeries:
    """Return C^(c + eps c')_{i,p,q} as a Laurent series known below eps^order."""
    exp, shifted, sign = _coefficient_data(A, i, p, q, c, pivot)
    c_prime = tuple(Fraction(value) for value in c_prime)
    delta = exponent(A, exp.simplex, {j: 0 for j, _ in exp.offsets}, c_prime).gamma
    d, m, gamma = A.d, A.m, exp.gamma
    lead = gamma[pivot] - p[pivot]

    numerator = [(entry / d, shift / d) for entry, shift in zip(shifted, c_prime)]
    numerator += [((lead + ell) / d, delta[pivot] / d) for ell in range(1, d)]
    denominator = [(gamma[pivot], delta[pivot])]
    denominator += [(gamma[m + k], delta[m + k]) for k in range(A.n) if k != i]

    def vanishes(x):
        return x.denominator == 1

    valuation = sum(vanishes(x) for x, _ in numerator) - sum(vanishes(x) for x, _ in denominator)
    relative = order - valuation
    if relative <= 0:
        return EpsLaurentSeries.zero(order)
    top = EpsLaurentSeries.constant(sign * 2 ** (d - 1))
    for x, y in numerator:
        top = top * eps_sin_pi(x, y, relative + vanishes(x))
    bottom = EpsLaurentSeries.constant(A.columns[pivot][i])
    for x, y in denominator:
        bottom = bottom * eps_sin_pi(x, y, relative + vanishes(x))
    phase = eps_exp_pi_i((d - 1) * lead / d, (d - 1) * delta[pivot] / d, relative)
    return (top * phase * bottom.inverse()).truncate(order)


@dataclass(frozen=True)
class DworkRepresentatives:
    """Representatives q_r = (r, p_2, .., p_m), 0 <= r < r_i, of the terms with dropped power i."""

    i: int
    period: int
    qs: Tuple[IntVector, ...]
    exponents: Tuple[Exponent, ...]


def dwork_coset_representatives(
    A: ExponentMatrix, c, p: Sequence[int], i: int, pivot: int = 0
) -> DworkRepresentatives:
    """Return r_i and the representatives indexing the Dwork series with dropped power i."""
    zero = (0,) * A.n
    unit = (1,) + (0,) * (A.m - 1)
    step = dwork_exponent(A, zero, unit, i, pivot).gamma
    period = 1
    for value in step:
        period = lcm(period, value.denominator)
    others = tuple(p[j] for j in range(A.m) if j != pivot)
    qs = tuple((r,) + others for r in range(period))
    exponents = tuple(dwork_exponent(A, c, q, i, pivot) for q in qs)
    return DworkRepresentatives(i, period, qs, exponents)


# --- the continuation ---------------------------------------------------------------------


@dataclass
class DworkPiece:
    """coefficient * series, the series carrying logs after an SST limit."""

    coefficient: SymbolicConstant
    series: LaurentLogSeries
    sources: Tuple[Tuple[int, IntVector], ...]


@dataclass
class DworkExpansion:
    """The continuation of phi(gamma^c_p) to U_T(a_pivot) as a sum of pieces."""

    c: RationalVector
    p: IntVector
    pivot: int
    generic: bool
    pieces: List[DworkPiece]

    def evaluate(self, z: Sequence, precision: int = 128):
        """Sum all pieces numerically with principal branches."""
        total = mpmath.mpc(0)
        with working_precision(precision):
            for piece in self.pieces:
                factor = eval_numeric(piece.coefficient, max(precision, 64)).midpoint
                total += factor * evaluate_series(piece.series, z, precision)
        return total


def continue_to_dwork(
    A: ExponentMatrix,
    c,
    p: Sequence[int],
    w,
    terms: int = DEFAULT_DWORK_TERMS,
    pivot: int = 0,
    c_prime=None,
    precision: int = 128,
) -> DworkExpansion:
    """Express phi(gamma^c_p; z) through the Gamma series of T(a_pivot)."""
    if not basis_condition(A):
        raise UnsupportedTriangulationError(
            f"The monomials {A.generators} fail the basis condition mod {A.d}; the Dwork continuation is unsupported."
        )
    p = tuple(int(value) for value in p)
    weight = tuple(Fraction(value) for value in w)
    candidates = []
    for i in range(A.n):
        if A.columns[pivot][i] == 0:
            continue
        representatives = dwork_coset_representatives(A, c, p, i, pivot)
        for q, exp in zip(representatives.qs, representatives.exponents):
            candidates.append((i, q, exp))

    groups: Dict[RationalVector, List[Tuple[int, IntVector, Exponent]]] = {}
    for candidate in candidates:
        groups.setdefault(candidate[2].fractional_parts(), []).append(candidate)

    pieces = []
    generic = True
    for members in groups.values():
        exact = []
        try:
            for i, q, _ in members:
                exact.append(connection_coefficient(A, i, p, q, c, pivot))
        except PoleError:
            exact = None
        if exact is not None:
            for coefficient in exact:
                bound = default_truncation(A, coefficient.exponent, weight, terms)
                series = truncated_gamma_series(A, coefficient.exponent, weight, bound)
                pieces.append(
                    DworkPiece(coefficient.value, series, ((coefficient.i, coefficient.q),))
                )
            continue
        generic = False
        pieces.append(_limit_piece(A, members, c, p, weight, terms, pivot, c_prime, precision))
    logger.info(
        "Continuation of p=%s to T(a_%d): %d pieces (%s)",
        p,
        pivot,
        len(pieces),
        "generic" if generic else "SST limits",
    )
    return DworkExpansion(tuple(Fraction(x) for x in c), p, pivot, generic, pieces)


def _limit_piece(A, members, c, p, weight, terms, pivot, c_prime, precision) -> DworkPiece:
    family = perturbed_family(A, [exp for _, _, exp in members], c_prime)
    coefficients = [
        connection_coefficient_eps(A, i, p, q, c, family.c_prime, 1, pivot) for i, q, _ in members
    ]
    pole = max([-value.valuation for value in coefficients if not value.is_zero()] + [0])
    bound = max(default_truncation(A, exp, weight, terms) for _, _, exp in members)
    series = family_series(A, family, weight, bound, pole + 1)
    limit = sst_limit(A, series, coefficients, precision)
    sources = tuple((i, q) for i, q, _ in members)
    return DworkPiece(SymbolicConstant.one(), limit, sources)


# --- numeric evaluation of both sides ---------------------------------------------------


def phi_numeric(A: ExponentMatrix, exp: Exponent, z: Sequence, w, bound, precision: int = 128):
    """Sum the Gamma series of exp over the truncated region directly in floating point."""
    with working_precision(precision):
        logs = [mpmath.log(mpmath.mpmathify(value)) for value in z]
        total = mpmath.mpc(0)
        for u in lattice_points(A, exp, w, bound):
            term = mpmath.mpf(1)
            exponent_sum = mpmath.mpc(0)
            for g, x, log_z in zip(exp.gamma, u, logs):
                value = g + x
                term *= mpmath.rgamma(1 + mpmath.mpf(value.numerator) / value.denominator)
                exponent_sum += mpmath.mpf(value.numerator) / value.denominator * log_z
            total += term * mpmath.exp(exponent_sum)
        return total


def zeta_variable(A: ExponentMatrix, z: Sequence):
    """Return zeta = -z_1 prod_k z_(1+k)^(-a_k/d) with principal powers."""
    _require_single_monomial(A)
    with working_precision(DEFAULT_MB_PRECISION + 20):
        zeta = -mpmath.mpmathify(z[0])
        for a_k, value in zip(A.columns[0], z[1:]):
            zeta *= mpmath.power(mpmath.mpmathify(value), -mpmath.mpf(a_k) / A.d)
        return zeta


def phi_via_mellin_barnes(
    A: ExponentMatrix, c, p: int, z: Sequence, precision: int = DEFAULT_MB_PRECISION
) -> NumericValue:
    """Evaluate phi(gamma^c_p; z) through the Mellin-Barnes integral, valid beyond T(Fer)."""
    _require_single_monomial(A)
    spec = mellin_barnes_spec(A, c, p, precision=precision)
    d, a = A.d, A.columns[0]
    integral = mb_eval(spec, zeta_variable(A, z))
    with working_precision(precision + 20):
        factor = mpmath.power(mpmath.mpmathify(z[0]), p)
        for c_k, a_k, value in zip(c, a, z[1:]):
            power = -(Fraction(c_k) + p * a_k) / d
            factor *= mpmath.power(mpmath.mpmathify(value), mpmath.mpf(power.numerator) / power.denominator)
            factor *= mpmath.sinpi(mpmath.mpf(power.numerator) / power.denominator) * -1
        factor /= mpmath.pi**A.n
        return NumericValue(
            mpmath.mpc(factor * integral.midpoint), abs(factor) * integral.radius, precision
        )
