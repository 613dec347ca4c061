"""Fermat cycle periods and the period expansion at the Fermat triangulation."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import List, Optional, Sequence, Tuple

import mpmath

from gkzperiods.constant_ring import (
    NumericValue,
    SymbolicConstant,
    reciprocal_gamma,
    two_pi_i,
    working_precision,
)
from gkzperiods.errors import MalformedInputError, NotEquivalentError
from gkzperiods.gamma_series import (
    Exponent,
    TruncatedSeries,
    fermat_exponent,
    truncated_gamma_series,
)
from gkzperiods.lattice_core import (
    ExponentMatrix,
    IntVector,
    coset_representatives,
    h_map,
    p_set,
)

logger = logging.getLogger(__name__)


def _cycle_degree(c: Sequence[int], d: int) -> int:
    if any(entry <= 0 for entry in c):
        raise MalformedInputError(f"c = {tuple(c)} needs positive entries.")
    total = sum(c)
    if total % d:
        raise MalformedInputError(f"|c| = {total} is not a multiple of d = {d}.")
    return total // d


def fermat_cycle_value(c: Sequence[int], d: int, r: Optional[int] = None) -> SymbolicConstant:
    """Return (2 pi i)^n (-1)^r / (Gamma(r) prod Gamma(1 - c_i/d))."""
    degree = _cycle_degree(c, d)
    if r is not None and r != degree:
        raise MalformedInputError(f"|c| = {sum(c)} is not {d} * {r}.")
    value = two_pi_i(len(c)) * Fraction((-1) ** degree, factorial(degree - 1))
    for entry in c:
        value = value * reciprocal_gamma(1 - Fraction(entry, d))
    return value


def dirichlet_quadrature(c: Sequence[int], d: int, precision: int = 64) -> NumericValue:
    """
    Return prod (zeta_d^c_i - 1) times the Dirichlet integral of prod t_i^(c_i/d - 1)
    over the standard simplex, integrated in stick-breaking coordinates.
    """
    _cycle_degree(c, d)
    n = len(c)
    if not 2 <= n <= 4:
        raise MalformedInputError("The quadrature oracle supports 2 <= n <= 4.")
    with working_precision(precision + 20):
        exponents = [mpmath.mpf(entry) / d - 1 for entry in c]

        def integrand(*x):
            # t_k = x_k (1 - x_1) .. (1 - x_(k-1)); the Jacobian is the product of those rests
            rest = mpmath.mpf(1)
            value = mpmath.mpf(1)
            for k, x_k in enumerate(x):
                value *= (x_k * rest) ** exponents[k] * rest
                rest *= 1 - x_k
            return value * rest ** exponents[-1]

        intervals = [[0, 1]] * (n - 1)
        integral, error = mpmath.quad(integrand, *intervals, error=True)
        factor = mpmath.mpc(1)
        for entry in c:
            factor *= mpmath.expjpi(2 * mpmath.mpf(entry) / d) - 1
        return NumericValue(mpmath.mpc(factor * integral), abs(factor) * error, precision)


@dataclass(frozen=True)
class PeriodMember:
    """One summand phi(gamma^c_p; z) of the expansion."""

    p: IntVector
    exponent: Exponent
    series: Optional[TruncatedSeries] = None


@dataclass(frozen=True)
class PeriodExpansion:
    """The expansion prefactor * sum_(p in P_c) phi(gamma^c_p; z) at T(Fer)."""

    c: IntVector
    d: int
    r: int
    prefactor: SymbolicConstant
    members: Tuple[PeriodMember, ...]

    @property
    def ps(self) -> Tuple[IntVector, ...]:
        """Return P_c in enumeration order."""
        return tuple(member.p for member in self.members)


def fermat_weight(A: ExponentMatrix) -> Tuple[int, ...]:
    """Return a weight vector in the chamber of T(Fer)."""
    return (1,) * A.m + (0,) * A.n


def period_expansion(A: ExponentMatrix, c: Sequence[int], w=None, bound=None) -> PeriodExpansion:
    """Return the expansion of the Fermat cycle period of omega_c; series only when w is given."""
    if not A.is_fermat_deformation:
        raise MalformedInputError("The period expansion needs a Fermat deformation.")
    c = tuple(int(entry) for entry in c)
    if len(c) != A.n:
        raise MalformedInputError(f"c needs {A.n} entries.")
    r = _cycle_degree(c, A.d)
    prefactor = two_pi_i(A.n) * Fraction((-1) ** r, factorial(r - 1))
    members = []
    for p in p_set(c, A.generators, A.d):
        exp = fermat_exponent(A, c, p)
        series = truncated_gamma_series(A, exp, w, bound) if w is not None else None
        members.append(PeriodMember(tuple(p), exp, series))
    logger.debug("Period expansion of c=%s: P_c = %s", c, [member.p for member in members])
    return PeriodExpansion(c, A.d, r, prefactor, tuple(members))


def fermat_point_value(expansion: PeriodExpansion) -> SymbolicConstant:
    """Return the expansion at z_1 = .. = z_m = 0 and z_(m+i) = 1."""
    for member in expansion.members:
        if any(member.p):
            continue
        value = expansion.prefactor
        for entry in member.exponent.gamma:
            value = value * reciprocal_gamma(1 + entry)
        return value
    return SymbolicConstant.zero()


@dataclass(frozen=True)
class BasisElement:
    """(2 pi i)^n phi(gamma^c_p; z), one element of the Q(zeta_d)-basis of the period image."""

    p: IntVector
    scale: SymbolicConstant
    exponent: Exponent
    series: Optional[TruncatedSeries] = None


def basis_image(A: ExponentMatrix, c: Sequence[int], w=None, bound=None) -> List[BasisElement]:
    """Return the basis of the image of the period map at T(Fer)."""
    expansion = period_expansion(A, c, w, bound)
    scale = two_pi_i(A.n)
    return [BasisElement(member.p, scale, member.exponent, member.series) for member in expansion.members]


def monodromy_eigenvalues(member: PeriodMember, m: int) -> Tuple[Fraction, ...]:
    """Return the fractional parts of the pure-power entries, the local monodromy data."""
    return tuple(value % 1 for value in member.exponent.gamma[m:])


@dataclass(frozen=True)
class NegishiCertificate:
    """d^p omega_c = q omega_c' at the Fermat point, with the reduction data producing q."""

    c: IntVector
    c_prime: IntVector
    p: IntVector
    steps: IntVector
    sign_factor: Fraction
    step_factors: Tuple[Fraction, ...]

    @property
    def scalar(self) -> Fraction:
        """Return q."""
        value = self.sign_factor
        for factor in self.step_factors:
            value *= factor
        return value


def negishi_shift(A: ExponentMatrix, c: Sequence[int], c_prime: Sequence[int]) -> NegishiCertificate:
    """Find p with c' = c + sum p_i a_i mod d and the scalar chain of the reduction to omega_c'."""
    d, n = A.d, A.n
    c, c_prime = tuple(c), tuple(c_prime)
    if any(not 0 < entry < d for entry in c_prime):
        raise MalformedInputError(f"c' = {c_prime} needs entries strictly between 0 and {d}.")
    r = _cycle_degree(c, d)
    target = tuple(entry % d for entry in c_prime)
    for p in coset_representatives(d, n, A.generators):
        image = h_map(p, A.generators, d, n)
        if tuple((x + y) % d for x, y in zip(c, image)) == target:
            break
    else:
        raise NotEquivalentError(f"{c_prime} is not in the class of {c}.")
    shifted = list(c)
    for p_j, column in zip(p, A.generators):
        for k in range(n):
            shifted[k] += p_j * column[k]
    steps = tuple((x - y) // d for x, y in zip(shifted, c_prime))
    power = r + sum(p)
    sign_factor = Fraction((-1) ** sum(p) * factorial(power - 1), factorial(r - 1))
    factors = []
    for i, count in enumerate(steps):
        for t in range(count, 0, -1):
            power -= 1
            factors.append(Fraction(c_prime[i] + d * (t - 1), power * d))
    return NegishiCertificate(c, c_prime, tuple(p), steps, sign_factor, tuple(factors))
