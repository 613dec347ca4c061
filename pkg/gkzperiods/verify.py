"""The verification harness behind `gkzperiods verify`: exact and numeric cross-checks by suite."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from math import gcd
from typing import Callable, Dict, Iterable, List

import mpmath
import numpy as np

from gkzperiods.constant_ring import (
    DigammaDiff,
    DirichletL,
    SymbolicConstant,
    dirichlet_characters,
    eval_numeric,
    in_ring_report,
    l_value_from_polygamma,
    numerically_equal,
    psi_to_log_L,
    working_precision,
)
from gkzperiods.dwork_continuation import (
    continue_to_dwork,
    dwork_coset_representatives,
    hypergeometric_data,
    mb_eval,
    mb_residue_value,
    mb_series,
    mellin_barnes_spec,
    phi_via_mellin_barnes,
)
from gkzperiods.errors import GkzPeriodsError
from gkzperiods.fermat_periods import (
    dirichlet_quadrature,
    fermat_cycle_value,
    fermat_point_value,
    fermat_weight,
    negishi_shift,
    period_expansion,
)
from gkzperiods.gamma_series import (
    annihilated,
    basis_for_triangulation,
    default_truncation,
    dwork_exponent,
    fermat_exponent,
    truncated_gamma_series,
)
from gkzperiods.lattice_core import (
    coset_representatives,
    exponent_matrix,
    fermat_deformation,
    index_sets,
    normalized_volume,
    p_set,
    subgroup,
)
from gkzperiods.limit_periods import limiting_period_table, make_arc
from gkzperiods.secondary_fan import (
    dwork_triangulation,
    is_regular_triangulation,
    skeleton_membership,
    subdivision_from_weight,
)
from gkzperiods.sst_limit import auto_limit_basis, perturbed_family

logger = logging.getLogger(__name__)

DWORK_C = (1, 2, 1, 1, 1, 1)
FIRST_MONOMIAL = (2, 1, 1, 1, 1, 1)
SECOND_MONOMIAL = (1, 1, 2, 1, 1, 1)
TOY_MONOMIAL = (1, 2)


@dataclass(frozen=True)
class Check:
    """The outcome of one named check."""

    suite: str
    name: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        """Return the check as a JSON-ready mapping."""
        return {"suite": self.suite, "name": self.name, "passed": self.passed, "detail": self.detail}


def dwork_matrix():
    """Return the degree-7 one-monomial deformation in six variables."""
    return fermat_deformation(7, [FIRST_MONOMIAL])


def two_monomial_matrix():
    """Return the degree-7 deformation by two monomials in six variables."""
    return fermat_deformation(7, [FIRST_MONOMIAL, SECOND_MONOMIAL])


def toy_matrix():
    """Return the cubic curve deformation x y^2."""
    return fermat_deformation(3, [TOY_MONOMIAL])


def _close(left, right, tolerance) -> bool:
    scale = max(mpmath.mpf(1), abs(right))
    return abs(left - right) <= tolerance * scale


def _fractions(*values) -> tuple:
    return tuple(Fraction(value) for value in values)


def check_combinatorics(config) -> List[Check]:
    """Index sets, classes, P_c, Dwork exponents and the cancelled hypergeometric parameters."""
    # pylint: disable=unused-argument
    checks = []
    single = dwork_matrix()
    index = index_sets(7, 6, single.generators)
    checks.append(Check("combinatorics", "index set size", len(index.elements) == 6666, str(len(index.elements))))
    checks.append(Check("combinatorics", "one-monomial classes", len(index.classes) == 2401, str(len(index.classes))))
    histogram = index.histogram()
    checks.append(
        Check("combinatorics", "one-monomial histogram", histogram == {2: 1080, 3: 780, 4: 540, 6: 1}, str(histogram))
    )
    members = p_set(DWORK_C, single.generators, 7)
    checks.append(Check("combinatorics", "P_c", members == ((0,), (1,), (2,), (4,)), str(members)))

    double = two_monomial_matrix()
    index = index_sets(7, 6, double.generators)
    histogram = index.histogram()
    checks.append(Check("combinatorics", "two-monomial classes", len(index.classes) == 343, str(len(index.classes))))
    checks.append(
        Check(
            "combinatorics",
            "two-monomial histogram",
            histogram == {15: 48, 16: 72, 20: 108, 21: 72, 26: 42, 30: 1},
            str(histogram),
        )
    )

    h14 = Fraction(1, 14)
    expected = {
        ((0, 0), 0): _fractions(Fraction(-1, 2), 0, 0, Fraction(-3, 14), -h14, -h14, -h14, -h14),
        ((1, 0), 0): _fractions(-4, 0, 1, Fraction(2, 7), *[Fraction(3, 7)] * 4),
        ((0, 0), 1): _fractions(-2, 0, Fraction(3, 7), 0, *[Fraction(1, 7)] * 4),
    }
    for i in range(2, 6):
        expected[((0, 0), i)] = _fractions(-1, 0, Fraction(1, 7), Fraction(-1, 7), 0, 0, 0, 0)
    for (q, i), gamma in expected.items():
        found = dwork_exponent(double, DWORK_C, q, i).gamma
        checks.append(Check("combinatorics", f"exponent q={q} i={i + 1}", found == gamma, str(found)))
    periods = [dwork_coset_representatives(double, DWORK_C, (0, 0), i).period for i in range(6)]
    checks.append(Check("combinatorics", "representative counts", periods == [2, 1, 1, 1, 1, 1], str(periods)))

    data = hypergeometric_data(single, DWORK_C)
    alpha_ok = sorted(data.alpha) == sorted(_fractions(h14, Fraction(1, 7), Fraction(1, 7), Fraction(1, 7)))
    beta_ok = sorted(data.beta) == sorted(_fractions(1, Fraction(3, 7), Fraction(5, 7), Fraction(6, 7)))
    checks.append(Check("combinatorics", "cancelled parameters", alpha_ok and beta_ok, f"{data.alpha} / {data.beta}"))
    return checks


def check_gkz(config) -> List[Check]:
    """Euler and box operators annihilate truncated series; a wrong parameter is detected."""
    # pylint: disable=unused-argument
    checks = []
    instances = [
        ("toy", toy_matrix(), (1, 2)),
        ("one monomial", dwork_matrix(), DWORK_C),
        ("two monomials", two_monomial_matrix(), DWORK_C),
    ]
    for label, A, c in instances:
        weight = fermat_weight(A)
        for p in coset_representatives(A.d, A.n, A.generators)[:3]:
            exp = fermat_exponent(A, c, p)
            bound = default_truncation(A, exp, weight, 5)
            series = truncated_gamma_series(A, exp, weight, bound)
            checks.append(Check("gkz", f"{label} T(Fer) p={p}", annihilated(A, series, c)))
        wrong = (c[0] + 1,) + tuple(c[1:])
        checks.append(Check("gkz", f"{label} wrong parameter rejected", not annihilated(A, series, wrong)))

    A = toy_matrix()
    weight = (-1, 0, 0)
    for exp in basis_for_triangulation(A, dwork_triangulation(A, 0), (1, 2)):
        bound = default_truncation(A, exp, weight, 5)
        series = truncated_gamma_series(A, exp, weight, bound)
        checks.append(Check("gkz", f"toy T(a_1) gamma={exp.gamma}", annihilated(A, series, (1, 2))))
    return checks


def _arcsin_form(zeta):
    half = zeta / 2
    return 2 * mpmath.asin(half) / (zeta * mpmath.sqrt(1 - half**2))


def check_mb(config) -> List[Check]:
    """Series, contour quadrature and residue sums agree with each other and the closed forms."""
    tolerance = mpmath.mpf(config["TOLERANCE"])
    precision = max(int(config["PRECISION"]), 96)
    checks = []
    A = fermat_deformation(2, [(1, 1)])
    closed_forms = {
        0: lambda zeta: mpmath.pi / mpmath.sqrt(1 - zeta**2 / 4),
        1: _arcsin_form,
    }
    with working_precision(precision + 20):
        for p, closed in closed_forms.items():
            spec = mellin_barnes_spec(A, (1, 1), p, precision=precision)
            for radius in (Fraction(3, 10), Fraction(7, 10)):
                zeta = mpmath.mpc(0, mpmath.mpf(radius.numerator) / radius.denominator)
                quadrature = mb_eval(spec, zeta).midpoint
                series = mb_series(spec, zeta).midpoint
                label = f"d=2 p={p} |zeta|={radius}"
                checks.append(Check("mb", f"{label} series", _close(series, quadrature, tolerance)))
                checks.append(Check("mb", f"{label} closed form", _close(closed(zeta), quadrature, tolerance)))
            for radius in (3, 6):
                zeta = mpmath.mpc(0, radius)
                quadrature = mb_eval(spec, zeta).midpoint
                residues = mb_residue_value(spec, zeta, layers=60 if radius == 3 else 30).midpoint
                label = f"d=2 p={p} |zeta|={radius}"
                checks.append(Check("mb", f"{label} residues", _close(residues, quadrature, tolerance)))
                checks.append(Check("mb", f"{label} closed form", _close(closed(zeta), quadrature, tolerance)))

        A = toy_matrix()
        spec = mellin_barnes_spec(A, (1, 2), 0, precision=precision)
        rotation = mpmath.expjpi(mpmath.mpf(1) / 3)
        zeta = rotation / 2
        checks.append(
            Check("mb", "d=3 series", _close(mb_series(spec, zeta).midpoint, mb_eval(spec, zeta).midpoint, tolerance))
        )
        zeta = 4 * rotation
        residues = mb_residue_value(spec, zeta, layers=30).midpoint
        checks.append(Check("mb", "d=3 residues", _close(residues, mb_eval(spec, zeta).midpoint, tolerance)))
    return checks


def _two_paths(A, c, p, radius, terms, precision):
    z = (radius * mpmath.expjpi(-mpmath.mpf(A.d - 1) / A.d), 1, 1)
    continued = continue_to_dwork(A, c, (p,), (-1, 0, 0), terms, precision=precision)
    direct = phi_via_mellin_barnes(A, c, p, z, precision=max(precision, 96)).midpoint
    return continued.evaluate(z, precision), direct


def check_connection(config) -> List[Check]:
    """The continued expansion agrees with the Mellin-Barnes evaluation beyond T(Fer)."""
    precision = max(int(config["PRECISION"]), 96)
    tolerance = mpmath.mpf(10) ** -8
    checks = []
    A = toy_matrix()
    for c, label in (((Fraction(3, 7), Fraction(5, 11)), "generic"), ((1, 2), "resonant")):
        for p in (0, 1):
            continued, direct = _two_paths(A, c, p, 8, 24, precision)
            checks.append(
                Check(
                    "connection",
                    f"{label} c={tuple(str(x) for x in c)} p={p}",
                    _close(continued, direct, tolerance),
                    mpmath.nstr(abs(continued - direct), 5),
                )
            )
    return checks


def check_fermat(config) -> List[Check]:
    """Fermat cycle values against the Dirichlet quadrature and the reduction scalar."""
    # pylint: disable=unused-argument
    checks = []
    tolerance = mpmath.mpf(10) ** -8
    for d, c in ((3, (1, 2)), (4, (1, 3)), (4, (1, 1, 2))):
        closed = eval_numeric(fermat_cycle_value(c, d), 64)
        quadrature = dirichlet_quadrature(c, d, 64)
        checks.append(
            Check("fermat", f"d={d} c={c} quadrature", _close(closed.midpoint, quadrature.midpoint, tolerance))
        )
    with working_precision(160):
        value = eval_numeric(fermat_cycle_value((1, 2), 3), 128).midpoint
        expected = 2 * mpmath.sqrt(3) * mpmath.pi
        checks.append(Check("fermat", "value 2 sqrt(3) pi", _close(value, expected, mpmath.mpf(10) ** -30)))
    scalar = negishi_shift(toy_matrix(), (1, 2), (2, 1)).scalar
    checks.append(Check("fermat", "reduction scalar", scalar == Fraction(-1, 3), str(scalar)))
    return checks


def _random_monomial(rng, d: int, n: int):
    cuts = sorted(int(x) for x in rng.integers(0, d + 1, size=n - 1))
    bounds = [0] + cuts + [d]
    return tuple(bounds[k + 1] - bounds[k] for k in range(n))


def check_volume(config) -> List[Check]:
    """Normalized volume equals the subgroup order on random Fermat deformations."""
    rng = np.random.Generator(np.random.Philox(int(config["SEED"])))
    checks = []
    while len(checks) < 10:
        n = int(rng.integers(2, 5))
        d = int(rng.integers(2, 7))
        m = int(rng.integers(1, 3))
        monomials = set()
        while len(monomials) < m:
            monomial = _random_monomial(rng, d, n)
            if sum(1 for entry in monomial if entry) > 1:
                monomials.add(monomial)
        A = fermat_deformation(d, sorted(monomials))
        order = len(subgroup(d, n, A.generators))
        try:
            volume = normalized_volume(A)
        except GkzPeriodsError as error:
            checks.append(Check("volume", f"d={d} {sorted(monomials)}", False, str(error)))
            continue
        checks.append(Check("volume", f"d={d} {sorted(monomials)}", volume == order, f"{volume} vs {order}"))
    return checks


def check_skeleton(config) -> List[Check]:
    """Skeleton membership is the failure of S(w) to be a triangulation."""
    rng = np.random.Generator(np.random.Philox(int(config["SEED"]) + 1))
    matrices = {
        "toy": toy_matrix(),
        "quartic": fermat_deformation(4, [(1, 1, 2)]),
        "segment": exponent_matrix([(1, 0), (1, 1), (1, 2), (1, 3)]),
    }
    checks = []
    for label, A in matrices.items():
        mismatches = 0
        for _ in range(200):
            numerators, denominators = rng.integers(-3, 4, size=A.N), rng.integers(1, 3, size=A.N)
            weight = tuple(Fraction(int(x), int(y)) for x, y in zip(numerators, denominators))
            regular = is_regular_triangulation(subdivision_from_weight(A, weight))
            if skeleton_membership(A, weight) == regular:
                mismatches += 1
        checks.append(Check("skeleton", label, mismatches == 0, f"{mismatches} mismatches"))
    return checks


def check_polygamma(config) -> List[Check]:
    """Digamma values through logs and cotangents; L-values through trigamma sums."""
    # pylint: disable=unused-argument
    checks = []
    for q in (3, 4, 5, 7, 14):
        for p in range(1, q):
            if gcd(p, q) != 1:
                continue
            rewrite = psi_to_log_L(DigammaDiff(Fraction(p, q)), 128, mpmath.mpf(10) ** -25)
            checks.append(Check("polygamma", f"digamma {p}/{q}", rewrite.agrees, mpmath.nstr(rewrite.difference, 5)))
    for q in (3, 5, 7):
        for index, character in enumerate(dirichlet_characters(q)):
            if character.is_principal():
                continue
            expected = SymbolicConstant.generator(DirichletL(2, q, index))
            found = l_value_from_polygamma(2, character)
            agrees = numerically_equal(found, expected, 128, mpmath.mpf(10) ** -20)
            checks.append(Check("polygamma", f"L(2) mod {q} character {index}", agrees))
    return checks


def check_sst(config) -> List[Check]:
    """Independent limits of the coincident two-monomial family and their ring membership."""
    precision = int(config["PRECISION"])
    A = two_monomial_matrix()
    weight = (0, 100) + (10,) * 6
    members = [dwork_exponent(A, DWORK_C, (0, 0), i) for i in range(2, 6)]
    family = perturbed_family(A, members)
    bound = max(default_truncation(A, exp, weight, 3) for exp in members)
    basis = auto_limit_basis(A, family, weight, bound, precision=precision)
    degrees = sorted({degree for limit in basis.limits for degree in limit.log_degrees()})
    checks = [
        Check("sst", "independent limits", len(basis.limits) == family.size, str(len(basis.limits))),
        Check("sst", "log degrees", degrees == [0, 1, 2], str(degrees)),
    ]
    failures = [
        value
        for limit in basis.limits
        for value in limit.terms.values()
        if not in_ring_report(value, 14).passed
    ]
    checks.append(Check("sst", "ring membership", not failures, f"{len(failures)} coefficients outside"))
    return checks


def check_limits(config) -> List[Check]:
    """The toy end-to-end run: two rows, the Fermat constant at t^0, certified coefficients."""
    A = toy_matrix()
    table = limiting_period_table(A, make_arc((1, 0, 0)), [(1, 2)], precision=int(config["PRECISION"]))
    checks = [Check("limits", "row count", len(table.rows) == 2, str(len(table.rows)))]
    expected = fermat_point_value(period_expansion(A, (1, 2)))
    found = table.rows[0].window.get(Fraction(0), SymbolicConstant.zero())
    checks.append(Check("limits", "Fermat constant at t^0", numerically_equal(found, expected), str(found)))
    checks.append(Check("limits", "ring reports", all(row.passed for row in table.rows)))
    checks.append(Check("limits", "certificates", all(row.certified for row in table.rows)))
    return checks


SUITES: Dict[str, Callable[[dict], List[Check]]] = {
    "combinatorics": check_combinatorics,
    "gkz": check_gkz,
    "mb": check_mb,
    "connection": check_connection,
    "fermat": check_fermat,
    "volume": check_volume,
    "skeleton": check_skeleton,
    "polygamma": check_polygamma,
    "sst": check_sst,
    "limits": check_limits,
}


def _run_suite(name: str, config, bits: int) -> List[Check]:
    logger.info("Running suite %s", name)
    try:
        with working_precision(bits):
            return SUITES[name](config)
    except GkzPeriodsError as error:
        return [Check(name, "suite", False, f"{error.code}: {error}")]


def run_suites(names: Iterable[str], config) -> List[Check]:
    """Run the named suites on THREADS workers; an exception inside a suite becomes a failed check.

    Checks are returned in the order of the names whatever the schedule.
    """
    names = list(names)
    run = partial(_run_suite, config=config, bits=mpmath.mp.prec)
    threads = int(config.get("THREADS", 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            batches = list(executor.map(run, names))
    else:
        batches = [run(name) for name in names]
    return [check for batch in batches for check in batch]
