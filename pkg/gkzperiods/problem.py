"""Functions to read and validate problem files and to encode results as JSON."""
import dataclasses
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from gkzperiods.constant_ring import (
    GENERATOR_KINDS,
    Cyclotomic,
    RingReport,
    SymbolicConstant,
    in_ring_report,
)
from gkzperiods.errors import MalformedInputError
from gkzperiods.gamma_series import LaurentLogSeries
from gkzperiods.lattice_core import ExponentMatrix, fermat_deformation
from gkzperiods.limit_periods import (
    DegenerationArc,
    LimitingPeriodTable,
    LimitRow,
    PuiseuxLogSeries,
    make_arc,
)

MAX_FORMAT = 1


class ProblemFileError(MalformedInputError):
    """The problem file has invalid or missing data."""


@dataclass
class Problem:
    """A validated problem description."""

    n: int
    d: int
    monomials: List[Tuple[int, ...]]
    classes: List[Tuple[int, ...]] = field(default_factory=list)
    arc: Optional[DegenerationArc] = None
    weight: Optional[Tuple[Fraction, ...]] = None
    options: Dict[str, object] = field(default_factory=dict)
    name: str = ""

    @property
    def matrix(self) -> ExponentMatrix:
        """Return the exponent matrix of the Fermat deformation."""
        return fermat_deformation(self.d, self.monomials)


def parse_rational(value) -> Fraction:
    """Parse an integer, a "p/q" string or a {"num", "den"} pair into a Fraction."""
    try:
        if isinstance(value, dict):
            return Fraction(int(value["num"]), int(value["den"]))
        if isinstance(value, bool):
            raise ValueError(value)
        if isinstance(value, (int, str)):
            return Fraction(value)
    except (KeyError, ValueError, ZeroDivisionError) as error:
        raise ProblemFileError(f"Invalid rational number: {value!r}") from error
    raise ProblemFileError(f"Invalid rational number: {value!r}")


def encode_rational(value) -> Dict[str, str]:
    """Return an exact rational as a {"num", "den"} pair of strings."""
    value = Fraction(value)
    return {"num": str(value.numerator), "den": str(value.denominator)}


def _encode_field(value):
    if isinstance(value, Fraction):
        return encode_rational(value)
    return value


def encode_constant(constant: SymbolicConstant) -> dict:
    """Return a constant as a sum of monomial trees with kind-tagged generators."""
    terms = []
    for monomial, coefficient in constant.terms.items():
        factors = []
        for generator, power in monomial:
            node = {"kind": generator.kind, "power": power}
            for item in dataclasses.fields(generator):
                node[item.name] = _encode_field(getattr(generator, item.name))
            factors.append(node)
        terms.append(
            {
                "coefficient": {
                    "level": coefficient.level,
                    "coefficients": [encode_rational(c) for c in coefficient.coefficients],
                },
                "factors": factors,
            }
        )
    return {"kind": "sum", "terms": terms}


def decode_constant(data: dict) -> SymbolicConstant:
    """Rebuild a constant from its encoded tree."""
    if not isinstance(data, dict) or data.get("kind") != "sum":
        raise ProblemFileError(f"Invalid constant: {data!r}")
    total = SymbolicConstant.zero()
    for term in data.get("terms", []):
        coefficient = term["coefficient"]
        value = SymbolicConstant.scalar(
            Cyclotomic(
                int(coefficient["level"]),
                [parse_rational(c) for c in coefficient["coefficients"]],
            )
        )
        for node in term["factors"]:
            kind = node["kind"]
            if kind not in GENERATOR_KINDS:
                raise ProblemFileError(f"Unknown generator kind: {kind}")
            cls = GENERATOR_KINDS[kind]
            arguments = {}
            for item in dataclasses.fields(cls):
                raw = node[item.name]
                arguments[item.name] = parse_rational(raw) if item.type is Fraction else raw
            value = value * SymbolicConstant.generator(cls(**arguments), int(node["power"]))
        total = total + value
    return total


def encode_series(series: LaurentLogSeries) -> dict:
    """Return a truncated Gamma series as exponent data plus a sorted term list."""
    return {
        "gamma": [encode_rational(x) for x in series.gamma],
        "weight": [encode_rational(x) for x in series.weight],
        "bound": encode_rational(series.bound),
        "terms": [
            {"u": list(u), "log": list(ell), "coefficient": encode_constant(value)}
            for (u, ell), value in sorted(series.terms.items())
        ],
    }


def encode_expansion(expansion: PuiseuxLogSeries) -> dict:
    """Return a pulled-back expansion as a sorted term list."""
    return {
        "order": encode_rational(expansion.order),
        "terms": [
            {"alpha": encode_rational(alpha), "log": ell, "coefficient": encode_constant(value)}
            for (alpha, ell), value in sorted(expansion.terms.items())
        ],
    }


def decode_expansion(data: dict) -> PuiseuxLogSeries:
    """Rebuild a pulled-back expansion."""
    terms = {
        (parse_rational(term["alpha"]), int(term["log"])): decode_constant(term["coefficient"])
        for term in data["terms"]
    }
    return PuiseuxLogSeries(parse_rational(data["order"]), terms)


def _encode_report(report: RingReport) -> dict:
    return {
        "M": report.M,
        "passed": report.passed,
        "reasons": sorted({reason for verdict in report.verdicts for reason in verdict.reasons}),
    }


def encode_table(table: LimitingPeriodTable) -> dict:
    """Return the limiting-period table as the result document."""
    rows = []
    for row in table.rows:
        rows.append(
            {
                "id": row.row_id,
                "c": list(row.c),
                "p": list(row.p),
                "leading_exponent": (
                    None if row.leading_exponent is None else encode_rational(row.leading_exponent)
                ),
                "leading": [
                    {"log": ell, "coefficient": encode_constant(value)}
                    for ell, value in sorted(row.leading.items())
                ],
                "window": [
                    {
                        "alpha": encode_rational(alpha),
                        "coefficient": encode_constant(value),
                        "ring": _encode_report(row.reports[alpha]),
                    }
                    for alpha, value in sorted(row.window.items())
                ],
                "certified": row.certified,
                "expansion": encode_expansion(row.expansion),
            }
        )
    return {
        "format": MAX_FORMAT,
        "weight": [encode_rational(x) for x in table.weight],
        "triangulation": table.triangulation,
        "pivot": table.pivot,
        "N_A": table.N_A,
        "note": table.note,
        "rows": rows,
    }


def decode_table(data: dict) -> LimitingPeriodTable:
    """Rebuild a table from its result document; ring reports are recomputed."""
    n_a = int(data["N_A"])
    rows = []
    for row in data["rows"]:
        lead = row["leading_exponent"]
        window = {
            parse_rational(entry["alpha"]): decode_constant(entry["coefficient"])
            for entry in row["window"]
        }
        rows.append(
            LimitRow(
                tuple(row["c"]),
                tuple(row["p"]),
                None if lead is None else parse_rational(lead),
                {int(entry["log"]): decode_constant(entry["coefficient"]) for entry in row["leading"]},
                window,
                decode_expansion(row["expansion"]),
                {alpha: in_ring_report(value, n_a) for alpha, value in window.items()},
                row["certified"],
            )
        )
    return LimitingPeriodTable(
        tuple(parse_rational(x) for x in data["weight"]),
        data["triangulation"],
        data["pivot"],
        n_a,
        rows,
        data["note"],
    )


def dump_json(document) -> str:
    """Return the canonical byte-stable JSON text of a document."""
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def _require_int_list(values, label: str) -> Tuple[int, ...]:
    if not isinstance(values, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in values):
        raise ProblemFileError(f"{label} must be a list of integers.")
    return tuple(values)


def validate_problem(data):
    """Validate a problem file for required fields and correct version."""
    if not isinstance(data, dict):
        raise ProblemFileError("A problem file must contain a JSON object.")
    required_fields = ["format", "n", "d", "monomials"]

    for name in required_fields:
        if name not in data:
            raise ProblemFileError(f"Missing field in problem file: {name}")

    if data["format"] > MAX_FORMAT:
        raise ProblemFileError("This problem file requires a newer version of gkzperiods.")

    n, d = data["n"], data["d"]
    if not isinstance(n, int) or not isinstance(d, int) or n < 1 or d < 2:
        raise ProblemFileError("n must be positive and d at least 2.")
    if not isinstance(data["monomials"], list):
        raise ProblemFileError("monomials must be a list.")
    for monomial in data["monomials"]:
        monomial = _require_int_list(monomial, "Every monomial")
        if len(monomial) != n or sum(monomial) != d or min(monomial) < 0:
            raise ProblemFileError(f"Monomial {list(monomial)} is not a degree-{d} exponent in {n} variables.")

    for c in data.get("classes", []):
        if len(_require_int_list(c, "Every class representative")) != n:
            raise ProblemFileError(f"Class representative {c} needs {n} entries.")

    if "arc" in data:
        arc = data["arc"]
        size = len(data["monomials"]) + n
        if not isinstance(arc, list) or len(arc) != size:
            raise ProblemFileError(f"The arc needs {size} coordinates.")
        for entry in arc:
            if "order" not in entry or "initial" not in entry:
                raise ProblemFileError("Every arc coordinate needs an order and an initial value.")
            initial = _parse_initial(entry["initial"])
            if not isinstance(initial, str) and initial == 0:
                raise ProblemFileError("Initial coefficients of an arc must be nonzero.")


def _parse_initial(value):
    if isinstance(value, str) and value and value[0].isalpha():
        return value
    return parse_rational(value)


def problem_from_data(data) -> Problem:
    """Validate decoded JSON data and build the problem."""
    validate_problem(data)
    arc = None
    if "arc" in data:
        entries = data["arc"]
        arc = make_arc(
            [entry["order"] for entry in entries],
            [_parse_initial(entry["initial"]) for entry in entries],
            [[parse_rational(x) for x in entry.get("taylor", [])] for entry in entries]
            if any(entry.get("taylor") for entry in entries)
            else None,
            {name: parse_rational(value) for name, value in data.get("symbols", {}).items()},
        )
    weight = tuple(parse_rational(x) for x in data["weight"]) if "weight" in data else None
    return Problem(
        data["n"],
        data["d"],
        [tuple(monomial) for monomial in data["monomials"]],
        [tuple(c) for c in data.get("classes", [])],
        arc,
        weight,
        dict(data.get("options", {})),
        data.get("name", ""),
    )


def read_problem(stream) -> Problem:
    """Read a problem from an open text stream."""
    try:
        data = json.load(stream)
    except json.JSONDecodeError as error:
        raise ProblemFileError(f"Invalid JSON in problem file: {error}") from error
    return problem_from_data(data)


def read_problem_from_path(problem_path) -> Problem:
    """Read a problem file from the given path and validate its data."""
    with open(problem_path, "r", encoding="utf-8") as file:
        return read_problem(file)
