"""Regular subdivisions, triangulations and the skeleton of the secondary fan."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence, Tuple

import numpy as np
from sympy import Matrix

from gkzperiods.errors import InternalError, MalformedInputError, UnsupportedTriangulationError
from gkzperiods.lattice_core import (
    ExponentMatrix,
    RationalVector,
    simplex_inverse,
    solve_rational,
)

logger = logging.getLogger(__name__)

Cell = Tuple[int, ...]
MAX_EXTENSION_ATTEMPTS = 64
PLACING_BASES = (2, 4, 16, 256, 65536, 2**32)


@dataclass(frozen=True)
class Subdivision:
    """The regular subdivision S(w); cells hold 0-based column indices."""

    maximal_cells: Tuple[Cell, ...]
    normals: Tuple[RationalVector, ...]
    witness: RationalVector
    n: int

    @property
    def cells(self) -> Tuple[Cell, ...]:
        """Return the maximal cells and the nonempty faces two of them share."""
        found = set(self.maximal_cells)
        for left, right in combinations(self.maximal_cells, 2):
            shared = tuple(sorted(set(left) & set(right)))
            if shared:
                found.add(shared)
        return tuple(sorted(found, key=lambda cell: (-len(cell), cell)))

    def is_triangulation(self) -> bool:
        """Return True if every maximal cell is a simplex."""
        return all(len(cell) == self.n for cell in self.maximal_cells)


@dataclass(frozen=True)
class Triangulation(Subdivision):
    """A regular subdivision whose maximal cells are all simplices."""

    def __post_init__(self):
        if not self.is_triangulation():
            raise MalformedInputError("A triangulation needs simplicial maximal cells.")


@dataclass(frozen=True)
class GaleConeReport:
    """Where pi_A(w) sits relative to the cones spanned by Gale vectors."""

    projection: RationalVector
    in_skeleton: bool
    cone: Optional[Cell]
    gale_vectors: Tuple[Tuple[int, ...], ...]


def _as_weight(A: ExponentMatrix, w: Sequence) -> RationalVector:
    weight = tuple(Fraction(value) for value in w)
    if len(weight) != A.N:
        raise MalformedInputError(f"Weight vector needs {A.N} entries, got {len(weight)}.")
    return weight


def _dot(normal: Sequence[Fraction], column: Sequence[int]) -> Fraction:
    return sum((x * a for x, a in zip(normal, column)), Fraction(0))


def subdivision_from_weight(A: ExponentMatrix, w: Sequence) -> Subdivision:
    """Return S(w): the lower faces of the lifted configuration (a_j, w_j)."""
    weight = _as_weight(A, w)
    found = {}
    for simplex in combinations(range(A.N), A.n):
        if simplex_inverse(A.column_submatrix(simplex)) is None:
            continue
        normal = solve_rational(
            A.column_submatrix(simplex), [weight[j] for j in simplex]
        )
        heights = [_dot(normal, column) for column in A.columns]
        if any(h > wj for h, wj in zip(heights, weight)):
            continue
        cell = tuple(j for j in range(A.N) if heights[j] == weight[j])
        found.setdefault(cell, normal)
    cells = tuple(sorted(found))
    logger.debug("S(w) for w=%s has %d maximal cells", weight, len(cells))
    return Subdivision(cells, tuple(found[cell] for cell in cells), weight, A.n)


def normal_vectors(subdivision: Subdivision) -> Tuple[RationalVector, ...]:
    """Return the witness normal vector of every maximal cell."""
    return subdivision.normals


def verify_witnesses(A: ExponentMatrix, subdivision: Subdivision) -> bool:
    """Re-check n.a_j = w_j on every cell and n.a_j < w_j off it."""
    for cell, normal in zip(subdivision.maximal_cells, subdivision.normals):
        for j, column in enumerate(A.columns):
            height = _dot(normal, column)
            if j in cell and height != subdivision.witness[j]:
                return False
            if j not in cell and height >= subdivision.witness[j]:
                return False
    return True


def is_regular_triangulation(subdivision: Subdivision) -> bool:
    """Return True if every maximal cell of the regular subdivision is a simplex."""
    return subdivision.is_triangulation()


def as_triangulation(subdivision: Subdivision) -> Triangulation:
    """Return the subdivision as Triangulation or fail for a skeleton weight."""
    if not subdivision.is_triangulation():
        raise UnsupportedTriangulationError(
            f"S(w) is not a triangulation: cells {subdivision.maximal_cells}"
        )
    return Triangulation(
        subdivision.maximal_cells, subdivision.normals, subdivision.witness, subdivision.n
    )


def _cone_coefficients(
    vectors: Sequence[Sequence[int]], target: Sequence[Fraction]
) -> Optional[RationalVector]:
    """Solve target = sum_t l_t vectors[t] for linearly independent vectors."""
    rank = len(target)
    if not vectors:
        return () if not any(target) else None
    coordinates = [tuple(vector[k] for vector in vectors) for k in range(rank)]
    solution = solve_rational(coordinates, target)
    if solution is None:
        return None
    for k in range(rank):
        if _dot(solution, coordinates[k]) != target[k]:
            return None
    return solution


def _independent(vectors: Sequence[Sequence[int]]) -> bool:
    if not vectors:
        return True
    return Matrix([list(vector) for vector in vectors]).rank() == len(vectors)


def gale_cone_report(A: ExponentMatrix, w: Sequence) -> GaleConeReport:
    """Find a cone of at most N-n-1 Gale vectors containing pi_A(w), if any."""
    weight = _as_weight(A, w)
    gale = A.gale.vectors
    projection = A.gale.project(weight)
    rank = A.N - A.n
    for size in range(0, rank):
        for subset in combinations(range(A.N), size):
            vectors = [gale[j] for j in subset]
            if not _independent(vectors):
                continue
            coefficients = _cone_coefficients(vectors, projection)
            if coefficients is not None and all(l >= 0 for l in coefficients):
                return GaleConeReport(projection, True, subset, tuple(vectors))
    return GaleConeReport(projection, False, None, ())


def skeleton_membership(A: ExponentMatrix, w: Sequence) -> bool:
    """Return True if pi_A(w) lies on a cone of at most N-n-1 Gale vectors."""
    return gale_cone_report(A, w).in_skeleton


def chamber_contains(A: ExponentMatrix, triangulation: Subdivision, w: Sequence) -> bool:
    """Return True if pi_A(w) lies in the Gale cone of every complement of a maximal simplex."""
    projection = A.gale.project(_as_weight(A, w))
    for cell in triangulation.maximal_cells:
        complement = [A.gale.vectors[j] for j in range(A.N) if j not in cell]
        coefficients = _cone_coefficients(complement, projection)
        if coefficients is None or any(l < 0 for l in coefficients):
            return False
    return True


def fermat_triangulation(A: ExponentMatrix) -> Tuple[Cell, ...]:
    """Return the maximal cells of T(Fer): the single simplex of the pure powers."""
    _require_fermat(A)
    return (tuple(range(A.m, A.N)),)


def dwork_triangulation(A: ExponentMatrix, pivot: int = 0) -> Tuple[Cell, ...]:
    """Return the maximal cells of T(a_pivot): pivot plus all pure powers but one."""
    _require_fermat(A)
    if not 0 <= pivot < A.m:
        raise MalformedInputError(f"Pivot {pivot} is not a deformation monomial.")
    column = A.columns[pivot]
    cells = []
    for j in range(A.n):
        if column[j] != 0:
            cells.append(tuple(sorted((pivot,) + tuple(A.m + k for k in range(A.n) if k != j))))
    return tuple(sorted(cells))


def classify_triangulation(A: ExponentMatrix, subdivision: Subdivision) -> Tuple[str, Optional[int]]:
    """Return ("fermat", None) or ("dwork", pivot) for the supported triangulations."""
    cells = tuple(sorted(subdivision.maximal_cells))
    if cells == fermat_triangulation(A):
        return "fermat", None
    for pivot in range(A.m):
        if cells == dwork_triangulation(A, pivot):
            return "dwork", pivot
    raise UnsupportedTriangulationError(
        f"Triangulation {cells} is neither T(Fer) nor T(a_i); longer chains are not supported."
    )


def _require_fermat(A: ExponentMatrix):
    if not A.is_fermat_deformation:
        raise MalformedInputError("The exponent matrix is not a Fermat deformation.")


def is_dwork_perturbation(A: ExponentMatrix, w: Sequence, pivot: int = 0) -> bool:
    """Check the two families of strict inequalities making S(w) equal to T(a_pivot)."""
    _require_fermat(A)
    if A.m < 1:
        raise MalformedInputError("A Dwork perturbation needs at least one deformation monomial.")
    weight = _as_weight(A, w)
    d, m, n = A.d, A.m, A.n
    a = A.columns
    tail = weight[m:]
    if not weight[pivot] * d < sum(tail[k] * a[pivot][k] for k in range(n)):
        return False
    for ell in range(m):
        if ell == pivot:
            continue
        for j in range(n):
            if a[pivot][j] == 0:
                continue
            left = (a[ell][j] * weight[pivot] - a[pivot][j] * weight[ell]) * d
            right = sum(
                tail[k] * (a[ell][j] * a[pivot][k] - a[pivot][j] * a[ell][k]) for k in range(n)
            )
            if not left < right:
                return False
    return True


def extend_weight(
    A: ExponentMatrix, w: Sequence, seed: int = 0, attempts: int = MAX_EXTENSION_ATTEMPTS
) -> RationalVector:
    """Append generic large weights for the pure powers until S(w') is a triangulation."""
    _require_fermat(A)
    head = tuple(Fraction(value) for value in w)
    if len(head) != A.m:
        raise MalformedInputError(f"Expected {A.m} weights for the deformation monomials.")
    entropy = [seed] + [abs(value.numerator) for value in head] + [value.denominator for value in head]
    generator = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
    magnitude = 1 + max((abs(value) for value in head), default=Fraction(0))
    for attempt in range(attempts):
        draws = generator.integers(1, 2 ** (16 + attempt // 4), size=A.n)
        scale = magnitude * 2**attempt
        candidate = head + tuple(scale + Fraction(int(x), 2**16) for x in draws)
        subdivision = subdivision_from_weight(A, candidate)
        if subdivision.is_triangulation():
            logger.debug("Weight extension succeeded after %d attempts", attempt + 1)
            return candidate
        logger.debug("Weight extension attempt %d gave %s", attempt + 1, subdivision.maximal_cells)
    raise InternalError(f"No triangulating extension of {head} after {attempts} attempts.")


def placing_triangulation(A: ExponentMatrix) -> Subdivision:
    """Return the triangulation lifting column j to height K^j for growing K."""
    for base in PLACING_BASES:
        subdivision = subdivision_from_weight(A, [Fraction(base) ** j for j in range(A.N)])
        if subdivision.is_triangulation():
            return subdivision
    raise InternalError("Placing heights did not produce a triangulation.")
