"""Exact lattice arithmetic for exponent matrices: kernels, Gale duals, volumes and index sets."""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations, product
from math import gcd, lcm
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import Matrix, ZZ
try:
    from sympy.core.intfunc import igcdex
except ImportError:  # sympy < 1.13
    from sympy.core.numbers import igcdex
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_form

from gkzperiods.errors import MalformedInputError

logger = logging.getLogger(__name__)

IntVector = Tuple[int, ...]
RationalVector = Tuple[Fraction, ...]


@dataclass(frozen=True)
class ExponentMatrix:
    """The integer matrix A given by its columns a_1..a_N."""

    columns: Tuple[IntVector, ...]
    d: Optional[int] = None
    is_fermat_deformation: bool = False

    @property
    def n(self) -> int:
        """Return the number of rows."""
        return len(self.columns[0])

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Return the number of columns."""
        return len(self.columns)

    @property
    def m(self) -> int:
        """Return the number of deformation monomials (columns before d*e_1..d*e_n)."""
        return self.N - self.n if self.is_fermat_deformation else self.N

    @property
    def generators(self) -> Tuple[IntVector, ...]:
        """Return the deformation monomials a_1..a_m."""
        return self.columns[: self.m]

    @property
    def rows(self) -> Tuple[IntVector, ...]:
        """Return the rows of A."""
        return tuple(zip(*self.columns))

    def matrix(self) -> Matrix:
        """Return A as a sympy matrix."""
        return Matrix(self.rows)

    def column_submatrix(self, indices: Sequence[int]) -> Tuple[IntVector, ...]:
        """Return the columns with the given (0-based) indices."""
        return tuple(self.columns[i] for i in indices)

    @cached_property
    def kernel(self) -> "KernelLattice":
        """Return the canonical kernel lattice of A."""
        return kernel_lattice(self)

    @cached_property
    def gale(self) -> "GaleDual":
        """Return the Gale dual attached to the canonical kernel basis."""
        return gale_dual(self, self.kernel)

    @cached_property
    def dual_vector(self) -> RationalVector:
        """Return a rational row vector v with v.a_j = 1 for every column."""
        if self.d is not None:
            return tuple(Fraction(1, self.d) for _ in range(self.n))
        solution = solve_rational(self.columns, [Fraction(1)] * self.N)
        if solution is None:
            raise MalformedInputError("The exponent matrix is not homogeneous.")
        return solution


def exponent_matrix(columns: Sequence[Sequence[int]]) -> ExponentMatrix:
    """Build and validate an exponent matrix from its columns."""
    columns = tuple(tuple(int(entry) for entry in column) for column in columns)
    if not columns or not columns[0]:
        raise MalformedInputError("The exponent matrix has no columns.")
    n = len(columns[0])
    if any(len(column) != n for column in columns):
        raise MalformedInputError("All columns of the exponent matrix need length n.")
    if Matrix(list(zip(*columns))).rank() != n:
        raise MalformedInputError(f"The exponent matrix does not have rank {n}.")
    sums = {sum(column) for column in columns}
    d = sums.pop() if len(sums) == 1 else None
    if d is not None and d <= 0:
        d = None
    fermat = (
        d is not None
        and len(columns) >= n
        and columns[len(columns) - n :]
        == tuple(tuple(d if i == j else 0 for i in range(n)) for j in range(n))
    )
    matrix = ExponentMatrix(columns, d, fermat)
    if d is None:
        # raises for non-homogeneous input
        _ = matrix.dual_vector
    return matrix


def fermat_deformation(d: int, monomials: Sequence[Sequence[int]]) -> ExponentMatrix:
    """Return the matrix [a_1 .. a_m | d*e_1 .. d*e_n] of a Fermat deformation."""
    if d < 2:
        raise MalformedInputError("The degree d needs to be at least 2.")
    if not monomials:
        raise MalformedInputError("A Fermat deformation needs the dimension n.")
    n = len(monomials[0])
    for monomial in monomials:
        if len(monomial) != n or any(entry < 0 for entry in monomial):
            raise MalformedInputError(f"Invalid monomial: {tuple(monomial)}")
        if sum(monomial) != d:
            raise MalformedInputError(f"Monomial {tuple(monomial)} does not have degree {d}.")
    return _fermat(d, n, tuple(tuple(int(e) for e in a) for a in monomials))


def pure_fermat(d: int, n: int) -> ExponentMatrix:
    """Return the matrix d*Identity of the Fermat hypersurface."""
    return _fermat(d, n, ())


def _fermat(d: int, n: int, monomials: Tuple[IntVector, ...]) -> ExponentMatrix:
    pure = tuple(tuple(d if i == j else 0 for i in range(n)) for j in range(n))
    columns = monomials + pure
    if Matrix(list(zip(*columns))).rank() != n:
        raise MalformedInputError(f"The exponent matrix does not have rank {n}.")
    return ExponentMatrix(columns, d, True)


@dataclass(frozen=True)
class KernelLattice:
    """A primitive basis u_1..u_{N-n} of ker_Z(A)."""

    basis: Tuple[IntVector, ...]

    @property
    def rank(self) -> int:
        """Return N - n."""
        return len(self.basis)

    def vector(self, coordinates: Sequence[int]) -> IntVector:
        """Return the lattice vector with the given coordinates in the basis."""
        length = len(self.basis[0]) if self.basis else 0
        return tuple(
            sum(k * u[i] for k, u in zip(coordinates, self.basis)) for i in range(length)
        )


@dataclass(frozen=True)
class GaleDual:
    """Gale vectors g_i = pi_A(e_i*) and a rational dual section of the kernel basis."""

    vectors: Tuple[IntVector, ...]
    section: Tuple[RationalVector, ...] = field(default=())

    def project(self, weight: Sequence[Fraction]) -> RationalVector:
        """Return pi_A(w) = sum_i w_i g_i in the dual kernel coordinates."""
        if not self.vectors:
            return ()
        rank = len(self.vectors[0])
        return tuple(
            sum((Fraction(w) * g[j] for w, g in zip(weight, self.vectors)), Fraction(0))
            for j in range(rank)
        )


@dataclass(frozen=True)
class CharacterIndex:
    """The index set I, its classes I_c and one representative per class."""

    d: int
    n: int
    elements: Tuple[IntVector, ...]
    classes: Tuple[Tuple[IntVector, ...], ...]

    @property
    def representatives(self) -> Tuple[IntVector, ...]:
        """Return the smallest element of every class."""
        return tuple(members[0] for members in self.classes)

    def class_of(self, c: Sequence[int]) -> Tuple[IntVector, ...]:
        """Return the class containing c."""
        c = tuple(c)
        for members in self.classes:
            if c in members:
                return members
        raise MalformedInputError(f"{c} is not an element of I.")

    def histogram(self) -> Dict[int, int]:
        """Return a mapping class size -> number of classes."""
        sizes: Dict[int, int] = {}
        for members in self.classes:
            sizes[len(members)] = sizes.get(len(members), 0) + 1
        return dict(sorted(sizes.items()))


def solve_rational(
    columns: Sequence[Sequence[int]], rhs: Sequence[Fraction]
) -> Optional[RationalVector]:
    """Solve x . columns[j] = rhs[j] for a rational row vector x (None if unsolvable)."""
    matrix = Matrix([list(column) for column in columns])
    target = Matrix([Fraction(value) for value in rhs])
    try:
        solution, parameters = matrix.gauss_jordan_solve(target)
    except ValueError:
        return None
    if parameters.shape[0]:
        solution = solution.subs({symbol: 0 for symbol in parameters})
    return tuple(Fraction(int(value.p), int(value.q)) for value in solution)


@lru_cache(maxsize=None)
def simplex_inverse(
    columns: Tuple[IntVector, ...]
) -> Optional[Tuple[RationalVector, ...]]:
    """Return the inverse of the square matrix with the given columns, or None if singular."""
    matrix = Matrix(list(zip(*columns)))
    if matrix.det() == 0:
        return None
    inverse = matrix.inv()
    return tuple(
        tuple(Fraction(int(inverse[i, j].p), int(inverse[i, j].q)) for j in range(inverse.cols))
        for i in range(inverse.rows)
    )


def mat_vec(rows: Sequence[Sequence[Fraction]], vector: Sequence[Fraction]) -> RationalVector:
    """Return rows . vector in exact arithmetic."""
    return tuple(sum((Fraction(a) * b for a, b in zip(row, vector)), Fraction(0)) for row in rows)


def elementary_divisors(rows: Sequence[Sequence[int]]) -> Tuple[int, ...]:
    """Return the nonzero Smith invariants of an integer matrix."""
    if not rows or not rows[0]:
        return ()
    snf = smith_normal_form(Matrix([list(row) for row in rows]), domain=ZZ)
    size = min(snf.rows, snf.cols)
    return tuple(sorted(abs(int(snf[i, i])) for i in range(size) if snf[i, i] != 0))


def lattice_index(A: ExponentMatrix) -> int:
    """Return [Z^n : ZA], the product of the elementary divisors of A."""
    index = 1
    for divisor in elementary_divisors(A.rows):
        index *= divisor
    return index


def _unimodular_kernel(rows: Sequence[Sequence[int]], width: int) -> List[List[int]]:
    """Column-reduce the rows with unimodular operations and return a Z-basis of the kernel."""
    work = [list(row) for row in rows]
    transform = [[1 if i == j else 0 for j in range(width)] for i in range(width)]
    pivot = 0
    for row in work:
        if pivot >= width:
            break
        for j in range(pivot + 1, width):
            if row[j] == 0:
                continue
            a, b = row[pivot], row[j]
            x, y, g = igcdex(a, b)
            ag, bg = a // g, b // g
            for matrix in (work, transform):
                for line in matrix:
                    left, right = line[pivot], line[j]
                    line[pivot] = x * left + y * right
                    line[j] = -bg * left + ag * right
        if row[pivot] != 0:
            pivot += 1
    return [[transform[i][j] for i in range(width)] for j in range(pivot, width)]


def hermite_rows(vectors: Sequence[Sequence[int]]) -> Tuple[IntVector, ...]:
    """Return the row Hermite normal form of the lattice spanned by the vectors."""
    rows = [list(vector) for vector in vectors if any(vector)]
    if not rows:
        return ()
    width = len(rows[0])
    # sympy pivots bottom-right in columns, so feed it the vectors as columns with reversed coordinates
    columns = Matrix([[row[width - 1 - i] for row in rows] for i in range(width)])
    form = hermite_normal_form(columns)
    return tuple(
        tuple(int(form[width - 1 - i, j]) for i in range(width)) for j in reversed(range(form.cols))
    )


def basis_condition(A: ExponentMatrix) -> bool:
    """Test if sum_k u_k a_k = 0 mod d has only the trivial solution u mod d."""
    if not A.is_fermat_deformation:
        raise MalformedInputError("The basis condition needs a Fermat deformation.")
    divisors = elementary_divisors(A.generators)
    return len(divisors) == A.m and all(gcd(divisor, A.d) == 1 for divisor in divisors)


def kernel_lattice(A: ExponentMatrix) -> KernelLattice:
    """Return the canonical primitive basis of ker_Z(A)."""
    if A.matrix().rank() < A.n:
        raise MalformedInputError(f"The exponent matrix does not have rank {A.n}.")
    basis = hermite_rows(_unimodular_kernel(A.rows, A.N))
    for vector in basis:
        if any(sum(a * u for a, u in zip(row, vector)) for row in A.rows):
            raise MalformedInputError("Kernel computation failed: A.u != 0.")
    if basis and elementary_divisors(basis) != (1,) * len(basis):
        raise MalformedInputError("Kernel basis is not primitive.")
    logger.debug("Kernel lattice of rank %d: %s", len(basis), basis)
    return KernelLattice(basis)


def gale_dual(A: ExponentMatrix, lattice: KernelLattice) -> GaleDual:
    """Return the Gale vectors of A and the dual section S with basis . S = Identity."""
    if not lattice.basis:
        return GaleDual(tuple(() for _ in range(A.N)), tuple(() for _ in range(A.N)))
    basis = Matrix([list(u) for u in lattice.basis])
    gram = basis * basis.T
    section = basis.T * gram.inv()
    if basis * section != Matrix.eye(lattice.rank):
        raise MalformedInputError("Gale duality system is not solvable.")
    vectors = tuple(tuple(u[i] for u in lattice.basis) for i in range(A.N))
    section_vectors = tuple(
        tuple(Fraction(int(section[i, j].p), int(section[i, j].q)) for j in range(lattice.rank))
        for i in range(A.N)
    )
    return GaleDual(vectors, section_vectors)


def dual_section(A: ExponentMatrix, lattice: KernelLattice) -> Tuple[RationalVector, ...]:
    """Return the rational dual section of the kernel basis."""
    return gale_dual(A, lattice).section


def residues(vector: Sequence[int], d: int) -> IntVector:
    """Return the vector reduced mod d."""
    return tuple(entry % d for entry in vector)


def subgroup(d: int, n: int, generators: Sequence[Sequence[int]]) -> Tuple[IntVector, ...]:
    """Return the sorted elements of the subgroup of (Z/d)^n generated by the vectors."""
    zero = (0,) * n
    elements = {zero}
    frontier = [zero]
    gens = [residues(g, d) for g in generators]
    while frontier:
        next_frontier = []
        for element in frontier:
            for generator in gens:
                candidate = tuple((x + y) % d for x, y in zip(element, generator))
                if candidate not in elements:
                    elements.add(candidate)
                    next_frontier.append(candidate)
        frontier = next_frontier
    return tuple(sorted(elements))


def h_map(p: Sequence[int], generators: Sequence[Sequence[int]], d: int, n: int) -> IntVector:
    """Return h(p) = sum_i p_i a_i mod d."""
    image = [0] * n
    for coefficient, generator in zip(p, generators):
        for k in range(n):
            image[k] += coefficient * generator[k]
    return residues(image, d)


def coset_representatives(
    d: int, n: int, generators: Sequence[Sequence[int]]
) -> Tuple[IntVector, ...]:
    """Return the lexicographically smallest nonnegative preimage of every element of h(Z^m)."""
    seen = set()
    representatives = []
    for q in product(range(d), repeat=len(generators)):
        image = h_map(q, generators, d, n)
        if image not in seen:
            seen.add(image)
            representatives.append(q)
    return tuple(representatives)


def normalized_volume(A: ExponentMatrix) -> int:
    """Return vol(A) from the simplex determinants of a regular triangulation."""
    # pylint: disable=import-outside-toplevel
    from gkzperiods.secondary_fan import placing_triangulation

    triangulation = placing_triangulation(A)
    total = 0
    for cell in triangulation.maximal_cells:
        total += abs(Matrix(list(zip(*A.column_submatrix(cell)))).det())
    index = lattice_index(A)
    volume = Fraction(int(total), index)
    if volume.denominator != 1:
        raise MalformedInputError("Normalized volume is not an integer.")
    if A.is_fermat_deformation:
        order = len(subgroup(A.d, A.n, A.generators))
        if order != volume:
            raise MalformedInputError(
                f"Geometric volume {volume} differs from the subgroup order {order}."
            )
    return int(volume)


def index_set(d: int, n: int) -> Tuple[IntVector, ...]:
    """Return I = {c : 0 < c_i < d, |c| = 0 mod d} in lexicographic order."""
    return tuple(c for c in product(range(1, d), repeat=n) if sum(c) % d == 0)


def index_set_size(d: int, n: int) -> int:
    """Return the closed formula for #I."""
    return (d - 1) * ((d - 1) ** (n - 1) - (-1) ** (n - 1)) // d


def index_sets(d: int, n: int, generators: Sequence[Sequence[int]]) -> CharacterIndex:
    """Return I partitioned into the classes I_c of the subgroup generated by the generators."""
    if d < 2 or n < 2:
        raise MalformedInputError("Index sets need d >= 2 and n >= 2.")
    group = subgroup(d, n, generators)
    classes: Dict[IntVector, List[IntVector]] = {}
    elements = index_set(d, n)
    for c in elements:
        key = min(tuple((x + y) % d for x, y in zip(c, h)) for h in group)
        classes.setdefault(key, []).append(c)
    ordered = sorted((tuple(members) for members in classes.values()), key=lambda m: m[0])
    logger.debug("Index set: %d elements in %d classes", len(elements), len(ordered))
    return CharacterIndex(d, n, elements, tuple(ordered))


def p_set(
    c: Sequence[int],
    generators: Sequence[Sequence[int]],
    d: int,
    representatives: Optional[Sequence[Sequence[int]]] = None,
) -> Tuple[IntVector, ...]:
    """Return P_c: the representatives p for which c + h(p) has no zero entry mod d."""
    n = len(c)
    if representatives is None:
        representatives = coset_representatives(d, n, generators)
    members = []
    for p in representatives:
        image = h_map(p, generators, d, n)
        if all((x + y) % d for x, y in zip(c, image)):
            members.append(tuple(p))
    return tuple(members)


def derham_dimension(c: Sequence[int], index: CharacterIndex) -> int:
    """Return #I_c, the dimension of the de Rham piece generated by omega_c."""
    return len(index.class_of(residues(c, index.d)))


def hodge_level(c: Sequence[int], d: int) -> int:
    """Return p with |c| = (p + 1) d for an element c of I."""
    total = sum(c)
    if total % d:
        raise MalformedInputError(f"|c| = {total} is not a multiple of {d}.")
    return total // d - 1


def compute_N_A(A: ExponentMatrix) -> int:  # pylint: disable=invalid-name
    """Return the lcm of the denominators of all inverses of nonsingular column n-tuples."""
    result = 1
    for cell in combinations(range(A.N), A.n):
        inverse = simplex_inverse(A.column_submatrix(cell))
        if inverse is None:
            continue
        for row in inverse:
            for entry in row:
                result = lcm(result, entry.denominator)
    return result


def primitive_vector(vector: Sequence[int]) -> IntVector:
    """Return the vector divided by the gcd of its entries."""
    divisor = 0
    for entry in vector:
        divisor = gcd(divisor, entry)
    if divisor == 0:
        return tuple(vector)
    return tuple(entry // divisor for entry in vector)
