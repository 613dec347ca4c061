"""Test exponent matrices, kernel lattices and character index sets."""
from fractions import Fraction

import pytest

from gkzperiods.errors import MalformedInputError
from gkzperiods.lattice_core import (
    basis_condition,
    coset_representatives,
    compute_N_A,
    derham_dimension,
    elementary_divisors,
    exponent_matrix,
    fermat_deformation,
    h_map,
    hermite_rows,
    hodge_level,
    index_set,
    index_set_size,
    index_sets,
    lattice_index,
    normalized_volume,
    p_set,
    primitive_vector,
    pure_fermat,
    solve_rational,
    subgroup,
)


def test_fermat_deformation_appends_pure_powers(toy):
    """Test if the pure powers d*e_k follow the deformation monomials."""
    assert toy.columns == ((1, 2), (3, 0), (0, 3))
    assert toy.is_fermat_deformation
    assert (toy.n, toy.N, toy.m, toy.d) == (2, 3, 1, 3)
    assert toy.generators == ((1, 2),)


@pytest.mark.parametrize(
    "d, monomials, message",
    (
        (1, [(1, 0)], "at least 2"),
        (3, [(1, 1)], "does not have degree 3"),
        (3, [(4, -1)], "Invalid monomial"),
        (3, [], "dimension n"),
    ),
)
def test_fermat_deformation_rejects_malformed_input(d, monomials, message):
    """Test if invalid degrees and monomials raise a malformed-input error."""
    with pytest.raises(MalformedInputError) as error:
        fermat_deformation(d, monomials)

    assert message in str(error.value)


def test_exponent_matrix_detects_fermat_shape():
    """Test if a column list ending in d*e_k is recognized as a Fermat deformation."""
    assert exponent_matrix([(1, 2), (3, 0), (0, 3)]).is_fermat_deformation
    assert not exponent_matrix([(1, 0), (1, 1), (1, 2)]).is_fermat_deformation


def test_exponent_matrix_rejects_rank_deficient_columns():
    """Test if a matrix without full row rank is rejected."""
    with pytest.raises(MalformedInputError) as error:
        exponent_matrix([(1, 1), (2, 2)])

    assert "does not have rank 2" in str(error.value)


def test_exponent_matrix_rejects_inhomogeneous_columns():
    """Test if columns that lie on no common affine hyperplane are rejected."""
    with pytest.raises(MalformedInputError) as error:
        exponent_matrix([(1, 0), (0, 1), (1, 1), (2, 3)])

    assert "not homogeneous" in str(error.value)


def test_dual_vector_of_segment():
    """Test if the dual vector evaluates to 1 on every column."""
    segment = exponent_matrix([(1, 0), (1, 1), (1, 2), (1, 3)])
    vector = segment.dual_vector
    for column in segment.columns:
        assert sum(v * a for v, a in zip(vector, column)) == 1


def test_kernel_lattice_of_toy_matrix(toy):
    """Test if the kernel basis is primitive and annihilated by A."""
    assert toy.kernel.basis == ((3, -1, -2),)
    assert toy.kernel.rank == 1
    assert toy.gale.vectors == ((3,), (-1,), (-2,))
    assert toy.gale.project((1, 0, 0)) == (Fraction(3),)


def test_kernel_lattice_rank_of_two_monomials(two_monomials):
    """Test if the kernel has rank N - n and every basis vector lies in ker(A)."""
    basis = two_monomials.kernel.basis
    assert len(basis) == 2
    for vector in basis:
        for row in two_monomials.rows:
            assert sum(a * u for a, u in zip(row, vector)) == 0


def test_solve_rational_returns_none_when_unsolvable():
    """Test if an inconsistent system has no rational solution."""
    assert solve_rational([(1, 1), (2, 2)], [1, 3]) is None
    assert solve_rational([(2, 0), (0, 4)], [1, 1]) == (Fraction(1, 2), Fraction(1, 4))


def test_elementary_divisors_and_lattice_index(toy, dwork):
    """Test if [Z^n : ZA] is the product of the Smith invariants."""
    assert elementary_divisors(((2, 0), (0, 6))) == (2, 6)
    assert lattice_index(toy) == 3
    assert lattice_index(pure_fermat(3, 2)) == 9
    assert lattice_index(dwork) == 7**5


def test_normalized_volume_matches_subgroup_order(toy):
    """Test if the geometric volume equals the order of the generated subgroup."""
    assert normalized_volume(toy) == 3
    assert len(subgroup(3, 2, toy.generators)) == 3


def test_normalized_volume_of_segment():
    """Test if the segment {0, 1, 2, 3} has normalized volume 3."""
    assert normalized_volume(exponent_matrix([(1, 0), (1, 1), (1, 2), (1, 3)])) == 3


def test_h_map_and_coset_representatives():
    """Test if h reduces sum p_i a_i mod d and representatives are lexicographically least."""
    assert h_map((1,), ((1, 2),), 3, 2) == (1, 2)
    assert h_map((2,), ((1, 2),), 3, 2) == (2, 1)
    assert coset_representatives(3, 2, ((1, 2),)) == ((0,), (1,), (2,))


@pytest.mark.parametrize("d, n", ((3, 2), (5, 3), (7, 6), (4, 4)))
def test_index_set_size_matches_enumeration(d, n):
    """Test if the closed formula for #I agrees with the enumeration."""
    assert index_set_size(d, n) == len(index_set(d, n))


def test_index_set_of_septic_sixfold():
    """Test if the septic Fermat sixfold has 6666 indices."""
    assert index_set_size(7, 6) == 6666


def test_index_sets_of_dwork_family(dwork):
    """Test the class structure of the one-monomial septic family."""
    index = index_sets(7, 6, dwork.generators)
    assert len(index.elements) == 6666
    assert len(index.classes) == 2401
    assert index.histogram() == {2: 1080, 3: 780, 4: 540, 6: 1}
    assert sum(len(members) for members in index.classes) == 6666


@pytest.mark.slow
def test_index_sets_of_two_monomial_family(two_monomials):
    """Test the class structure of the two-monomial septic family."""
    index = index_sets(7, 6, two_monomials.generators)
    assert len(index.classes) == 343
    assert index.histogram() == {15: 48, 16: 72, 20: 108, 21: 72, 26: 42, 30: 1}


def test_index_sets_reject_small_dimensions():
    """Test if index sets need n >= 2."""
    with pytest.raises(MalformedInputError):
        index_sets(3, 1, ((3,),))


def test_p_set_of_dwork_class(dwork):
    """Test if P_c keeps exactly the offsets avoiding a vanishing entry mod d."""
    assert p_set((1, 2, 1, 1, 1, 1), dwork.generators, 7) == ((0,), (1,), (2,), (4,))


def test_p_set_of_toy_class(toy):
    """Test if the toy class has two surviving offsets."""
    assert p_set((1, 2), toy.generators, 3) == ((0,), (1,))


def test_derham_dimension_and_hodge_level(toy):
    """Test if #I_c counts the class and |c| fixes the Hodge level."""
    index = index_sets(3, 2, toy.generators)
    assert derham_dimension((1, 2), index) == 2
    assert index.class_of((2, 1)) == ((1, 2), (2, 1))
    assert hodge_level((1, 2), 3) == 0
    assert hodge_level((1, 2, 1, 1, 1, 1), 7) == 0


def test_hodge_level_rejects_non_multiple():
    """Test if |c| not divisible by d is rejected."""
    with pytest.raises(MalformedInputError) as error:
        hodge_level((1, 1), 3)

    assert "is not a multiple of 3" in str(error.value)


def test_class_of_rejects_foreign_index(toy):
    """Test if an index outside I has no class."""
    with pytest.raises(MalformedInputError) as error:
        index_sets(3, 2, toy.generators).class_of((1, 1))

    assert "is not an element of I" in str(error.value)


def test_compute_n_a(toy, dwork):
    """Test if N_A is the lcm of all simplex inverse denominators."""
    assert compute_N_A(toy) == 6
    assert compute_N_A(dwork) == 14


def test_primitive_vector():
    """Test if a vector is divided by the gcd of its entries."""
    assert primitive_vector((6, -3, 9)) == (2, -1, 3)
    assert primitive_vector((0, 0)) == (0, 0)


@pytest.mark.parametrize(
    "vectors, expected",
    (
        (((2, 0), (1, 1)), ((1, 1), (0, 2))),
        (((0, 3, 1), (0, 0, 0), (0, 6, 4)), ((0, 3, 1), (0, 0, 2))),
        (((-4, 2, 0), (6, -3, 0)), ((2, -1, 0),)),
        (((0, 0),), ()),
    ),
)
def test_hermite_rows(vectors, expected):
    """Test if the row Hermite form has positive leading pivots and reduced entries above them."""
    assert hermite_rows(vectors) == expected


@pytest.mark.parametrize(
    "d, monomials, expected",
    (
        (3, [(1, 2)], True),
        (7, [(2, 1, 1, 1, 1, 1)], True),
        (7, [(2, 1, 1, 1, 1, 1), (1, 1, 2, 1, 1, 1)], True),
        (4, [(2, 2)], False),
        (4, [(1, 1, 2), (3, 1, 0)], False),
    ),
)
def test_basis_condition(d, monomials, expected):
    """Test if the basis condition fails exactly when some u != 0 mod d solves sum u_k a_k = 0 mod d."""
    assert basis_condition(fermat_deformation(d, monomials)) is expected


def test_basis_condition_needs_degree():
    """Test if a general exponent matrix has no basis condition."""
    with pytest.raises(MalformedInputError) as error:
        basis_condition(exponent_matrix([(1, 0), (1, 1), (1, 2)]))

    assert "needs a Fermat deformation" in str(error.value)
