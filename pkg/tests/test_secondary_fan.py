"""Test regular subdivisions and the skeleton of the secondary fan."""
from fractions import Fraction

import pytest

from gkzperiods.errors import MalformedInputError, UnsupportedTriangulationError
from gkzperiods.lattice_core import exponent_matrix
from gkzperiods.secondary_fan import (
    as_triangulation,
    chamber_contains,
    classify_triangulation,
    dwork_triangulation,
    extend_weight,
    fermat_triangulation,
    gale_cone_report,
    is_dwork_perturbation,
    is_regular_triangulation,
    placing_triangulation,
    skeleton_membership,
    subdivision_from_weight,
    verify_witnesses,
)

TWO_MONOMIAL_WEIGHT = (0, 100, 10, 10, 10, 10, 10, 10)


@pytest.fixture(name="segment")
def fixture_segment():
    """Factory function for the four points 0, 1, 2, 3 on a line."""
    return exponent_matrix([(1, 0), (1, 1), (1, 2), (1, 3)])


def test_fermat_and_dwork_triangulations(toy):
    """Test if T(Fer) and T(a_1) have the expected maximal cells."""
    assert fermat_triangulation(toy) == ((1, 2),)
    assert dwork_triangulation(toy) == ((0, 1), (0, 2))


def test_dwork_triangulation_rejects_bad_pivot(toy):
    """Test if the pivot must index a deformation monomial."""
    with pytest.raises(MalformedInputError) as error:
        dwork_triangulation(toy, pivot=1)

    assert "is not a deformation monomial" in str(error.value)


@pytest.mark.parametrize(
    "weight, cells, kind",
    (
        ((1, 0, 0), ((1, 2),), ("fermat", None)),
        ((-1, 0, 0), ((0, 1), (0, 2)), ("dwork", 0)),
    ),
)
def test_subdivision_from_weight_of_toy(toy, weight, cells, kind):
    """Test if the lower faces of the lifted toy configuration are found and classified."""
    subdivision = subdivision_from_weight(toy, weight)
    assert subdivision.maximal_cells == cells
    assert is_regular_triangulation(subdivision)
    assert verify_witnesses(toy, subdivision)
    assert classify_triangulation(toy, subdivision) == kind


def test_flat_weight_gives_single_cell(toy):
    """Test if the zero weight does not triangulate and lies on the skeleton."""
    subdivision = subdivision_from_weight(toy, (0, 0, 0))
    assert subdivision.maximal_cells == ((0, 1, 2),)
    assert not is_regular_triangulation(subdivision)
    assert skeleton_membership(toy, (0, 0, 0))
    with pytest.raises(UnsupportedTriangulationError):
        classify_triangulation(toy, subdivision)
    with pytest.raises(UnsupportedTriangulationError) as error:
        as_triangulation(subdivision)

    assert "is not a triangulation" in str(error.value)


def test_weight_length_is_checked(toy):
    """Test if a weight of the wrong length is rejected."""
    with pytest.raises(MalformedInputError) as error:
        subdivision_from_weight(toy, (1, 0))

    assert "needs 3 entries" in str(error.value)


def test_gale_cone_report_off_skeleton(toy):
    """Test if a generic weight projects away from all small Gale cones."""
    report = gale_cone_report(toy, (1, 0, 0))
    assert report.projection == (Fraction(3),)
    assert not report.in_skeleton
    assert report.cone is None


def test_gale_cone_report_on_skeleton(toy):
    """Test if a weight with pi_A(w) = 0 reports the empty cone."""
    report = gale_cone_report(toy, (1, 1, 1))
    assert report.in_skeleton
    assert report.cone == ()


def test_chamber_contains(toy):
    """Test if pi_A(w) lies in the chamber of T(Fer) only for w_1 > 0."""
    fermat = subdivision_from_weight(toy, (1, 0, 0))
    assert chamber_contains(toy, fermat, (2, 0, 0))
    assert not chamber_contains(toy, fermat, (-1, 0, 0))


def test_segment_subdivisions(segment):
    """Test if lifting the inner points leaves the long segment as the only cell."""
    coarse = subdivision_from_weight(segment, (0, 1, 1, 0))
    assert coarse.maximal_cells == ((0, 3),)
    assert is_regular_triangulation(coarse)
    assert not is_regular_triangulation(subdivision_from_weight(segment, (0, 0, 0, 0)))
    assert placing_triangulation(segment).is_triangulation()


def test_is_dwork_perturbation(toy, two_monomials):
    """Test if the strict inequalities select the Dwork triangulation."""
    assert is_dwork_perturbation(toy, (-1, 0, 0))
    assert not is_dwork_perturbation(toy, (1, 0, 0))
    assert is_dwork_perturbation(two_monomials, TWO_MONOMIAL_WEIGHT)


def test_two_monomial_weight_gives_dwork_triangulation(two_monomials):
    """Test if the two-monomial degeneration weight lands in T(a_1)."""
    subdivision = subdivision_from_weight(two_monomials, TWO_MONOMIAL_WEIGHT)
    assert classify_triangulation(two_monomials, subdivision) == ("dwork", 0)
    assert not skeleton_membership(two_monomials, TWO_MONOMIAL_WEIGHT)


def test_extend_weight_triangulates(toy):
    """Test if the extension keeps the head and yields a triangulation."""
    weight = extend_weight(toy, (-1,), seed=3)
    assert weight[0] == -1
    assert len(weight) == 3
    assert subdivision_from_weight(toy, weight).is_triangulation()
    assert extend_weight(toy, (-1,), seed=3) == weight


def test_extend_weight_needs_fermat_matrix(segment):
    """Test if extensions are only defined for Fermat deformations."""
    with pytest.raises(MalformedInputError):
        extend_weight(segment, (0,))
