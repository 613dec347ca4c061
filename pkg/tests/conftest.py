"""Define test configuration and fixtures."""
import os

import mpmath
import pytest
from click.testing import CliRunner

from gkzperiods import load_config
from gkzperiods.lattice_core import fermat_deformation

PROBLEMS = os.path.join(os.path.dirname(os.path.dirname(__file__)), "problems")


@pytest.fixture(name="reference_precision", autouse=True)
def fixture_reference_precision():
    """Compute reference values in tests at 256 bits."""
    with mpmath.workprec(256):
        yield


@pytest.fixture(name="config")
def fixture_config():
    """Factory function for a fixed test configuration."""
    return load_config({"PRECISION": 128, "TOLERANCE": 1e-10, "SEED": 7, "LOG_LEVEL": "WARNING"})


@pytest.fixture(name="toy")
def fixture_toy():
    """Factory function for the cubic curve deformed by x y^2."""
    return fermat_deformation(3, [(1, 2)])


@pytest.fixture(name="dwork")
def fixture_dwork():
    """Factory function for the septic one-monomial Dwork family."""
    return fermat_deformation(7, [(2, 1, 1, 1, 1, 1)])


@pytest.fixture(name="two_monomials")
def fixture_two_monomials():
    """Factory function for the septic family deformed by two monomials."""
    return fermat_deformation(7, [(2, 1, 1, 1, 1, 1), (1, 1, 2, 1, 1, 1)])


@pytest.fixture(name="problem_path")
def fixture_problem_path():
    """Factory function returning the path of a shipped problem file."""

    def path(name):
        return os.path.join(PROBLEMS, f"{name}.json")

    return path


@pytest.fixture(name="runner")
def fixture_runner():
    """Factory function for the click CLI runner."""
    return CliRunner()
