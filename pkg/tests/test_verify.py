"""Test the verification harness."""
import pytest

from gkzperiods import verify
from gkzperiods.errors import PoleError
from gkzperiods.verify import SUITES, Check, run_suites


def test_run_suites_fast(config):
    """Test if the quick suites run in order and pass."""
    results = run_suites(["fermat", "polygamma"], config)
    assert [check.suite for check in results][0] == "fermat"
    assert {check.suite for check in results} == {"fermat", "polygamma"}
    assert all(check.passed for check in results)


def test_run_suites_on_threads_matches_serial(config):
    """Test if suites on several threads give the serial checks in the order of the names."""
    names = ["polygamma", "fermat"]
    serial = run_suites(names, config)
    parallel = run_suites(names, dict(config, THREADS=3))
    assert parallel == serial
    assert parallel[0].suite == "polygamma"


def test_suite_errors_become_failed_checks(config, monkeypatch):
    """Test if a library error inside a suite is recorded instead of raised."""

    def broken(_config):
        raise PoleError("Gamma pole at 0")

    monkeypatch.setitem(verify.SUITES, "fermat", broken)
    (check,) = run_suites(["fermat"], config)
    assert not check.passed
    assert check.detail == "POLE: Gamma pole at 0"


def test_check_as_dict():
    """Test if a check is exported with all of its fields."""
    check = Check("gkz", "toy", True)
    assert check.as_dict() == {"suite": "gkz", "name": "toy", "passed": True, "detail": ""}


def test_suite_names():
    """Test if every suite is registered."""
    assert sorted(SUITES) == sorted(
        ["combinatorics", "gkz", "mb", "connection", "fermat", "volume", "skeleton", "polygamma", "sst", "limits"]
    )


@pytest.mark.slow
@pytest.mark.parametrize("suite", ("combinatorics", "gkz", "volume", "skeleton", "limits"))
def test_suite_passes(config, suite):
    """Test if a heavier suite passes with the test configuration."""
    results = run_suites([suite], config)
    assert results
    assert all(check.passed for check in results), [check for check in results if not check.passed]
