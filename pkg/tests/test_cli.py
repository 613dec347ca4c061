"""Test the gkzperiods command line."""
import json

import pytest

from gkzperiods.cli import cli


def _problem(**changes):
    data = {
        "format": 1,
        "n": 2,
        "d": 3,
        "monomials": [[1, 2]],
        "classes": [[1, 2]],
        "arc": [{"order": 1, "initial": 1}, {"order": 0, "initial": 1}, {"order": 0, "initial": 1}],
    }
    data.update(changes)
    return json.dumps(data)


def test_fan_reports_fermat_triangulation(runner, config, problem_path):
    """Test if the toy arc weight gives T(Fer) off the skeleton."""
    result = runner.invoke(cli, ["fan", problem_path("toy")], obj=config)
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["triangulation"] is True
    assert report["kind"] == "fermat"
    assert report["skeleton"] is False
    assert report["cells"] == [[1, 2]]


def test_fan_on_skeleton_exits_with_one(runner, config):
    """Test if a weight that does not triangulate is reported with exit status 1."""
    result = runner.invoke(cli, ["fan"], input=_problem(weight=[0, 0, 0]), obj=config)
    assert result.exit_code == 1
    report = json.loads(result.output)
    assert report["triangulation"] is False
    assert report["skeleton"] is True


def test_periods_json(runner, config, problem_path):
    """Test if the toy table is written as a result document."""
    result = runner.invoke(cli, ["periods", problem_path("toy")], obj=config)
    assert result.exit_code == 0
    document = json.loads(result.output)
    assert document["triangulation"] == "fermat"
    assert len(document["rows"]) == 2
    assert all(row["certified"] for row in document["rows"])


def test_periods_csv(runner, config):
    """Test if the CSV summary starts with its header."""
    result = runner.invoke(cli, ["periods", "--emit", "csv", "--precision", "96"], input=_problem(), obj=config)
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "row,alpha,value,symbolic,ring"
    assert len(lines) >= 3


@pytest.mark.parametrize(
    "problem, code, message",
    (
        ("{", "MALFORMED_INPUT", "Invalid JSON"),
        (_problem(arc=[{"order": 0, "initial": 1}] * 3), "SKELETON_HIT", "lies on the cone"),
        (_problem(classes=[]), "MALFORMED_INPUT", "classes"),
    ),
)
def test_periods_errors_are_json(runner, config, problem, code, message):
    """Test if library errors are printed as a JSON error document with exit status 2."""
    result = runner.invoke(cli, ["periods"], input=problem, obj=config)
    assert result.exit_code == 2
    error = json.loads(result.output)["error"]
    assert error["code"] == code
    assert message in error["message"]


def test_verify_selected_suites(runner, config):
    """Test if the named suites run and pass."""
    result = runner.invoke(cli, ["verify", "fermat"], obj=config)
    assert result.exit_code == 0
    document = json.loads(result.output)
    assert document["passed"] is True
    assert {check["suite"] for check in document["checks"]} == {"fermat"}


def test_verify_rejects_unknown_suite(runner, config):
    """Test if an unknown suite name is a usage error."""
    result = runner.invoke(cli, ["verify", "nothing"], obj=config)
    assert result.exit_code == 2
    assert "Invalid value" in result.output


def test_verify_accepts_threads(runner, config):
    """Test if suites run on several threads are reported in the order they were named."""
    result = runner.invoke(cli, ["verify", "polygamma", "fermat", "--threads", "2", "--seed", "3"], obj=config)
    assert result.exit_code == 0
    suites = [check["suite"] for check in json.loads(result.output)["checks"]]
    assert suites == sorted(suites, key=["polygamma", "fermat"].index)


def test_periods_accepts_threads(runner, config, problem_path):
    """Test if the table computed on two threads matches the serial table."""
    serial = runner.invoke(cli, ["periods", problem_path("toy")], obj=config)
    parallel = runner.invoke(cli, ["periods", problem_path("toy"), "--threads", "2"], obj=config)
    assert parallel.exit_code == 0
    assert parallel.output == serial.output
