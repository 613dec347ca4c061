"""Command-line interface: fan, periods and verify."""
import json
import logging
from functools import wraps

import click
import coloredlogs

from gkzperiods import load_config
from gkzperiods.errors import GkzPeriodsError, MalformedInputError
from gkzperiods.limit_periods import emit_csv, limiting_period_table
from gkzperiods.problem import dump_json, encode_rational, encode_table, read_problem
from gkzperiods.secondary_fan import (
    classify_triangulation,
    gale_cone_report,
    is_regular_triangulation,
    subdivision_from_weight,
)
from gkzperiods.verify import SUITES, run_suites

logger = logging.getLogger(__name__)

ERROR_EXIT_CODE = 2


def handle_errors(command):
    """Print library errors as a JSON document and exit with status 2."""

    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except GkzPeriodsError as error:
            document = {"error": {"code": error.code, "message": str(error)}}
            click.echo(json.dumps(document, sort_keys=True))
            raise SystemExit(ERROR_EXIT_CODE) from error

    return wrapper


def _apply_options(config, **options):
    for key, value in options.items():
        if value is not None:
            config[key.upper()] = value
    return config


@click.group()
@click.option("--log-level", default=None, help="Logging level (default from GKZPERIODS_LOG_LEVEL).")
@click.pass_context
def cli(ctx, log_level):
    """Compute limiting periods of Fermat deformations from GKZ Gamma series."""
    if ctx.obj is None:
        ctx.obj = load_config()
    level = log_level or ctx.obj["LOG_LEVEL"]
    coloredlogs.install(level=level, logger=logging.getLogger("gkzperiods"))


@cli.command("fan")
@click.argument("problem_file", type=click.File("r"), default="-")
@click.pass_obj
@handle_errors
def fan(config, problem_file):
    """Report the subdivision of the problem's weight vector and its skeleton status."""
    problem = read_problem(problem_file)
    weight = problem.weight or (problem.arc.weight if problem.arc else None)
    if weight is None:
        raise MalformedInputError("The problem needs a weight vector or an arc.")
    A = problem.matrix
    subdivision = subdivision_from_weight(A, weight)
    cone = gale_cone_report(A, weight)
    triangulated = is_regular_triangulation(subdivision)
    kind, pivot = None, None
    if triangulated:
        try:
            kind, pivot = classify_triangulation(A, subdivision)
        except GkzPeriodsError:
            kind = "other"
    report = {
        "weight": [encode_rational(x) for x in weight],
        "triangulation": triangulated,
        "kind": kind,
        "pivot": pivot,
        "skeleton": cone.in_skeleton,
        "cells": [list(cell) for cell in subdivision.maximal_cells],
        "cone": None if cone.cone is None else list(cone.cone),
        "gale_vectors": [list(vector) for vector in cone.gale_vectors],
    }
    logger.debug("Fan report for %s: %s", problem.name, kind)
    click.echo(dump_json(report), nl=False)
    if not triangulated:
        raise SystemExit(1)


@cli.command("periods")
@click.argument("problem_file", type=click.File("r"), default="-")
@click.option("--precision", type=int, default=None, help="Working precision in bits.")
@click.option("--truncation", type=int, default=None, help="Terms per kernel direction.")
@click.option("--tolerance", type=float, default=None, help="Certificate tolerance.")
@click.option("--threads", type=int, default=None, help="Rows computed in parallel.")
@click.option("--emit", type=click.Choice(["json", "csv"]), default="json")
@click.option("--output", type=click.File("w"), default="-")
@click.pass_obj
@handle_errors
def periods(config, problem_file, precision, truncation, tolerance, threads, emit, output):
    """Compute the limiting-period table along the problem's arc."""
    # pylint: disable=too-many-arguments
    config = _apply_options(
        dict(config), precision=precision, truncation=truncation, tolerance=tolerance, threads=threads
    )
    problem = read_problem(problem_file)
    if problem.arc is None:
        raise MalformedInputError("Missing field in problem file: arc")
    if not problem.classes:
        raise MalformedInputError("Missing field in problem file: classes")
    options = {k.upper(): v for k, v in problem.options.items()}
    extra = {}
    if config["TRUNCATION"] or options.get("TRUNCATION"):
        extra["terms"] = int(config["TRUNCATION"] or options["TRUNCATION"])
    if options.get("C_PRIME"):
        extra["c_prime"] = options["C_PRIME"]
    table = limiting_period_table(
        problem.matrix,
        problem.arc,
        problem.classes,
        precision=int(config["PRECISION"]),
        threads=int(config["THREADS"]),
        tolerance=config["TOLERANCE"],
        **extra,
    )
    if emit == "csv":
        output.write(emit_csv(table, int(config["PRECISION"])))
    else:
        output.write(dump_json(encode_table(table)))


@cli.command("verify")
@click.argument("suites", nargs=-1, type=click.Choice(sorted(SUITES)))
@click.option("--precision", type=int, default=None, help="Working precision in bits.")
@click.option("--tolerance", type=float, default=None, help="Numeric agreement tolerance.")
@click.option("--seed", type=int, default=None, help="Seed of the randomized suites.")
@click.option("--threads", type=int, default=None, help="Suites run in parallel.")
@click.pass_obj
@handle_errors
def verify(config, suites, precision, tolerance, seed, threads):
    """Run verification suites (all of them when none is named)."""
    # pylint: disable=too-many-arguments
    config = _apply_options(dict(config), precision=precision, tolerance=tolerance, seed=seed, threads=threads)
    results = run_suites(suites or list(SUITES), config)
    failed = [check for check in results if not check.passed]
    document = {
        "passed": not failed,
        "checks": [check.as_dict() for check in results],
    }
    click.echo(dump_json(document), nl=False)
    if failed:
        raise SystemExit(1)
