"""
tsvar Command Line Interface

Batch front door: load a problem config, verify or solve for a candidate
extremal, scan transversality conditions and emit machine-readable reports.

Exit codes: 0 pass, 1 check or solve failure, 2 usage or config error.
"""

import asyncio
import logging
from typing import List, Optional

import click

from .calculus import Trajectory
from .cli_examples import config_option, examples, ibp_check, load_problem, out_option
from .core import SolverError, TsVarError
from .exprlang import time_function
from .models import ProblemConfig
from .reports import dumps, emit
from .solver import solve_candidate
from .variational import CandidateVerifier, Problem, default_competitors, transversality_scan


def candidate_trajectory(config: ProblemConfig, problem: Problem) -> Trajectory:
    if not config.candidate:
        raise click.UsageError("The config has no candidate")
    return Trajectory(problem.scale, time_function(config.candidate), config.candidate)


def _status_line(ok: bool, text: str) -> str:
    return f"{'✓' if ok else '✗'} {text}"


@click.group()
@click.version_option()
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
def cli(verbose):
    """tsvar - Calculus of variations on time scales."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


# Example and self-check commands
cli.add_command(ibp_check)
cli.add_command(examples)


@cli.command()
@config_option
@out_option
def verify(config_path, out):
    """Check a candidate against the necessary conditions."""
    config, problem = load_problem(config_path)
    x = candidate_trajectory(config, problem)

    competitors: Optional[List[Trajectory]] = None
    if config.competitors:
        competitors = default_competitors(problem, x) + [
            Trajectory(problem.scale, time_function(source), source) for source in config.competitors
        ]
    verifier = CandidateVerifier({"battery": config.solver.battery, "competitors": competitors})
    try:
        result = asyncio.run(verifier.verify(problem, x))
    except TsVarError as e:
        raise click.ClickException(str(e))

    report = {"command": "verify", "name": config.name, "result": result.to_dict()}
    emit(dumps(report), out, "report.json")
    if out:
        for check in result.checks:
            click.echo(_status_line(check.ok, f"{check.name}: {check.message}"))
        click.echo(_status_line(result.passed, "Candidate passes" if result.passed else "Candidate fails"))
    if not result.passed:
        raise SystemExit(1)


@cli.command()
@config_option
@out_option
def solve(config_path, out):
    """Compute a candidate extremal over the configured basis."""
    config, problem = load_problem(config_path)
    if not config.solver.basis:
        raise click.UsageError("The config has no solver basis")
    tolerances = config.solver.tolerances.build()
    try:
        result = solve_candidate(problem, config.solver.basis, seed=config.solver.seed, tolerances=tolerances)
    except SolverError as e:
        report = {"command": "solve", "name": config.name, "error": type(e).__name__, "message": str(e)}
        best = getattr(e, "best_iterate", None)
        if best is not None:
            report["best_iterate"] = [float(v) for v in best]
        emit(dumps(report), out, "report.json")
        click.echo(f"Error: {e}", err=True)
        raise SystemExit(1)
    except TsVarError as e:
        raise click.ClickException(str(e))

    emit(dumps({"command": "solve", "name": config.name, "result": result.to_dict()}), out, "report.json")
    if out:
        click.echo(f"x(t) = {result.ansatz.describe()}")
        click.echo(f"family_dim = {result.family_dim}, max |el_residual| = {result.el_residual_norm:.3e}")
        for k, scan in result.transversality_report.items():
            click.echo(f"  k={k}: {scan.verdict.value}")


@cli.command()
@config_option
@out_option
@click.option('--k', 'k', default=1, show_default=True, type=int, help='Transversality condition index')
@click.option('--format', 'output_format', type=click.Choice(['csv', 'json']), default='csv', show_default=True)
def scan(config_path, out, k, output_format):
    """Truncated-horizon scan of transversality condition k for the candidate."""
    config, problem = load_problem(config_path)
    if not 1 <= k <= problem.order:
        raise click.UsageError(f"--k must lie in 1..{problem.order}")
    x = candidate_trajectory(config, problem)
    try:
        result = transversality_scan(problem, x, k)
    except TsVarError as e:
        raise click.ClickException(str(e))

    if output_format == 'csv':
        emit(result.to_csv(), out, f"scan_k{k}.csv")
    else:
        emit(dumps(result.to_dict()), out, f"scan_k{k}.json")
    if out:
        click.echo(f"k={k}: {result.verdict.value}")


if __name__ == '__main__':
    cli()
