"""
tsvar Example Commands

Self-check commands: the integration by parts battery on a configured
scale, and end-to-end reproduction of the bundled examples against their
golden summaries.
"""

import asyncio
from pathlib import Path
from typing import Any, Dict, Tuple

import click

from .calculus import Trajectory, ibp_battery
from .core import ConfigError, TsVarError
from .exprlang import time_function
from .models import ProblemConfig, load_problem as load_problem_file
from .reports import dumps, emit, example_summary, golden_diff, load_golden
from .solver import solve_candidate
from .variational import CandidateVerifier, Problem

DATA_DIR = Path(__file__).parent / "data"
EXAMPLES = ("example1", "example2")
IBP_TOL = 1e-9

config_option = click.option(
    '--config', '-c', 'config_path', required=True,
    type=click.Path(exists=True, dir_okay=False), help='Problem config file (JSON)')
out_option = click.option(
    '--out', '-o', type=click.Path(file_okay=False), help='Output directory for reports')


def load_problem(config_path: str) -> Tuple[ProblemConfig, Problem]:
    """Config and Problem for a config file; config errors become usage errors."""
    try:
        return load_problem_file(config_path)
    except ConfigError as e:
        raise click.UsageError(str(e))


def run_example(name: str) -> Dict[str, Any]:
    """Solve and verify a bundled example; returns its normalised summary."""
    config, problem = load_problem(str(DATA_DIR / f"{name}.json"))
    solved = solve_candidate(
        problem, config.solver.basis, seed=config.solver.seed, tolerances=config.solver.tolerances.build())
    verified = None
    if config.candidate:
        x = Trajectory(problem.scale, time_function(config.candidate), config.candidate)
        verifier = CandidateVerifier({"battery": config.solver.battery})
        verified = asyncio.run(verifier.verify(problem, x))
    return example_summary(name, solved, verified)


@click.command('ibp-check')
@config_option
@out_option
@click.option('--pairs', default=50, show_default=True, type=click.IntRange(min=1), help='Random polynomial pairs')
@click.option('--window', default=10, show_default=True, type=click.IntRange(min=2), help='Points per window')
@click.option('--seed', type=int, help='Random seed (default: solver seed of the config)')
def ibp_check(config_path, out, pairs, window, seed):
    """Integration by parts residual battery on the configured scale."""
    config, problem = load_problem(config_path)
    seed = config.solver.seed if seed is None else seed
    orders = list(range(1, problem.order + 1))
    try:
        result = ibp_battery(problem.scale, orders, pairs=pairs, seed=seed, window=window)
    except TsVarError as e:
        raise click.ClickException(str(e))

    passed = result.max_relative <= IBP_TOL
    report = {
        "command": "ibp-check",
        "scale": problem.scale.to_dict(),
        "orders": orders,
        "pairs": pairs,
        "seed": seed,
        "cases": result.cases,
        "max_relative_residual": result.max_relative,
        "worst": list(result.worst) if result.worst else None,
        "passed": passed,
    }
    emit(dumps(report), out, "report.json")
    if out:
        click.echo(f"{'✓' if passed else '✗'} max relative residual {result.max_relative:.3e} over {result.cases} cases")
    if not passed:
        raise SystemExit(1)


@click.command()
@out_option
def examples(out):
    """Reproduce the bundled examples and diff them against the golden summaries."""
    failed = False
    summaries = {}
    for name in EXAMPLES:
        try:
            summary = run_example(name)
        except TsVarError as e:
            raise click.ClickException(f"{name}: {e}")
        summaries[name] = summary
        diff = golden_diff(summary, load_golden(name), name)
        if diff:
            failed = True
            click.echo(f"✗ {name} differs from its golden summary")
            for line in diff:
                click.echo(line)
        else:
            click.echo(f"✓ {name} matches its golden summary")
        if out:
            emit(dumps(summary), out, f"{name}.json")

    if failed:
        raise SystemExit(1)
