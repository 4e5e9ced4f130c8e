"""
Reports

JSON/CSV serialisation of results, atomic file output and the normalised
summaries that the bundled examples are compared against.
"""

import difflib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import click
import numpy as np

from .solver import SolveResult
from .variational.engine import VerificationResult

GOLDEN_DIR = Path(__file__).parent / "data" / "golden"
SUMMARY_DIGITS = 6


def sanitize(value: Any) -> Any:
    """Plain JSON types only; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps(data: Any) -> str:
    return json.dumps(sanitize(data), indent=2, sort_keys=True) + "\n"


def atomic_write(path: Union[str, Path], text: str) -> Path:
    """Write text to path through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _rounded(value: float) -> float:
    # + 0.0 turns -0.0 into 0.0
    return round(float(value), SUMMARY_DIGITS) + 0.0


def solve_summary(result: SolveResult) -> Dict[str, Any]:
    return {
        "coefficients": [_rounded(c) for c in result.coefficients],
        "family_dim": result.family_dim,
        "transversality": {str(k): s.verdict.value for k, s in result.transversality_report.items()},
    }


def verify_summary(result: VerificationResult) -> Dict[str, Any]:
    return {
        "passed": result.passed,
        "checks": {c.name: c.status.value for c in result.checks},
    }


def example_summary(name: str, solve: Optional[SolveResult], verify: Optional[VerificationResult]) -> Dict[str, Any]:
    summary: Dict[str, Any] = {"example": name}
    if solve is not None:
        summary["solve"] = solve_summary(solve)
    if verify is not None:
        summary["verify"] = verify_summary(verify)
    return summary


def load_golden(name: str, golden_dir: Optional[Path] = None) -> Dict[str, Any]:
    with open((golden_dir or GOLDEN_DIR) / f"{name}.json", "r", encoding="utf-8") as f:
        return json.load(f)


def golden_diff(actual: Dict[str, Any], expected: Dict[str, Any], name: str = "golden") -> List[str]:
    """Unified diff of the two summaries; empty when they agree as parsed data."""
    actual = json.loads(dumps(actual))
    if actual == expected:
        return []
    return list(difflib.unified_diff(
        dumps(expected).splitlines(),
        dumps(actual).splitlines(),
        fromfile=f"{name} (expected)",
        tofile=f"{name} (actual)",
        lineterm="",
    ))


def emit(text: str, out: Optional[Union[str, Path]], filename: str) -> Optional[Path]:
    """Write text to out/filename, or to stdout when no output directory is given."""
    if out:
        path = atomic_write(Path(out) / filename, text)
        click.echo(f"Report written to {path}")
        return path
    click.echo(text, nl=False)
    return None
