"""
tsvar Core

Exception hierarchy and JSON-schema validation of problem configs.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from jsonschema import Draft7Validator

SCHEMA_PATH = Path(__file__).parent / "schema" / "problem.schema.json"


class TsVarError(Exception):
    """Base exception for tsvar operations."""
    pass


class DomainError(TsVarError):
    """A point is not on the time scale, or a value is outside a function's domain."""
    pass


class HorizonError(TsVarError):
    """The scale cannot produce the forward points an operation needs."""
    pass


class ArgumentError(TsVarError):
    """An argument is out of its admissible range."""
    pass


class PreconditionError(TsVarError):
    """An operation requires condition (H) and the scale does not satisfy it."""
    pass


class ScaleError(TsVarError):
    """Invalid time scale parameters."""
    pass


class ProblemError(TsVarError):
    """A variational problem is inconsistent."""
    pass


class ExpressionError(TsVarError):
    """Base class for expression language failures."""
    pass


class ParseError(ExpressionError):
    """Malformed expression source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvaluationError(ExpressionError):
    """An expression references a variable that is not bound."""
    pass


class SolverError(TsVarError):
    """Base class for solver failures."""
    pass


class BasisError(SolverError):
    """The basis is linearly dependent on the collocation grid."""
    pass


class InfeasibilityError(SolverError):
    """The initial conditions cannot be met by any combination of the basis."""
    pass


class ConvergenceError(SolverError):
    """Gauss-Newton did not converge; the best iterate is attached."""

    def __init__(self, message: str, best_iterate: Optional[Any] = None):
        super().__init__(message)
        self.best_iterate = best_iterate


class ConfigError(TsVarError):
    """The problem config does not validate."""
    pass


class ConfigValidator:
    """Validates raw problem config dictionaries against the JSON schema."""

    def __init__(self, schema_path: Optional[Path] = None):
        self.logger = logging.getLogger(__name__)
        self.schema = self._load_schema(schema_path or SCHEMA_PATH)
        self._validator = Draft7Validator(self.schema)

    def _load_schema(self, schema_path: Path) -> Dict[str, Any]:
        """Load the JSON schema for validation."""
        try:
            with open(schema_path, "r", encoding="utf-8") as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot load config schema {schema_path}: {e}")

    def validate(self, data: Dict[str, Any]) -> bool:
        """Validate config data, raising ConfigError listing every violation."""
        errors = sorted(self._validator.iter_errors(data), key=lambda e: list(e.path))
        if errors:
            messages = []
            for error in errors:
                location = "/".join(str(p) for p in error.path) or "<root>"
                messages.append(f"{location}: {error.message}")
            raise ConfigError("Schema validation failed: " + "; ".join(messages))
        return True

    def validate_file(self, file_path: str) -> Dict[str, Any]:
        """Load a config file, validate it and return the raw data."""
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Config loading failed: {e}")
        self.validate(data)
        return data
