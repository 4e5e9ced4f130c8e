"""
tsvar Config Models

Pydantic models of the JSON problem config, and the bridge from a validated
config to the runtime objects (TimeScale, Lagrangian, Problem).
"""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import ConfigError, ConfigValidator, ExpressionError, ParseError, TsVarError
from .exprlang import parse
from .solver import SolverTolerances
from .timescale import ScaleKind, TimeScale
from .variational.lagrangian import Horizon, Lagrangian, Problem


class TimeScaleConfig(BaseModel):
    """Time scale section, e.g. {"kind": "q", "q": 2.0, "anchor": 1.0}."""

    model_config = ConfigDict(extra="forbid")

    kind: ScaleKind
    h: Optional[float] = Field(None, gt=0)
    q: Optional[float] = Field(None, gt=1)
    a1: Optional[float] = Field(None, gt=0)
    a0: Optional[float] = None
    points: Optional[List[float]] = None
    anchor: Optional[float] = None

    @model_validator(mode="after")
    def check_parameters(self):
        required = {
            ScaleKind.H_STEP: ("h",),
            ScaleKind.Q_SCALE: ("q",),
            ScaleKind.AFFINE: ("a1", "a0"),
            ScaleKind.POINT_SEQUENCE: ("points",),
        }.get(self.kind, ())
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"Scale kind '{self.kind.value}' needs {', '.join(missing)}")
        return self

    def build(self) -> TimeScale:
        return TimeScale.from_dict(self.model_dump(mode="json", exclude_none=True))


class HorizonConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    T_max_index: Optional[int] = Field(None, ge=1)
    T_grid_stride: Optional[int] = Field(None, ge=1)
    T_start_index: int = Field(0, ge=0)


class TolerancesConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    zero: float = Field(1e-10, gt=0)
    collocation_points: Optional[int] = Field(None, ge=1)
    max_iterations: int = Field(50, ge=1)

    def build(self) -> SolverTolerances:
        return SolverTolerances(self.zero, self.collocation_points, self.max_iterations)


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    basis: List[str] = Field(default_factory=list)
    seed: int = Field(0, ge=0)
    battery: bool = False
    tolerances: TolerancesConfig = Field(default_factory=TolerancesConfig)

    @field_validator("basis")
    @classmethod
    def validate_basis(cls, v):
        for source in v:
            try:
                parse(source)
            except ParseError as e:
                raise ValueError(f"Basis function {source!r} is not an expression in t: {e}")
        return v


class ProblemConfig(BaseModel):
    """The whole problem config."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "schema_version": 1,
                "timescale": {"kind": "integer", "anchor": 0},
                "order": 2,
                "initial_conditions": [0, 1],
                "lagrangian": "-(u2)^2",
                "solver": {"basis": ["t^3", "t^2", "t", "1"], "seed": 0},
                "candidate": "t",
            }
        },
    )

    schema_version: int = Field(..., description="Config format version")
    name: Optional[str] = None
    timescale: TimeScaleConfig
    order: int = Field(..., ge=1, description="Order r of the problem")
    initial_conditions: List[float] = Field(..., description="alpha_0 .. alpha_{r-1}")
    lagrangian: str = Field(..., description="L(t, u0, ..., ur) as an expression")
    partials: Dict[str, str] = Field(default_factory=dict)
    horizon: HorizonConfig = Field(default_factory=HorizonConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    candidate: Optional[str] = Field(None, description="Candidate trajectory, an expression in t")
    competitors: List[str] = Field(default_factory=list)

    @field_validator("schema_version")
    @classmethod
    def validate_version(cls, v):
        if v != 1:
            raise ValueError("Only schema_version 1 is supported")
        return v

    @field_validator("candidate")
    @classmethod
    def validate_candidate(cls, v):
        if v is not None:
            parse(v)
        return v

    @model_validator(mode="after")
    def check_consistency(self):
        if len(self.initial_conditions) != self.order:
            raise ValueError(
                f"order {self.order} needs {self.order} initial conditions, got {len(self.initial_conditions)}")
        parse(self.lagrangian, self.order)
        for key, source in self.partials.items():
            if int(key[1:]) > self.order:
                raise ValueError(f"Partial {key} exceeds order {self.order}")
            parse(source, self.order)
        return self

    def build_problem(self) -> Problem:
        """Runtime Problem for this config."""
        scale = self.timescale.build()
        default = Horizon.default_for(scale)
        horizon = Horizon(
            T_max_index=self.horizon.T_max_index or default.T_max_index,
            T_grid_stride=self.horizon.T_grid_stride or default.T_grid_stride,
            T_start_index=self.horizon.T_start_index,
        )
        lagrangian = Lagrangian.from_expression(self.lagrangian, self.order, self.partials)
        return Problem(scale, self.order, tuple(self.initial_conditions), lagrangian, horizon)


def load_config(data: Dict[str, Any], validator: Optional[ConfigValidator] = None) -> ProblemConfig:
    """Schema-validate and parse raw config data; every failure becomes ConfigError."""
    (validator or ConfigValidator()).validate(data)
    try:
        return ProblemConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Config validation failed: {e}")
    except ExpressionError as e:
        raise ConfigError(f"Config expression error: {e}")


def load_config_file(path: str) -> ProblemConfig:
    validator = ConfigValidator()
    return load_config(validator.validate_file(path), validator)


def build_problem(config: ProblemConfig) -> Problem:
    try:
        return config.build_problem()
    except TsVarError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid problem: {e}")


def load_problem(path: str) -> Tuple[ProblemConfig, Problem]:
    """Validated config and its Problem for a config file."""
    config = load_config_file(path)
    return config, build_problem(config)
