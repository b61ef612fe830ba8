"""
Scenario configuration models
"""

import copy
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import orjson
from pydantic import BaseModel, Field, ValidationError, model_validator

from ..config import settings
from ..errors import ConfigError
from .grid_models import DomainKind, DomainSpec, GreenMode, GridSpec, Point


class ScenarioKind(str, Enum):
    """Scenario families the CLI can run"""
    BALL = "ball"
    TWOPHASE_REFLECTION = "twophase_reflection"
    NULLQD = "nullqd"


class SolverSettings(BaseModel):
    """Relaxation solver knobs shared by the obstacle and Green solves"""
    relaxation: float = Field(settings.relaxation, gt=0, lt=2, description="SOR factor")
    tolerance: float = Field(settings.solver_tolerance, gt=0, description="Residual target relative to mass/h^2")
    max_sweeps: int = Field(settings.max_sweeps, gt=0)
    check_every: int = Field(settings.check_every, gt=0, description="Sweeps between residual checks")
    threshold_factor: Optional[float] = Field(
        None, description="omega threshold relative to max(u); defaults to sqrt(machine epsilon)"
    )
    margin_nodes: int = Field(5, ge=1, description="Width of the box margin strip that must stay empty")


class SandpileSettings(BaseModel):
    """Divisible sandpile oracle knobs"""
    enabled: bool = True
    tolerance: float = Field(settings.sandpile_tolerance, gt=0, description="Stop when excess <= tolerance*h^2")
    max_rounds: int = Field(settings.sandpile_max_rounds, gt=0)
    check_every: int = Field(10, gt=0)


class VerificationSettings(BaseModel):
    """Tolerances of the verification suite"""
    relative_tolerance: float = Field(settings.relative_tolerance, gt=0, description="Mean value / mass balance")
    negativity_tolerance: float = Field(1e-12, ge=0, description="u >= -tol * max(u)")
    zero_tolerance: float = Field(1e-6, ge=0, description="|u| <= tol * max(u) away from omega")
    complementarity_tolerance: float = Field(1e-8, gt=0, description="Residual <= tol * alpha")
    positivity_tolerance: float = Field(1e-12, ge=0, description="nu >= -tol * alpha nodewise")
    schwarz_constant: float = Field(settings.schwarz_constant, gt=0, description="C in C*h*max|S|")
    quadrature_tolerance: float = Field(settings.quadrature_tolerance, gt=0)
    kmax: int = Field(4, ge=0, le=6)
    probe_count: int = Field(16, ge=1)
    probe_margin_cells: float = Field(3.0, gt=0)
    exclusion_cells: float = Field(3.0, ge=3.0, description="Schwarz exclusion radius around atoms, in h")
    mean_value: bool = Field(True, description="Run the mean value and subharmonic checks")
    oracle_u_factor: float = Field(5.0, gt=0, description="|u_obs - u_sand| <= factor*h*max(u)")


class GridConfig(BaseModel):
    """Grid box and spacing as written in scenario files"""
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    h: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> "GridConfig":
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid bounds must satisfy min < max")
        return self

    def to_spec(self) -> GridSpec:
        return GridSpec.from_bounds(self.x_min, self.x_max, self.y_min, self.y_max, self.h)


class ScenarioConfig(BaseModel):
    """One reproducible run: geometry, measure, solver and verification knobs"""
    kind: ScenarioKind
    grid: GridConfig
    domain: DomainSpec = Field(default_factory=DomainSpec.whole_plane)
    x0: Optional[Point] = None
    alpha: Optional[float] = Field(None, gt=0)
    dplus: Optional[DomainSpec] = Field(None, description="Geometry of D+ for null quadrature pairs")
    green_mode: Optional[GreenMode] = Field(None, description="None selects the mode from the domain kind")
    solver: SolverSettings = Field(default_factory=SolverSettings)
    sandpile: SandpileSettings = Field(default_factory=SandpileSettings)
    verification: VerificationSettings = Field(default_factory=VerificationSettings)
    output_dir: str = settings.output_dir

    @model_validator(mode="after")
    def _kind_fields(self) -> "ScenarioConfig":
        if self.kind in (ScenarioKind.BALL, ScenarioKind.TWOPHASE_REFLECTION):
            if self.x0 is None or self.alpha is None:
                raise ValueError(f"{self.kind.value} scenarios require x0 and alpha")
        if self.kind == ScenarioKind.TWOPHASE_REFLECTION:
            if self.x0[1] <= 0:
                raise ValueError("reflection centre must lie in the upper half-plane")
            if abs(self.grid.y_min + self.grid.y_max) > 1e-9 * self.grid.h:
                raise ValueError("reflection scenarios need a grid symmetric about y = 0")
        if self.kind == ScenarioKind.NULLQD:
            if self.dplus is None:
                raise ValueError("nullqd scenarios require dplus geometry")
            if self.domain.kind != DomainKind.WHOLE_PLANE_BOX:
                raise ValueError("nullqd scenarios run in whole_plane_box mode")
        return self

    @classmethod
    def from_file(cls, path: str, overrides: Optional[List[str]] = None) -> "ScenarioConfig":
        """Load a JSON scenario and apply `key.sub=value` overrides"""
        config_path = Path(path)
        try:
            raw = orjson.loads(config_path.read_bytes())
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except (OSError, orjson.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(raw, overrides)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], overrides: Optional[List[str]] = None) -> "ScenarioConfig":
        document = apply_overrides(raw, overrides or [])
        try:
            return cls.model_validate(document)
        except ValidationError as e:
            raise ConfigError(f"invalid scenario config: {e}") from e


def apply_overrides(raw: Dict[str, Any], overrides: List[str]) -> Dict[str, Any]:
    """Return a copy of `raw` with dotted `key=value` assignments applied"""
    document = copy.deepcopy(raw)
    for override in overrides:
        if "=" not in override:
            raise ConfigError(f"override must look like key=value: {override!r}")
        key, text = override.split("=", 1)
        try:
            value = orjson.loads(text)
        except orjson.JSONDecodeError:
            value = text
        target = document
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = target.get(part)
            if not isinstance(node, dict):
                node = {}
                target[part] = node
            target = node
        target[parts[-1]] = value
    return document
