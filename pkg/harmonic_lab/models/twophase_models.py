"""
Two-phase configuration models
"""

from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .balayage_models import MeasureSpec
from .ball_models import BallResult
from .grid_models import ComplexField, GridSpec, Point, RegionMask, ScalarField


class InterfaceEdge(BaseModel):
    """Grid edge of Gamma separating a D+ node from a D- node"""
    model_config = ConfigDict(frozen=True)

    midpoint: Point
    plus_node: Tuple[int, int]
    minus_node: Tuple[int, int]


class TwoPhaseResult(BaseModel):
    """Region pair (D+, D-) with its potential and Schwarz fields"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    construction: str = Field(..., description="reflection or null_pair")
    D_plus: RegionMask
    D_minus: RegionMask
    gamma: List[InterfaceEdge] = Field(default_factory=list)
    u: ScalarField
    weight_plus: ScalarField = Field(..., description="Occupancy of D+ (fill-weighted lambda)")
    weight_minus: ScalarField = Field(..., description="Occupancy of D-")
    beta_plus: float = Field(1.0, gt=0)
    beta_minus: float = Field(1.0, gt=0)
    mu_plus: MeasureSpec = Field(default_factory=MeasureSpec)
    mu_minus: MeasureSpec = Field(default_factory=MeasureSpec)
    S_plus: ComplexField
    S_minus: ComplexField
    exclusion_radius: float = 0.0
    ball: Optional[BallResult] = Field(None, description="One-phase ball behind a reflection pair")

    @model_validator(mode="after")
    def _disjoint(self) -> "TwoPhaseResult":
        if (self.D_plus.members & self.D_minus.members).any():
            raise ValueError("D+ and D- must be disjoint")
        return self

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def gamma_midpoints(self) -> List[Point]:
        return [edge.midpoint for edge in self.gamma]
