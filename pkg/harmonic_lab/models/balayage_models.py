"""
Measure and partial balayage result models
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .grid_models import DomainMask, GridSpec, Point, RegionMask, ScalarField


class Atom(BaseModel):
    """Weighted point mass"""
    model_config = ConfigDict(frozen=True)

    location: Point
    weight: float = Field(..., gt=0)


class DensityComponent(BaseModel):
    """Uniform density c on a region, e.g. 2*lambda restricted to D+"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    region: RegionMask
    density: float = Field(..., ge=0)


class MeasureSpec(BaseModel):
    """Finite sum of point masses plus an optional uniform density component"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    atoms: List[Atom] = Field(default_factory=list)
    density_region: Optional[DensityComponent] = None

    @classmethod
    def point_mass(cls, location: Point, weight: float) -> "MeasureSpec":
        return cls(atoms=[Atom(location=location, weight=weight)])

    @classmethod
    def uniform(cls, region: RegionMask, density: float) -> "MeasureSpec":
        return cls(density_region=DensityComponent(region=region, density=density))

    def is_empty(self) -> bool:
        if self.atoms:
            return False
        return self.density_region is None or self.density_region.density == 0 or self.density_region.region.is_empty()

    def total_mass(self) -> float:
        mass = sum(atom.weight for atom in self.atoms)
        if self.density_region is not None:
            region = self.density_region.region
            mass += self.density_region.density * region.count * region.grid.h ** 2
        return float(mass)

    def atom_locations(self) -> List[Point]:
        return [atom.location for atom in self.atoms]


class BoundaryMeasure(BaseModel):
    """Signed weights on BOUNDARY nodes (zero elsewhere), in mass units"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: GridSpec
    weights: np.ndarray

    @model_validator(mode="after")
    def _validate(self) -> "BoundaryMeasure":
        if self.weights.shape != self.grid.shape:
            raise ValueError("boundary measure shape does not match grid")
        self.weights.flags.writeable = False
        return self

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def min_weight(self, support: Optional[np.ndarray] = None) -> float:
        values = self.weights if support is None else self.weights[support]
        return float(values.min()) if values.size else 0.0

    def points(self) -> np.ndarray:
        """Rows (x, y, weight) for every node with nonzero weight"""
        idx = np.argwhere(self.weights != 0)
        g = self.grid
        return np.column_stack([
            g.x_min + idx[:, 0] * g.h,
            g.y_min + idx[:, 1] * g.h,
            self.weights[idx[:, 0], idx[:, 1]],
        ])


class BalayageResult(BaseModel):
    """Outcome of a partial balayage solve"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mask: DomainMask
    mu: MeasureSpec
    method: str = Field(..., description="obstacle or sandpile")
    u: ScalarField = Field(..., description="Deficiency potential W_K mu")
    omega: RegionMask = Field(..., description="Non-coincidence set {u > theta}")
    omega_big: RegionMask = Field(..., description="Interior of the closure of omega, within K")
    B: ScalarField = Field(..., description="Density of the balayage measure on K")
    source: ScalarField = Field(..., description="Discrete density mu_h of the input measure")
    nu: BoundaryMeasure
    threshold: float = Field(..., description="Threshold theta used to extract omega")
    iterations: int
    residual: float

    @property
    def grid(self) -> GridSpec:
        return self.mask.grid

    @property
    def total_mass(self) -> float:
        return self.mu.total_mass()
