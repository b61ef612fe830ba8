"""
Grid, domain and field models
"""

from enum import Enum, IntEnum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Point = Tuple[float, float]


class DomainKind(str, Enum):
    """Kinds of planar domain K"""
    WHOLE_PLANE_BOX = "whole_plane_box"
    HALF_PLANE = "half_plane"
    DISC = "disc"
    RECTANGLE = "rectangle"
    POLYGON = "polygon"


class NodeClass(IntEnum):
    """Per-node classification relative to K"""
    INTERIOR = 0
    BOUNDARY = 1
    EXTERIOR = 2


class GreenMode(str, Enum):
    """How Green functions of K are evaluated"""
    ANALYTIC = "analytic"
    NUMERIC = "numeric"
    FREE_SPACE = "free_space"


def _readonly(values: np.ndarray) -> np.ndarray:
    values.flags.writeable = False
    return values


class GridSpec(BaseModel):
    """Uniform square grid; node (i, j) sits at (x_min + i*h, y_min + j*h)"""
    model_config = ConfigDict(frozen=True)

    x_min: float = Field(..., description="x coordinate of node (0, 0)")
    y_min: float = Field(..., description="y coordinate of node (0, 0)")
    h: float = Field(..., gt=0, description="Node spacing in both axes")
    nx: int = Field(..., ge=3, description="Node count along x")
    ny: int = Field(..., ge=3, description="Node count along y")

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, y_min: float, y_max: float, h: float) -> "GridSpec":
        """Grid covering [x_min, x_max] x [y_min, y_max] at spacing h"""
        nx = int(round((x_max - x_min) / h)) + 1
        ny = int(round((y_max - y_min) / h)) + 1
        return cls(x_min=x_min, y_min=y_min, h=h, nx=nx, ny=ny)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x_max(self) -> float:
        return self.x_min + (self.nx - 1) * self.h

    @property
    def y_max(self) -> float:
        return self.y_min + (self.ny - 1) * self.h

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y_min + self.h * np.arange(self.ny)

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays X, Y of shape (nx, ny)"""
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def complex_coordinates(self) -> np.ndarray:
        X, Y = self.coordinates()
        return X + 1j * Y

    def fractional_index(self, point: Point) -> Tuple[float, float]:
        """Continuous node index of a point, snapped onto nodes within 1e-9"""
        fi = (point[0] - self.x_min) / self.h
        fj = (point[1] - self.y_min) / self.h
        if abs(fi - round(fi)) < 1e-9:
            fi = float(round(fi))
        if abs(fj - round(fj)) < 1e-9:
            fj = float(round(fj))
        return fi, fj

    def node_of(self, point: Point) -> Tuple[int, int]:
        """Nearest node to a point"""
        fi, fj = self.fractional_index(point)
        return int(np.rint(fi)), int(np.rint(fj))

    def point_of(self, node: Tuple[int, int]) -> Point:
        return (self.x_min + node[0] * self.h, self.y_min + node[1] * self.h)

    def contains_node(self, node: Tuple[int, int]) -> bool:
        return 0 <= node[0] < self.nx and 0 <= node[1] < self.ny

    def is_symmetric_about_x_axis(self) -> bool:
        """True when the row y = 0 is the middle row of the grid"""
        if self.ny % 2 == 0:
            return False
        middle = self.y_min + (self.ny - 1) // 2 * self.h
        return abs(middle) <= 1e-9 * self.h


class DomainSpec(BaseModel):
    """Geometric description of K in grid coordinates"""
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    kind: DomainKind
    offset: float = Field(0.0, description="Half-plane boundary line y = offset")
    upper: bool = Field(True, description="Half-plane lies above (True) or below the line")
    center: Optional[Point] = Field(None, description="Disc centre")
    radius: Optional[float] = Field(None, description="Disc radius")
    corners: Optional[Tuple[float, float, float, float]] = Field(
        None, description="Rectangle (x_lo, y_lo, x_hi, y_hi)"
    )
    vertices: Optional[List[Point]] = Field(None, description="Polygon vertices in order")

    @model_validator(mode="after")
    def _check_parameters(self) -> "DomainSpec":
        if self.kind == DomainKind.DISC:
            if self.center is None or self.radius is None:
                raise ValueError("disc requires center and radius")
            if self.radius <= 0:
                raise ValueError("disc radius must be positive")
        elif self.kind == DomainKind.RECTANGLE:
            if self.corners is None:
                raise ValueError("rectangle requires corners")
            x_lo, y_lo, x_hi, y_hi = self.corners
            if not (x_lo < x_hi and y_lo < y_hi):
                raise ValueError("rectangle corners must be (x_lo, y_lo, x_hi, y_hi)")
        elif self.kind == DomainKind.POLYGON:
            if not self.vertices or len(self.vertices) < 3:
                raise ValueError("polygon requires at least three vertices")
        return self

    @classmethod
    def whole_plane(cls) -> "DomainSpec":
        return cls(kind=DomainKind.WHOLE_PLANE_BOX)

    @classmethod
    def half_plane(cls, offset: float = 0.0, upper: bool = True) -> "DomainSpec":
        return cls(kind=DomainKind.HALF_PLANE, offset=offset, upper=upper)

    @classmethod
    def disc(cls, center: Point, radius: float) -> "DomainSpec":
        return cls(kind=DomainKind.DISC, center=center, radius=radius)

    @classmethod
    def rectangle(cls, x_lo: float, y_lo: float, x_hi: float, y_hi: float) -> "DomainSpec":
        return cls(kind=DomainKind.RECTANGLE, corners=(x_lo, y_lo, x_hi, y_hi))

    @classmethod
    def polygon(cls, vertices: List[Point]) -> "DomainSpec":
        return cls(kind=DomainKind.POLYGON, vertices=list(vertices))


class _GridArray(BaseModel):
    """Common base for models that carry one array per grid node"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: GridSpec

    def _check_shape(self, values: np.ndarray) -> None:
        if values.shape != self.grid.shape:
            raise ValueError(f"array shape {values.shape} does not match grid {self.grid.shape}")


class DomainMask(_GridArray):
    """Classification of every node as INTERIOR, BOUNDARY or EXTERIOR"""
    domain: DomainSpec
    classes: np.ndarray = Field(..., description="int8 NodeClass per node")

    @model_validator(mode="after")
    def _validate(self) -> "DomainMask":
        self._check_shape(self.classes)
        _readonly(self.classes)
        return self

    @property
    def interior(self) -> np.ndarray:
        return self.classes == NodeClass.INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.classes == NodeClass.BOUNDARY

    @property
    def exterior(self) -> np.ndarray:
        return self.classes == NodeClass.EXTERIOR

    @property
    def kind(self) -> DomainKind:
        return self.domain.kind


class RegionMask(_GridArray):
    """Membership bit per node"""
    members: np.ndarray

    @field_validator("members")
    @classmethod
    def _as_bool(cls, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=bool)

    @model_validator(mode="after")
    def _validate(self) -> "RegionMask":
        self._check_shape(self.members)
        _readonly(self.members)
        return self

    @classmethod
    def empty(cls, grid: GridSpec) -> "RegionMask":
        return cls(grid=grid, members=np.zeros(grid.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.members.sum())

    def is_empty(self) -> bool:
        return not self.members.any()

    def points(self) -> np.ndarray:
        """Member coordinates as an (n, 2) array"""
        idx = np.argwhere(self.members)
        return np.column_stack([self.grid.x_min + idx[:, 0] * self.grid.h, self.grid.y_min + idx[:, 1] * self.grid.h])


class ScalarField(_GridArray):
    """One real value per node"""
    values: np.ndarray

    @model_validator(mode="after")
    def _validate(self) -> "ScalarField":
        self._check_shape(self.values)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scalar field contains non-finite values")
        _readonly(self.values)
        return self

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid=grid, values=np.zeros(grid.shape))


class ComplexField(_GridArray):
    """One complex value per node; nodes outside `defined` hold zero"""
    values: np.ndarray
    defined: np.ndarray

    @model_validator(mode="after")
    def _validate(self) -> "ComplexField":
        self._check_shape(self.values)
        self._check_shape(self.defined)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("complex field contains non-finite values")
        _readonly(self.values)
        _readonly(self.defined)
        return self

    def max_modulus(self) -> float:
        if not self.defined.any():
            return 0.0
        return float(np.abs(self.values[self.defined]).max())
