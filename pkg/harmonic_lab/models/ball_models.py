"""
Subharmonic ball and verification report models
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

from .balayage_models import BalayageResult
from .grid_models import DomainMask, Point


class BallResult(BaseModel):
    """Subharmonic ball D(x0, alpha) = omega(K, alpha * delta_x0)"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    center: Point
    alpha: float = Field(..., gt=0, description="Size of the ball")
    balayage: BalayageResult
    mask: DomainMask

    @property
    def grid(self):
        return self.mask.grid


class CheckItem(BaseModel):
    """One measured quantity compared against its tolerance"""
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""
    violations: List[Point] = Field(default_factory=list)


class CheckReport(BaseModel):
    """Named group of checks; passes iff every item passes"""
    name: str
    items: List[CheckItem] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def add(self, name: str, value: float, tolerance: float, passed: bool, detail: str = "",
            violations: Optional[List[Point]] = None) -> CheckItem:
        item = CheckItem(
            name=name,
            value=float(value),
            tolerance=float(tolerance),
            passed=bool(passed),
            detail=detail,
            violations=list(violations or [])[:50],
        )
        self.items.append(item)
        return item

    def item(self, name: str) -> CheckItem:
        for item in self.items:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_summary(self) -> Dict[str, Any]:
        """{check_name: {value, tol, pass}} plus the overall flag"""
        summary: Dict[str, Any] = {
            item.name: {"value": item.value, "tol": item.tolerance, "pass": item.passed}
            for item in self.items
        }
        summary["overall"] = self.passed
        return summary
