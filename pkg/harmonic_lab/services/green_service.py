"""
Green function service: logarithmic kernel, image formulas and numeric Dirichlet solves
"""

import math
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.interpolate import RegularGridInterpolator

from ..errors import CoincidentPoints, ConfigError, SourceTooCloseToBoundary
from ..models.grid_models import DomainKind, DomainMask, GreenMode, Point, ScalarField
from ..models.scenario_models import SolverSettings
from .grid_service import distance_to_complement, splat
from .relaxation import relax

INV_2PI = 1.0 / (2.0 * math.pi)

# Mean of ln|x| over an h x h cell centred at the origin is ln(h) + SELF_CELL_LOG
SELF_CELL_LOG = 0.5 * (math.pi / 2.0 - 3.0 - math.log(2.0))


def _separation(x: Point, y: Point) -> float:
    d = math.hypot(x[0] - y[0], x[1] - y[1])
    if d == 0.0:
        raise CoincidentPoints(f"kernel evaluated at coincident points {x}")
    return d


def log_kernel(x: Point, y: Point) -> float:
    """-(1/2pi) ln|x - y|, the fundamental solution with -Lap U = delta"""
    return -INV_2PI * math.log(_separation(x, y))


def green_halfplane(x: Point, y: Point, offset: float = 0.0, upper: bool = True) -> float:
    """Green function of {y > offset} (or {y < offset}) by the method of images"""
    _separation(x, y)
    zx, zy = x[1] - offset, y[1] - offset
    if not upper:
        zx, zy = -zx, -zy
    if zx <= 0.0 or zy <= 0.0:
        return 0.0
    direct = math.hypot(x[0] - y[0], zx - zy)
    image = math.hypot(x[0] - y[0], zx + zy)
    return INV_2PI * math.log(image / direct)


def green_disc(x: Point, y: Point, center: Point = (0.0, 0.0), radius: float = 1.0) -> float:
    """Green function of the disc |z - center| < radius"""
    _separation(x, y)
    z = complex(x[0] - center[0], x[1] - center[1])
    w = complex(y[0] - center[0], y[1] - center[1])
    if abs(z) >= radius or abs(w) >= radius:
        return 0.0
    value = INV_2PI * math.log(abs(radius * radius - z * w.conjugate()) / (radius * abs(z - w)))
    return max(value, 0.0)


def green_numeric(mask: DomainMask, source: Point, solver: Optional[SolverSettings] = None) -> ScalarField:
    """Discrete Green function: -Lap_h g = splat(source)/h^2 on INTERIOR, g = 0 elsewhere"""
    solver = solver or SolverSettings()
    grid = mask.grid
    if distance_to_complement(mask, source) < 2.0 * grid.h - 1e-12:
        raise SourceTooCloseToBoundary(f"source {source} lies within 2h of the boundary of K")

    rhs = splat(grid, source, 1.0) / grid.h ** 2
    outcome = relax(
        np.zeros(grid.shape),
        rhs,
        mask.interior,
        grid.h,
        relaxation=solver.relaxation,
        tolerance=solver.tolerance / grid.h ** 2,
        max_sweeps=solver.max_sweeps,
        check_every=solver.check_every,
        project=False,
        label=f"green({source[0]:.4g}, {source[1]:.4g})",
    )
    values = outcome.values
    values[~mask.interior] = 0.0
    return ScalarField(grid=grid, values=values)


def default_mode(kind: DomainKind) -> GreenMode:
    if kind in (DomainKind.HALF_PLANE, DomainKind.DISC):
        return GreenMode.ANALYTIC
    if kind == DomainKind.WHOLE_PLANE_BOX:
        return GreenMode.FREE_SPACE
    return GreenMode.NUMERIC


class GreenEvaluator:
    """Evaluates G_K(x, y) and whole-grid slices G_K(., x) for one domain"""

    def __init__(self, mask: DomainMask, mode: Optional[GreenMode] = None, solver: Optional[SolverSettings] = None):
        self.mask = mask
        self.mode = mode or default_mode(mask.kind)
        self.solver = solver or SolverSettings()
        if self.mode == GreenMode.ANALYTIC and mask.kind not in (DomainKind.HALF_PLANE, DomainKind.DISC):
            raise ConfigError(f"analytic Green function unavailable for {mask.kind.value}")
        if self.mode == GreenMode.FREE_SPACE and mask.kind != DomainKind.WHOLE_PLANE_BOX:
            raise ConfigError("free-space kernel only stands in for the whole plane")
        self._numeric_cache: Dict[Tuple[float, float], ScalarField] = {}
        logger.debug(f"Green evaluator for {mask.kind.value} in {self.mode.value} mode")

    def value(self, x: Point, y: Point) -> float:
        domain = self.mask.domain
        if self.mode == GreenMode.FREE_SPACE:
            return log_kernel(x, y)
        if self.mode == GreenMode.ANALYTIC:
            if domain.kind == DomainKind.HALF_PLANE:
                return green_halfplane(x, y, domain.offset, domain.upper)
            return green_disc(x, y, domain.center, domain.radius)
        _separation(x, y)
        grid = self.mask.grid
        interpolator = RegularGridInterpolator(
            (grid.xs, grid.ys), self.numeric_field(x).values, bounds_error=False, fill_value=0.0
        )
        return float(interpolator([y])[0])

    def numeric_field(self, source: Point) -> ScalarField:
        key = (round(source[0], 12), round(source[1], 12))
        if key not in self._numeric_cache:
            self._numeric_cache[key] = green_numeric(self.mask, source, self.solver)
        return self._numeric_cache[key]

    def field(self, x: Point) -> np.ndarray:
        """G_K(y, x) at every node y; a node sitting on x carries the cell average"""
        if self.mode == GreenMode.NUMERIC:
            return np.array(self.numeric_field(x).values)

        grid = self.mask.grid
        z = grid.complex_coordinates()
        w = complex(*x)
        distance = np.abs(z - w)
        on_source = distance < 1e-9 * grid.h
        safe = np.where(on_source, 1.0, distance)
        singular = -INV_2PI * np.log(safe)
        singular[on_source] = -INV_2PI * (math.log(grid.h) + SELF_CELL_LOG)
        if self.mode == GreenMode.FREE_SPACE:
            return singular

        domain = self.mask.domain
        if domain.kind == DomainKind.HALF_PLANE:
            sign = 1.0 if domain.upper else -1.0
            if sign * (w.imag - domain.offset) <= 0:
                return np.zeros(grid.shape)
            mirror = complex(w.real, 2.0 * domain.offset - w.imag)
            with np.errstate(divide="ignore"):
                regular = INV_2PI * np.log(np.abs(z - mirror))
            inside = sign * (z.imag - domain.offset) > 0
        else:
            c = complex(*domain.center)
            R = domain.radius
            if abs(w - c) >= R:
                return np.zeros(grid.shape)
            with np.errstate(divide="ignore"):
                regular = INV_2PI * np.log(np.abs(R * R - (z - c) * np.conj(w - c)) / R)
            inside = np.abs(z - c) < R
        values = np.where(inside, singular + regular, 0.0)
        return np.maximum(values, 0.0)
