"""
Partial balayage service: projected SOR obstacle solver and divisible sandpile oracle
"""

from typing import Optional

import numpy as np
from loguru import logger
from scipy import ndimage

from ..errors import BoxTooSmall, NonConvergence, SupportTouchesBoundary
from ..models.balayage_models import BalayageResult, BoundaryMeasure, MeasureSpec
from ..models.grid_models import DomainKind, DomainMask, GridSpec, ScalarField
from ..models.scenario_models import SandpileSettings, SolverSettings
from .grid_service import (
    CROSS,
    distance_to_complement,
    interior_of_closure,
    omega_threshold,
    region_from_field,
    splat,
)
from .relaxation import discrete_laplacian, relax


def measure_density(grid: GridSpec, mu: MeasureSpec) -> np.ndarray:
    """Nodal density mu_h: splatted atoms divided by h^2 plus the uniform component"""
    density = np.zeros(grid.shape)
    for atom in mu.atoms:
        density += splat(grid, atom.location, atom.weight) / grid.h ** 2
    if mu.density_region is not None:
        component = mu.density_region
        density[component.region.members] += component.density
    return density


def extract_sweep_measure(u: ScalarField, mask: DomainMask) -> BoundaryMeasure:
    """nu_b = sum of u over the INTERIOR neighbours of each BOUNDARY node"""
    inner = np.where(mask.interior, u.values, 0.0)
    padded = np.pad(inner, 1)
    neighbours = padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
    weights = np.where(mask.boundary, neighbours, 0.0)
    return BoundaryMeasure(grid=mask.grid, weights=weights)


def occupancy(result: BalayageResult) -> ScalarField:
    """Fill-weighted lambda restricted to omega

    Weight 1 on omega; nodes of K next to omega that are not themselves in
    omega carry their partial fill clip(B, 0, 1).
    """
    members = result.omega.members
    weights = members.astype(float)
    if not members.any():
        return ScalarField(grid=result.grid, values=weights)
    near = ndimage.binary_dilation(members, structure=CROSS)
    frontier = near & ~members & result.mask.interior & (result.u.values <= result.threshold)
    weights[frontier] = np.clip(result.B.values[frontier], 0.0, 1.0)
    return ScalarField(grid=result.grid, values=weights)


def complementarity_residual(result: BalayageResult) -> float:
    """max over INTERIOR of |min(u, (1 - B) h^2)|"""
    interior = result.mask.interior
    if not interior.any():
        return 0.0
    gap = (1.0 - result.B.values) * result.grid.h ** 2
    return float(np.abs(np.minimum(result.u.values, gap))[interior].max())


def _check_support(mask: DomainMask, mu: MeasureSpec) -> None:
    grid = mask.grid
    for atom in mu.atoms:
        if distance_to_complement(mask, atom.location) < 2.0 * grid.h - 1e-12:
            raise SupportTouchesBoundary(f"atom at {atom.location} lies within 2h of the boundary of K")
    if mu.density_region is not None and (mu.density_region.region.members & ~mask.interior).any():
        raise SupportTouchesBoundary("density component reaches outside the interior of K")


def _check_margin(u: np.ndarray, mask: DomainMask, threshold: float, margin: int) -> None:
    if mask.kind not in (DomainKind.WHOLE_PLANE_BOX, DomainKind.HALF_PLANE) or threshold <= 0:
        return
    # Half-planes only need the three sides away from the line y = offset
    whole = mask.kind == DomainKind.WHOLE_PLANE_BOX
    strip = np.zeros(u.shape, dtype=bool)
    strip[:margin, :] = strip[-margin:, :] = True
    if whole or mask.domain.upper:
        strip[:, -margin:] = True
    if whole or not mask.domain.upper:
        strip[:, :margin] = True
    touched = strip & (u > threshold)
    if touched.any():
        i, j = np.argwhere(touched)[0]
        raise BoxTooSmall(
            f"solution reaches the {margin}-node margin strip at {mask.grid.point_of((int(i), int(j)))}; enlarge the box"
        )


class BalayageService:
    """Computes B_K mu together with omega, Omega and the sweeping measure"""

    def __init__(self, solver: Optional[SolverSettings] = None, sandpile_settings: Optional[SandpileSettings] = None):
        self.solver = solver or SolverSettings()
        self.sandpile_settings = sandpile_settings or SandpileSettings()

    def solve_obstacle(self, mask: DomainMask, mu: MeasureSpec) -> BalayageResult:
        """u >= 0, -Lap u >= mu_h - 1, complementarity on INTERIOR; u = 0 elsewhere"""
        _check_support(mask, mu)
        grid = mask.grid
        source = measure_density(grid, mu)
        mass = mu.total_mass()
        logger.info(f"Obstacle solve on {mask.kind.value}, {grid.nx}x{grid.ny} nodes, mass {mass:.6g}")

        outcome = relax(
            np.zeros(grid.shape),
            np.where(mask.interior, source - 1.0, 0.0),
            mask.interior,
            grid.h,
            relaxation=self.solver.relaxation,
            tolerance=self.solver.tolerance * max(mass, grid.h ** 2) / grid.h ** 2,
            max_sweeps=self.solver.max_sweeps,
            check_every=self.solver.check_every,
            project=True,
            label="obstacle",
        )
        return self._assemble(mask, mu, "obstacle", outcome.values, source, outcome.sweeps, outcome.residual)

    def sandpile(self, mask: DomainMask, mu: MeasureSpec) -> BalayageResult:
        """Divisible sandpile: topple the excess over capacity h^2 on INTERIOR nodes"""
        _check_support(mask, mu)
        grid = mask.grid
        settings = self.sandpile_settings
        source = measure_density(grid, mu)
        capacity = grid.h ** 2
        interior = mask.interior
        nx, ny = grid.shape
        pad = settings.check_every + 2
        logger.info(f"Sandpile on {mask.kind.value}, {nx}x{ny} nodes, mass {mu.total_mass():.6g}")

        mass = source * capacity
        odometer = np.zeros(grid.shape)
        rounds = 0
        excess_max = float(np.where(interior, mass - capacity, 0.0).max(initial=0.0))
        while excess_max > settings.tolerance * capacity:
            if rounds >= settings.max_rounds:
                raise NonConvergence(
                    f"sandpile did not stabilise in {settings.max_rounds} rounds",
                    iterations=rounds,
                    residual=excess_max / capacity,
                )
            idx = np.argwhere(interior & (mass > 0))
            i0, j0 = np.maximum(idx.min(axis=0) - pad, 1)
            i1 = min(int(idx[:, 0].max()) + pad + 1, nx - 1)
            j1 = min(int(idx[:, 1].max()) + pad + 1, ny - 1)
            window_interior = interior[i0:i1, j0:j1]
            for _ in range(settings.check_every):
                excess = np.where(window_interior, mass[i0:i1, j0:j1] - capacity, 0.0)
                np.maximum(excess, 0.0, out=excess)
                share = excess / 4.0
                mass[i0:i1, j0:j1] -= excess
                mass[i0 - 1:i1 - 1, j0:j1] += share
                mass[i0 + 1:i1 + 1, j0:j1] += share
                mass[i0:i1, j0 - 1:j1 - 1] += share
                mass[i0:i1, j0 + 1:j1 + 1] += share
                odometer[i0:i1, j0:j1] += excess
                rounds += 1
            excess_max = float(np.where(interior, mass - capacity, 0.0).max(initial=0.0))

        logger.info(f"Sandpile stable after {rounds} rounds, excess {excess_max / capacity:.3e}")
        return self._assemble(mask, mu, "sandpile", odometer / 4.0, source, rounds, max(excess_max, 0.0) / capacity)

    def _assemble(
        self,
        mask: DomainMask,
        mu: MeasureSpec,
        method: str,
        u: np.ndarray,
        source: np.ndarray,
        iterations: int,
        residual: float,
    ) -> BalayageResult:
        grid = mask.grid
        u = np.where(mask.interior, u, 0.0)
        threshold = omega_threshold(u, self.solver.threshold_factor)
        _check_margin(u, mask, threshold, self.solver.margin_nodes)

        field = ScalarField(grid=grid, values=u)
        B = np.where(mask.interior, source + discrete_laplacian(u, grid.h), 0.0)
        omega = region_from_field(field, mask, self.solver.threshold_factor)
        omega_big = interior_of_closure(omega, mask)
        if omega_big.count != omega.count:
            logger.warning(f"{method}: Omega exceeds omega by {omega_big.count - omega.count} nodes")
        nu = extract_sweep_measure(field, mask)

        result = BalayageResult(
            mask=mask,
            mu=mu,
            method=method,
            u=field,
            omega=omega,
            omega_big=omega_big,
            B=ScalarField(grid=grid, values=B),
            source=ScalarField(grid=grid, values=source),
            nu=nu,
            threshold=threshold,
            iterations=iterations,
            residual=residual,
        )
        logger.info(
            f"{method}: |omega| = {omega.count} nodes, area {omega.count * grid.h ** 2:.6g}, nu total {nu.total:.3e}"
        )
        return result
