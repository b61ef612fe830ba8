"""
Red-black successive over-relaxation for the 5-point Laplacian
"""

from typing import NamedTuple, Optional, Tuple

import numpy as np
from loguru import logger

from ..errors import NonConvergence

Window = Tuple[int, int, int, int]


class RelaxationOutcome(NamedTuple):
    values: np.ndarray
    sweeps: int
    residual: float


def discrete_laplacian(u: np.ndarray, h: float) -> np.ndarray:
    """5-point Laplacian at inner nodes; zero on the outermost ring"""
    lap = np.zeros_like(u, dtype=float)
    lap[1:-1, 1:-1] = (
        u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2] + u[1:-1, 2:] - 4.0 * u[1:-1, 1:-1]
    ) / (h * h)
    return lap


def residual(u: np.ndarray, rhs: np.ndarray, h: float, active: np.ndarray, project: bool) -> float:
    """Largest violation of -Lap u = rhs (or of the complementarity system when projecting)"""
    if not active.any():
        return 0.0
    r = -discrete_laplacian(u, h) - rhs
    if project:
        r = np.where(u > 0, np.abs(r), np.maximum(-r, 0.0))
    else:
        r = np.abs(r)
    return float(r[active].max())


def _window(u: np.ndarray, rhs: np.ndarray, active: np.ndarray, pad: int) -> Optional[Window]:
    support = active & ((u != 0) | (rhs > 0))
    if not support.any():
        return None
    idx = np.argwhere(support)
    nx, ny = u.shape
    i0, j0 = idx.min(axis=0) - pad
    i1, j1 = idx.max(axis=0) + pad + 1
    return max(int(i0), 1), min(int(i1), nx - 1), max(int(j0), 1), min(int(j1), ny - 1)


def relax(
    u0: np.ndarray,
    rhs: np.ndarray,
    active: np.ndarray,
    h: float,
    *,
    relaxation: float,
    tolerance: float,
    max_sweeps: int,
    check_every: int,
    project: bool,
    label: str = "sor",
) -> RelaxationOutcome:
    """Solve -Lap_h u = rhs on `active` nodes, u fixed elsewhere

    With `project` the iterate is clipped at zero after every update, which
    turns the scheme into projected SOR for the complementarity problem
    u >= 0, -Lap_h u >= rhs, u * (-Lap_h u - rhs) = 0.

    Work is restricted to a padded bounding box of the nodes where u is
    nonzero or rhs is positive; the box is refreshed at every residual
    check and the residual itself is always taken over the full array.
    Nodes on the outermost ring of the array must not be active.
    """
    u = np.array(u0, dtype=float, copy=True)
    rhs_h2 = rhs * h * h
    I, J = np.indices(u.shape)
    colours = (active & ((I + J) % 2 == 0), active & ((I + J) % 2 == 1))
    pad = 2 * check_every + 2

    res = residual(u, rhs, h, active, project)
    sweeps = 0
    logger.debug(f"{label}: start residual {res:.3e}, target {tolerance:.3e}")
    while res > tolerance:
        if sweeps >= max_sweeps:
            logger.error(f"{label}: no convergence after {sweeps} sweeps, residual {res:.3e}")
            raise NonConvergence(
                f"{label} did not converge in {max_sweeps} sweeps (residual {res:.3e} > {tolerance:.3e})",
                iterations=sweeps,
                residual=res,
            )
        window = _window(u, rhs, active, pad)
        if window is None:
            break
        i0, i1, j0, j1 = window
        for _ in range(min(check_every, max_sweeps - sweeps)):
            for colour in colours:
                centre = u[i0:i1, j0:j1]
                neighbours = (
                    u[i0 - 1:i1 - 1, j0:j1] + u[i0 + 1:i1 + 1, j0:j1]
                    + u[i0:i1, j0 - 1:j1 - 1] + u[i0:i1, j0 + 1:j1 + 1]
                )
                updated = centre + relaxation * ((neighbours + rhs_h2[i0:i1, j0:j1]) / 4.0 - centre)
                if project:
                    np.maximum(updated, 0.0, out=updated)
                pick = colour[i0:i1, j0:j1]
                centre[pick] = updated[pick]
            sweeps += 1
        res = residual(u, rhs, h, active, project)
        if sweeps % (check_every * 100) == 0:
            logger.debug(f"{label}: sweep {sweeps}, residual {res:.3e}")

    logger.info(f"{label}: converged in {sweeps} sweeps, residual {res:.3e}")
    return RelaxationOutcome(values=u, sweeps=sweeps, residual=res)
