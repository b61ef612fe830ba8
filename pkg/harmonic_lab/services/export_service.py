"""
Artifact export: PGM masks, CSV fields and the JSON summary
"""

from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import orjson
from loguru import logger

from ..models.balayage_models import BalayageResult, BoundaryMeasure
from ..models.grid_models import ComplexField, RegionMask, ScalarField
from ..models.twophase_models import InterfaceEdge, TwoPhaseResult

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
SWEEP_COLUMNS = "value,lambda_omega,nu_total,max_residual,solver_residual,exit_code,monotone"
SWEEP_FORMATS = ["%.10g"] * 5 + ["%d", "%s"]


def write_pgm(path: Path, region: RegionMask) -> Path:
    """Binary PGM (P5), 255 = member; first row is the top of the box"""
    image = np.where(region.members.T[::-1], 255, 0).astype(np.uint8)
    rows, cols = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(image.tobytes())
    return path


def read_pgm(path: Path) -> np.ndarray:
    """Inverse of write_pgm: boolean members indexed [i, j]"""
    data = Path(path).read_bytes()
    magic, size, maxval, payload = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError(f"{path} is not an 8-bit binary PGM")
    cols, rows = (int(v) for v in size.split())
    image = np.frombuffer(payload, dtype=np.uint8, count=rows * cols).reshape(rows, cols)
    return (image[::-1].T == 255)


def write_scalar_csv(path: Path, field: ScalarField) -> Path:
    X, Y = field.grid.coordinates()
    rows = np.column_stack([X.ravel(), Y.ravel(), field.values.ravel()])
    np.savetxt(path, rows, delimiter=",", header="x,y,value", comments="", fmt="%.10g")
    return path


def write_boundary_csv(path: Path, nu: BoundaryMeasure) -> Path:
    np.savetxt(path, nu.points().reshape(-1, 3), delimiter=",", header="x,y,weight", comments="", fmt="%.10g")
    return path


def write_complex_csv(path: Path, field: ComplexField) -> Path:
    idx = np.argwhere(field.defined)
    g = field.grid
    values = field.values[idx[:, 0], idx[:, 1]]
    rows = np.column_stack([g.x_min + idx[:, 0] * g.h, g.y_min + idx[:, 1] * g.h, values.real, values.imag])
    np.savetxt(path, rows.reshape(-1, 4), delimiter=",", header="x,y,re,im", comments="", fmt="%.10g")
    return path


def write_gamma_csv(path: Path, gamma: Sequence[InterfaceEdge]) -> Path:
    rows = np.array([edge.midpoint for edge in gamma], dtype=float).reshape(-1, 2)
    np.savetxt(path, rows, delimiter=",", header="x,y", comments="", fmt="%.10g")
    return path


def write_summary(path: Path, summary: Dict[str, Any]) -> Path:
    Path(path).write_bytes(orjson.dumps(summary, option=JSON_OPTIONS))
    return path


def write_sweep_csv(path: Path, rows: Sequence[Sequence[Any]]) -> Path:
    """One row per sweep value: five measured numbers, the exit code and the monotonicity verdict"""
    table = np.array(rows, dtype=object).reshape(-1, len(SWEEP_FORMATS))
    np.savetxt(path, table, delimiter=",", header=SWEEP_COLUMNS, comments="", fmt=SWEEP_FORMATS)
    return path


def export_balayage(result: BalayageResult, out_dir: Path) -> List[str]:
    """omega.pgm, omega_big.pgm, u.csv, nu.csv"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_pgm(out_dir / "omega.pgm", result.omega)
    write_pgm(out_dir / "omega_big.pgm", result.omega_big)
    write_scalar_csv(out_dir / "u.csv", result.u)
    write_boundary_csv(out_dir / "nu.csv", result.nu)
    logger.debug(f"Wrote balayage artifacts to {out_dir}")
    return ["omega.pgm", "omega_big.pgm", "u.csv", "nu.csv"]


def export_twophase(tp: TwoPhaseResult, out_dir: Path) -> List[str]:
    """Phase masks, S fields and Gamma midpoints"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_pgm(out_dir / "d_plus.pgm", tp.D_plus)
    write_pgm(out_dir / "d_minus.pgm", tp.D_minus)
    write_complex_csv(out_dir / "S_plus.csv", tp.S_plus)
    write_complex_csv(out_dir / "S_minus.csv", tp.S_minus)
    write_gamma_csv(out_dir / "gamma.csv", tp.gamma)
    logger.debug(f"Wrote two-phase artifacts to {out_dir}")
    return ["d_plus.pgm", "d_minus.pgm", "S_plus.csv", "S_minus.csv", "gamma.csv"]
