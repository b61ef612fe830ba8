"""
Grid service: domain masks, region masks, quadrature and geometric predicates
"""

from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from matplotlib.path import Path
from scipy import ndimage

from ..errors import CenterOutsideRegion, DisconnectedDomain, GeometryOutOfBounds, GridMismatch, InvalidGeometry
from ..models.grid_models import (
    ComplexField,
    DomainKind,
    DomainMask,
    DomainSpec,
    GridSpec,
    NodeClass,
    Point,
    RegionMask,
    ScalarField,
)

# 4-neighbourhood and 8-neighbourhood structuring elements
CROSS = ndimage.generate_binary_structure(2, 1)
SQUARE = ndimage.generate_binary_structure(2, 2)

DEFAULT_THRESHOLD_FACTOR = float(np.sqrt(np.finfo(float).eps))


def build_domain_mask(grid: GridSpec, domain: DomainSpec) -> DomainMask:
    """Classify every node of `grid` relative to the open set K"""
    _check_fits(grid, domain)
    inside = inside_open(grid, domain)

    box_edge = np.zeros(grid.shape, dtype=bool)
    box_edge[0, :] = box_edge[-1, :] = True
    box_edge[:, 0] = box_edge[:, -1] = True
    interior = inside & ~box_edge

    _, components = ndimage.label(interior, structure=CROSS)
    if components == 0:
        raise DisconnectedDomain(f"{domain.kind.value} domain has no interior nodes on this grid")
    if components > 1:
        raise DisconnectedDomain(f"{domain.kind.value} interior splits into {components} components")

    adjacent = ndimage.binary_dilation(interior, structure=CROSS) & ~interior
    classes = np.full(grid.shape, NodeClass.EXTERIOR, dtype=np.int8)
    classes[adjacent] = NodeClass.BOUNDARY
    classes[interior] = NodeClass.INTERIOR

    logger.debug(
        f"Domain {domain.kind.value}: {int(interior.sum())} interior, {int(adjacent.sum())} boundary nodes"
    )
    return DomainMask(grid=grid, domain=domain, classes=classes)


def inside_open(grid: GridSpec, domain: DomainSpec) -> np.ndarray:
    """Nodes whose coordinates lie in the open set K (box edges not removed)"""
    X, Y = grid.coordinates()
    eps = 1e-9 * grid.h
    kind = domain.kind

    if kind == DomainKind.WHOLE_PLANE_BOX:
        return np.ones(grid.shape, dtype=bool)
    if kind == DomainKind.HALF_PLANE:
        if domain.upper:
            return Y > domain.offset + eps
        return Y < domain.offset - eps
    if kind == DomainKind.DISC:
        cx, cy = domain.center
        return np.hypot(X - cx, Y - cy) < domain.radius - eps
    if kind == DomainKind.RECTANGLE:
        x_lo, y_lo, x_hi, y_hi = domain.corners
        return (X > x_lo + eps) & (X < x_hi - eps) & (Y > y_lo + eps) & (Y < y_hi - eps)

    # Polygon: strictly inside and not on an edge
    vertices = np.asarray(domain.vertices, dtype=float)
    if not polygon_is_simple(vertices):
        raise InvalidGeometry("polygon is self-intersecting")
    points = np.column_stack([X.ravel(), Y.ravel()])
    contained = Path(vertices, closed=False).contains_points(points)
    on_edge = _distance_to_polyline(points, np.vstack([vertices, vertices[:1]])) <= eps
    return (contained & ~on_edge).reshape(grid.shape)


def region_from_domain(grid: GridSpec, domain: DomainSpec) -> RegionMask:
    """Region made of the nodes lying in the open set described by `domain`"""
    _check_fits(grid, domain)
    return RegionMask(grid=grid, members=inside_open(grid, domain))


def polygon_is_simple(vertices: np.ndarray) -> bool:
    """True when no two non-adjacent edges intersect and no edge is degenerate"""
    n = len(vertices)
    starts = vertices
    ends = np.roll(vertices, -1, axis=0)
    if np.any(np.all(np.isclose(starts, ends), axis=1)):
        return False
    for a in range(n):
        for b in range(a + 1, n):
            if b == a + 1 or (a == 0 and b == n - 1):
                continue
            if _segments_intersect(starts[a], ends[a], starts[b], ends[b]):
                return False
    return True


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    def on_segment(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    if d1 == 0 and on_segment(q1, q2, p1):
        return True
    if d2 == 0 and on_segment(q1, q2, p2):
        return True
    if d3 == 0 and on_segment(p1, p2, q1):
        return True
    return d4 == 0 and on_segment(p1, p2, q2)


def _distance_to_polyline(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    distance = np.full(len(points), np.inf)
    for a, b in zip(polyline[:-1], polyline[1:]):
        ab = b - a
        t = np.clip(((points - a) @ ab) / (ab @ ab), 0.0, 1.0)
        nearest = a + t[:, None] * ab
        distance = np.minimum(distance, np.hypot(*(points - nearest).T))
    return distance


def _check_fits(grid: GridSpec, domain: DomainSpec) -> None:
    kind = domain.kind
    if kind == DomainKind.WHOLE_PLANE_BOX:
        return
    if kind == DomainKind.HALF_PLANE:
        lo_ok = domain.offset >= grid.y_min if domain.upper else domain.offset > grid.y_min
        hi_ok = domain.offset < grid.y_max if domain.upper else domain.offset <= grid.y_max
        if not (lo_ok and hi_ok):
            raise GeometryOutOfBounds(f"half-plane line y = {domain.offset} lies outside the grid box")
        return

    if kind == DomainKind.DISC:
        cx, cy = domain.center
        r = domain.radius
        lo_x, hi_x, lo_y, hi_y = cx - r, cx + r, cy - r, cy + r
    elif kind == DomainKind.RECTANGLE:
        lo_x, lo_y, hi_x, hi_y = domain.corners
    else:
        vertices = np.asarray(domain.vertices, dtype=float)
        lo_x, lo_y = vertices.min(axis=0)
        hi_x, hi_y = vertices.max(axis=0)

    if not (lo_x > grid.x_min and hi_x < grid.x_max and lo_y > grid.y_min and hi_y < grid.y_max):
        raise GeometryOutOfBounds(
            f"{kind.value} extent [{lo_x}, {hi_x}] x [{lo_y}, {hi_y}] does not fit strictly inside the grid box"
        )


def _same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridMismatch(f"grids differ: {a} vs {b}")


def integrate(region: RegionMask) -> float:
    """Lebesgue area of a region by the midpoint rule"""
    return float(region.count * region.grid.h ** 2)


def integrate_field(f: Union[ScalarField, ComplexField], region: RegionMask) -> Union[float, complex]:
    """h^2 times the sum of f over the member nodes of `region`"""
    _same_grid(f.grid, region.grid)
    total = f.values[region.members].sum() * region.grid.h ** 2
    if np.iscomplexobj(total):
        return complex(total)
    return float(total)


def weighted_integral(values: np.ndarray, weights: ScalarField) -> Union[float, complex]:
    """h^2 * sum(values * weights) for a nodal function against nodal weights"""
    if values.shape != weights.grid.shape:
        raise GridMismatch("values and weights have different shapes")
    total = (values * weights.values).sum() * weights.grid.h ** 2
    if np.iscomplexobj(total):
        return complex(total)
    return float(total)


def omega_threshold(u: np.ndarray, factor: Optional[float] = None) -> float:
    """theta = factor * max(u); factor defaults to sqrt(machine epsilon)"""
    peak = float(u.max()) if u.size else 0.0
    if peak <= 0:
        return 0.0
    return (DEFAULT_THRESHOLD_FACTOR if factor is None else factor) * peak


def region_from_field(u: ScalarField, mask: DomainMask, threshold_factor: Optional[float] = None) -> RegionMask:
    """omega = {u > theta} restricted to INTERIOR nodes"""
    _same_grid(u.grid, mask.grid)
    theta = omega_threshold(u.values, threshold_factor)
    if theta <= 0:
        return RegionMask.empty(u.grid)
    return RegionMask(grid=u.grid, members=mask.interior & (u.values > theta))


def interior_of_closure(region: RegionMask, mask: DomainMask) -> RegionMask:
    """Morphological close (dilate then erode by one node) intersected with INTERIOR"""
    _same_grid(region.grid, mask.grid)
    dilated = ndimage.binary_dilation(region.members, structure=CROSS)
    closed = ndimage.binary_erosion(dilated, structure=CROSS, border_value=1)
    return RegionMask(grid=region.grid, members=(closed & mask.interior) | region.members)


def dilate(region: RegionMask, cells: int = 1, square: bool = False) -> RegionMask:
    """Grow a region by `cells` nodes"""
    if cells <= 0 or region.is_empty():
        return region
    structure = SQUARE if square else CROSS
    grown = ndimage.binary_dilation(region.members, structure=structure, iterations=cells)
    return RegionMask(grid=region.grid, members=grown)


def erode(members: np.ndarray, cells: int = 1) -> np.ndarray:
    """Nodes whose whole cells-step 4-neighbourhood lies in `members`"""
    if cells <= 0:
        return members.copy()
    return ndimage.binary_erosion(members, structure=CROSS, iterations=cells, border_value=0)


def distance_to(members: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Euclidean distance from every node to the nearest member node"""
    if not members.any():
        return np.full(grid.shape, np.inf)
    return ndimage.distance_transform_edt(~members) * grid.h


def rim(members: np.ndarray) -> np.ndarray:
    """Member nodes having at least one non-member 4-neighbour"""
    return members & ~ndimage.binary_erosion(members, structure=CROSS, border_value=0)


def is_starshaped(region: RegionMask, center: Point, rim_only: bool = False) -> Tuple[bool, List[Point]]:
    """Test that every segment [center, p] stays in the region (one-cell collar)

    Segments are sampled every h/2 and samples are rounded to the nearest
    node. With `rim_only` only segments ending at rim nodes are traced, which
    is enough for sets without holes and much cheaper for large domains.
    """
    grid = region.grid
    center_node = grid.node_of(center)
    if not grid.contains_node(center_node) or not region.members[center_node]:
        raise CenterOutsideRegion(f"centre {center} is not a member of the region")

    collar = ndimage.binary_dilation(region.members, structure=SQUARE)
    targets = rim(region.members) if rim_only else region.members
    nodes = np.argwhere(targets)
    if len(nodes) == 0:
        return True, []

    origin = np.asarray(grid.fractional_index(center))
    lengths = np.hypot(*(nodes - origin).T)
    samples = int(np.ceil(lengths.max() / 0.5)) + 1
    t = np.linspace(0.0, 1.0, max(samples, 2))
    chunk = max(1, 2_000_000 // len(t))

    violating: List[np.ndarray] = []
    for start in range(0, len(nodes), chunk):
        seg = nodes[start:start + chunk]
        path = origin + t[None, :, None] * (seg[:, None, :] - origin)
        ii = np.clip(np.rint(path[..., 0]).astype(int), 0, grid.nx - 1)
        jj = np.clip(np.rint(path[..., 1]).astype(int), 0, grid.ny - 1)
        ok = collar[ii, jj].all(axis=1)
        if not ok.all():
            violating.append(seg[~ok])

    if not violating:
        return True, []
    bad = np.vstack(violating)
    logger.debug(f"Starshapedness fails at {len(bad)} nodes")
    return False, [grid.point_of((int(i), int(j))) for i, j in bad]


def field_from_function(grid: GridSpec, fn, defined: Optional[np.ndarray] = None) -> ComplexField:
    """Sample a complex function z -> fn(z) on the nodes where `defined` holds"""
    z = grid.complex_coordinates()
    defined = np.ones(grid.shape, dtype=bool) if defined is None else defined.copy()
    values = np.zeros(grid.shape, dtype=complex)
    values[defined] = fn(z[defined])
    return ComplexField(grid=grid, values=values, defined=defined)


def splat(grid: GridSpec, point: Point, weight: float = 1.0) -> np.ndarray:
    """Bilinear distribution of a point mass onto the (up to) four surrounding nodes"""
    fi, fj = grid.fractional_index(point)
    i0, j0 = int(np.floor(fi)), int(np.floor(fj))
    tx, ty = fi - i0, fj - j0
    masses = np.zeros(grid.shape)
    for di, wx in ((0, 1.0 - tx), (1, tx)):
        for dj, wy in ((0, 1.0 - ty), (1, ty)):
            share = wx * wy
            if share <= 0:
                continue
            node = (i0 + di, j0 + dj)
            if not grid.contains_node(node):
                raise GeometryOutOfBounds(f"point {point} lies outside the grid box")
            masses[node] += weight * share
    return masses


def distance_to_complement(mask: DomainMask, point: Point) -> float:
    """Distance from a point to the nearest node that is not INTERIOR"""
    outside = np.argwhere(~mask.interior)
    if len(outside) == 0:
        return np.inf
    g = mask.grid
    dx = g.x_min + outside[:, 0] * g.h - point[0]
    dy = g.y_min + outside[:, 1] * g.h - point[1]
    return float(np.hypot(dx, dy).min())
