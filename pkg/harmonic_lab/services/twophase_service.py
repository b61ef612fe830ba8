"""
Two-phase service: reflection and null-quadrature pairs, Schwarz fields and their checks
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import ndimage

from ..errors import EmptyInterface, InvalidGeometry, MarginTooSmall, WrongDomainKind
from ..models.balayage_models import MeasureSpec
from ..models.ball_models import BallResult, CheckReport
from ..models.grid_models import ComplexField, DomainKind, DomainMask, DomainSpec, GridSpec, Point, RegionMask, ScalarField
from ..models.scenario_models import VerificationSettings
from ..models.twophase_models import InterfaceEdge, TwoPhaseResult
from .balayage_service import BalayageService, occupancy
from .ball_service import compute_ball
from .grid_service import CROSS, build_domain_mask, erode, rim, weighted_integral

Exclusion = Tuple[Point, float]


def _near_points(grid: GridSpec, points: Sequence[Point], radius: float) -> np.ndarray:
    near = np.zeros(grid.shape, dtype=bool)
    if radius <= 0 or not points:
        return near
    X, Y = grid.coordinates()
    for px, py in points:
        near |= np.hypot(X - px, Y - py) < radius
    return near


def schwarz_field(
    u: ScalarField,
    region: RegionMask,
    beta: float = 1.0,
    sign: int = 1,
    exclusion_radius: float = 0.0,
    atoms: Sequence[Point] = (),
    defined: Optional[np.ndarray] = None,
) -> ComplexField:
    """S = sign * beta * conj(z) - 4 du/dz on `region`, undefined near atoms or off `defined` when given"""
    grid = u.grid
    du_dx, du_dy = np.gradient(u.values, grid.h)
    z = grid.complex_coordinates()
    S = sign * beta * np.conj(z) - 2.0 * (du_dx - 1j * du_dy)
    if defined is None:
        defined = region.members & ~_near_points(grid, atoms, exclusion_radius)
    return ComplexField(grid=grid, values=np.where(defined, S, 0.0), defined=defined)


def pole_exclusion_radius(h: float, weight: float, constant: float, scale: float) -> float:
    """Distance beyond which the centred-difference dbar of a pole of strength weight/pi stays below C*h*scale/2

    |dbar_h (w/pi)/(z - a)| = h^2 w / (pi r^4) to leading order.
    """
    if scale <= 0:
        return 0.0
    return (2.0 * h * weight / (math.pi * constant * scale)) ** 0.25


def verify_dbar_analytic(
    S: ComplexField,
    region: RegionMask,
    exclusions: Sequence[Exclusion] = (),
    gamma: Sequence[Point] = (),
    constant: float = 5.0,
    name: str = "dbar",
    scale: Optional[float] = None,
) -> CheckReport:
    """max |dbar_h S| at nodes 2h inside the region, away from exclusions and Gamma

    The tolerance is constant * h * scale; `scale` defaults to max |S| and a pair passes its common scale.
    """
    grid = S.grid
    h = grid.h
    values = S.values
    dbar = np.zeros(grid.shape, dtype=complex)
    dbar[1:-1, 1:-1] = 0.5 * (
        (values[2:, 1:-1] - values[:-2, 1:-1]) / (2 * h) + 1j * (values[1:-1, 2:] - values[1:-1, :-2]) / (2 * h)
    )

    stencil = S.defined & ndimage.binary_erosion(S.defined, structure=CROSS, border_value=0)
    nodes = erode(region.members, 2) & stencil
    X, Y = grid.coordinates()
    for (px, py), radius in exclusions:
        nodes &= np.hypot(X - px, Y - py) >= radius
    nodes &= ~_near_points(grid, list(gamma), 2.0 * h)

    scale = S.max_modulus() if scale is None else scale
    tol = constant * h * scale
    report = CheckReport(name=name)
    if not nodes.any():
        logger.warning(f"{name}: no admissible nodes for the dbar check")
        report.add("dbar_max", 0.0, tol, True, "no admissible nodes")
        return report
    worst = float(np.abs(dbar[nodes]).max())
    bad = nodes & (np.abs(dbar) > tol)
    report.add(
        "dbar_max",
        worst,
        tol,
        worst <= tol,
        f"{int(nodes.sum())} nodes, scale {scale:.4g}",
        [grid.point_of((int(i), int(j))) for i, j in np.argwhere(bad)],
    )
    return report


def verify_circle_identity(S: ComplexField, region: RegionMask, center: Point, radius: float, constant: float = 5.0) -> CheckReport:
    """One node inside the boundary, S = conj(a) + r^2 / (z - a) within C*h"""
    grid = S.grid
    z = grid.complex_coordinates()
    a = complex(*center)
    nodes = rim(region.members) & S.defined
    report = CheckReport(name="circle_identity")
    tol = constant * grid.h
    if not nodes.any():
        report.add("circle_identity", 0.0, tol, True, "no rim nodes")
        return report
    exact = np.conj(a) + radius ** 2 / (z[nodes] - a)
    err = float(np.abs(S.values[nodes] - exact).max())
    report.add("circle_identity", err, tol, err <= tol, f"{int(nodes.sum())} rim nodes")
    return report


def _interface_edges(grid: GridSpec, plus: np.ndarray, minus: np.ndarray) -> List[InterfaceEdge]:
    edges: List[InterfaceEdge] = []
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        shifted = np.zeros_like(minus)
        src = minus[max(di, 0):minus.shape[0] + min(di, 0), max(dj, 0):minus.shape[1] + min(dj, 0)]
        shifted[max(-di, 0):minus.shape[0] + min(-di, 0), max(-dj, 0):minus.shape[1] + min(-dj, 0)] = src
        for i, j in np.argwhere(plus & shifted):
            x, y = grid.point_of((int(i), int(j)))
            edges.append(InterfaceEdge(
                midpoint=(x + 0.5 * di * grid.h, y + 0.5 * dj * grid.h),
                plus_node=(int(i), int(j)),
                minus_node=(int(i + di), int(j + dj)),
            ))
    return edges


def reflection_twophase(
    grid: GridSpec,
    x0: Point,
    alpha: float,
    service: Optional[BalayageService] = None,
    exclusion_cells: float = 3.0,
) -> TwoPhaseResult:
    """Odd reflection of the upper half-plane ball across y = 0"""
    if not grid.is_symmetric_about_x_axis():
        raise InvalidGeometry("reflection needs a grid whose middle row is y = 0")
    if x0[1] < 2.0 * grid.h:
        raise InvalidGeometry(f"centre {x0} must lie at least 2h above the axis")

    mask = build_domain_mask(grid, DomainSpec.half_plane(0.0, upper=True))
    ball = compute_ball(mask, x0, alpha, service)
    result = ball.balayage

    d_plus = result.omega
    d_minus = RegionMask(grid=grid, members=d_plus.members[:, ::-1])
    u_upper = result.u.values
    u = ScalarField(grid=grid, values=u_upper - u_upper[:, ::-1])
    weight_plus = occupancy(result)
    weight_minus = ScalarField(grid=grid, values=weight_plus.values[:, ::-1])

    axis = (grid.ny - 1) // 2
    gamma = [
        InterfaceEdge(midpoint=(grid.xs[i], 0.0), plus_node=(int(i), axis + 1), minus_node=(int(i), axis - 1))
        for i in np.flatnonzero(d_plus.members[:, axis + 1] & d_minus.members[:, axis - 1])
    ]
    mirror = (x0[0], -x0[1])
    radius = exclusion_cells * grid.h
    s_plus = schwarz_field(u, d_plus, 1.0, 1, radius, [x0])
    # mirrored node by node so both phases share one excluded set
    s_minus = schwarz_field(u, d_minus, 1.0, -1, defined=s_plus.defined[:, ::-1])
    logger.info(f"Reflection pair: |D+| = {d_plus.count}, |Gamma| = {len(gamma)} edges")
    return TwoPhaseResult(
        construction="reflection",
        D_plus=d_plus,
        D_minus=d_minus,
        gamma=gamma,
        u=u,
        weight_plus=weight_plus,
        weight_minus=weight_minus,
        mu_plus=MeasureSpec.point_mass(x0, alpha),
        mu_minus=MeasureSpec.point_mass(mirror, alpha),
        S_plus=s_plus,
        S_minus=s_minus,
        exclusion_radius=radius,
        ball=ball,
    )


def null_quadrature_pair(
    mask: DomainMask, d_plus: RegionMask, service: Optional[BalayageService] = None
) -> TwoPhaseResult:
    """D- = omega(2 lambda|D+) minus D+, a pair with vanishing two-phase moments

    On nodes removing D+ and removing its closure give the same set, so D- is omega & ~D+.
    """
    if mask.kind != DomainKind.WHOLE_PLANE_BOX:
        raise WrongDomainKind("null quadrature pairs are built in the whole plane")
    grid = mask.grid
    if d_plus.is_empty():
        raise InvalidGeometry("D+ is empty")

    area = d_plus.count * grid.h ** 2
    needed = 2.0 * (math.sqrt(2.0) - 1.0) * math.sqrt(area / math.pi) + 5.0 * grid.h
    pts = d_plus.points()
    room = min(
        pts[:, 0].min() - grid.x_min, grid.x_max - pts[:, 0].max(),
        pts[:, 1].min() - grid.y_min, grid.y_max - pts[:, 1].max(),
    )
    if room < needed:
        raise MarginTooSmall(f"D+ leaves {room:.4g} to the box edge, {needed:.4g} needed")

    service = service or BalayageService()
    result = service.solve_obstacle(mask, MeasureSpec.uniform(d_plus, 2.0))
    plus = d_plus.members
    d_minus = RegionMask(grid=grid, members=result.omega.members & ~plus)
    u = ScalarField(grid=grid, values=-result.u.values)
    occupied = occupancy(result).values
    gamma = _interface_edges(grid, plus, d_minus.members)
    logger.info(f"Null pair: |D+| = {d_plus.count}, |D-| = {d_minus.count}, |Gamma| = {len(gamma)} edges")

    return TwoPhaseResult(
        construction="null_pair",
        D_plus=d_plus,
        D_minus=d_minus,
        gamma=gamma,
        u=u,
        weight_plus=ScalarField(grid=grid, values=plus.astype(float)),
        weight_minus=ScalarField(grid=grid, values=np.where(plus, 0.0, occupied)),
        S_plus=schwarz_field(u, d_plus, 1.0, 1),
        S_minus=schwarz_field(u, d_minus, 1.0, -1),
    )


def _outer_rim(tp: TwoPhaseResult) -> np.ndarray:
    """Phase nodes with a neighbour in neither phase that is not a Gamma middle node"""
    phases = tp.D_plus.members | tp.D_minus.members
    allowed = phases.copy()
    for edge in tp.gamma:
        (pi, pj), (mi, mj) = edge.plus_node, edge.minus_node
        if abs(pi - mi) + abs(pj - mj) == 2:
            allowed[(pi + mi) // 2, (pj + mj) // 2] = True
    return phases & ndimage.binary_dilation(~allowed, structure=CROSS)


def _scale(tp: TwoPhaseResult) -> float:
    return max(tp.S_plus.max_modulus(), tp.S_minus.max_modulus())


def verify_schwarz_boundary(tp: TwoPhaseResult, constant: float = 5.0, flip_sign: bool = False) -> CheckReport:
    """S+ = beta+ conj(z) on the outer boundary of D+, S- = -beta- conj(z) on that of D-"""
    grid = tp.grid
    z = grid.complex_coordinates()
    outer = _outer_rim(tp) & ~_near_points(grid, tp.gamma_midpoints(), 2.5 * grid.h)
    tol = constant * grid.h * _scale(tp)
    direction = -1 if flip_sign else 1
    report = CheckReport(name="schwarz_boundary")
    for label, S, region, target_sign, beta in (
        ("plus", tp.S_plus, tp.D_plus, 1, tp.beta_plus),
        ("minus", tp.S_minus, tp.D_minus, -1, tp.beta_minus),
    ):
        nodes = outer & region.members & S.defined
        if not nodes.any():
            report.add(f"boundary_{label}", 0.0, tol, True, "no outer boundary nodes")
            continue
        target = direction * target_sign * beta * np.conj(z)
        err = np.abs(S.values - target)
        bad = nodes & (err > tol)
        worst = float(err[nodes].max())
        report.add(
            f"boundary_{label}",
            worst,
            tol,
            worst <= tol,
            f"{int(nodes.sum())} nodes",
            [grid.point_of((int(i), int(j))) for i, j in np.argwhere(bad)],
        )
    return report


def _extrapolate(S: ComplexField, node: Tuple[int, int], step: Tuple[int, int], distance: float) -> Optional[complex]:
    """Linear extrapolation of S from `node` and `node + step` to a point `distance` behind `node`"""
    inner = (node[0] + step[0], node[1] + step[1])
    grid = S.grid
    if not (grid.contains_node(inner) and S.defined[node] and S.defined[inner]):
        return None
    near, far = S.values[node], S.values[inner]
    return complex(near + (near - far) * distance / grid.h)


def verify_schwarz_jump(tp: TwoPhaseResult, constant: float = 5.0, flip_target: bool = False) -> CheckReport:
    """S+ - S- = (beta+ + beta-) conj(z) at interior Gamma midpoints"""
    if not tp.gamma:
        raise EmptyInterface("the pair has no interface")
    grid = tp.grid
    outer_nodes = np.argwhere(_outer_rim(tp))
    outer_pts = np.column_stack([grid.x_min + outer_nodes[:, 0] * grid.h, grid.y_min + outer_nodes[:, 1] * grid.h])
    tol = constant * grid.h * _scale(tp)
    factor = -1.0 if flip_target else 1.0

    errors = []
    failing: List[Point] = []
    skipped = 0
    for edge in tp.gamma:
        mx, my = edge.midpoint
        if len(outer_pts) and np.hypot(outer_pts[:, 0] - mx, outer_pts[:, 1] - my).min() < 2.5 * grid.h:
            skipped += 1
            continue
        p, q = edge.plus_node, edge.minus_node
        span = max(abs(p[0] - q[0]), abs(p[1] - q[1]))
        unit = ((p[0] - q[0]) // span, (p[1] - q[1]) // span)
        back = (-unit[0], -unit[1])
        reach = 0.5 * span * grid.h
        s_plus = _extrapolate(tp.S_plus, p, unit, reach)
        s_minus = _extrapolate(tp.S_minus, q, back, reach)
        if s_plus is None or s_minus is None:
            skipped += 1
            continue
        target = factor * (tp.beta_plus + tp.beta_minus) * complex(mx, -my)
        err = abs((s_plus - s_minus) - target)
        errors.append(err)
        if err > tol:
            failing.append(edge.midpoint)

    report = CheckReport(name="schwarz_jump")
    worst = max(errors, default=0.0)
    report.add(
        "jump",
        worst,
        tol,
        worst <= tol,
        f"{len(errors)} edges checked, {skipped} near junctions or undefined",
        failing,
    )
    return report


def verify_quadrature_identity(
    tp: TwoPhaseResult, kmax: Optional[int] = None, settings: Optional[VerificationSettings] = None
) -> CheckReport:
    """beta+ int_D+ f - beta- int_D- f = <mu+ - mu-, f> for f = z^k, Re z^k, Im z^k"""
    settings = settings or VerificationSettings()
    kmax = settings.kmax if kmax is None else kmax
    grid = tp.grid
    z = grid.complex_coordinates()
    members = tp.D_plus.members | tp.D_minus.members
    reach = float(np.abs(z[members]).max()) if members.any() else 0.0
    mass = tp.mu_plus.total_mass()
    atoms_plus = [(complex(*a.location), a.weight) for a in tp.mu_plus.atoms]
    atoms_minus = [(complex(*a.location), a.weight) for a in tp.mu_minus.atoms]

    if mass > 0:
        radius = math.sqrt(mass / math.pi)
        anchor = max(abs(w) for w, _ in atoms_plus + atoms_minus)
    else:
        pts = tp.D_plus.points()
        area = tp.D_plus.count * grid.h ** 2
        diam = float(np.hypot(*(pts.max(axis=0) - pts.min(axis=0)))) if len(pts) else 0.0

    report = CheckReport(name="quadrature_identity")
    for k in range(kmax + 1):
        f = z ** k
        lhs = tp.beta_plus * weighted_integral(f, tp.weight_plus) - tp.beta_minus * weighted_integral(f, tp.weight_minus)
        rhs = sum(w * a ** k for a, w in atoms_plus) - sum(w * a ** k for a, w in atoms_minus)
        if mass > 0:
            tol = settings.quadrature_tolerance * mass * (anchor ** k + reach ** k * grid.h / radius)
        else:
            tol = settings.quadrature_tolerance * area * diam ** k
        lhs, rhs = complex(lhs), complex(rhs)
        for label, measured, expected in (
            (f"z^{k}", lhs, rhs),
            (f"Re z^{k}", lhs.real, rhs.real),
            (f"Im z^{k}", lhs.imag, rhs.imag),
        ):
            err = abs(measured - expected)
            report.add(label, err, tol, err <= tol, f"lhs {measured:.6g}, rhs {expected:.6g}")
    return report


def verify_odd_symmetry(tp: TwoPhaseResult) -> CheckReport:
    """u(x, -y) = -u(x, y) and D- = mirror of D+, node-exact"""
    if tp.construction != "reflection":
        raise WrongDomainKind("odd symmetry applies to reflection pairs")
    u = tp.u.values
    asym = float(np.abs(u + u[:, ::-1]).max())
    mismatch = int((tp.D_minus.members ^ tp.D_plus.members[:, ::-1]).sum())
    report = CheckReport(name="odd_symmetry")
    report.add("u_odd", asym, 0.0, asym == 0.0)
    report.add("mirror_regions", mismatch, 0, mismatch == 0)
    return report


def verify_null_mass(tp: TwoPhaseResult, settings: Optional[VerificationSettings] = None) -> CheckReport:
    """lambda(D-) = lambda(D+): balayage of 2 lambda|D+ conserves mass in the whole plane"""
    settings = settings or VerificationSettings()
    if tp.construction != "null_pair":
        raise WrongDomainKind("mass conservation check applies to null pairs")
    ones = np.ones(tp.grid.shape)
    area_plus = weighted_integral(ones, tp.weight_plus)
    area_minus = weighted_integral(ones, tp.weight_minus)
    rel = abs(area_minus - area_plus) / area_plus
    report = CheckReport(name="null_mass")
    report.add(
        "area_balance",
        rel,
        settings.relative_tolerance,
        rel <= settings.relative_tolerance,
        f"lambda(D+) = {area_plus:.6g}, lambda(D-) = {area_minus:.6g}",
    )
    return report


def _dbar_reports(tp: TwoPhaseResult, settings: VerificationSettings) -> List[CheckReport]:
    scale = _scale(tp)
    h = tp.grid.h
    reports = []
    for label, S, region, mu in (
        ("dbar_plus", tp.S_plus, tp.D_plus, tp.mu_plus),
        ("dbar_minus", tp.S_minus, tp.D_minus, tp.mu_minus),
    ):
        exclusions = [
            (a.location, max(tp.exclusion_radius, pole_exclusion_radius(h, a.weight, settings.schwarz_constant, scale)))
            for a in mu.atoms
        ]
        reports.append(
            verify_dbar_analytic(S, region, exclusions, tp.gamma_midpoints(), settings.schwarz_constant, label, scale)
        )
    return reports


def run_twophase_suite(tp: TwoPhaseResult, settings: Optional[VerificationSettings] = None) -> List[CheckReport]:
    """Every check that applies to the pair's construction"""
    settings = settings or VerificationSettings()
    reports: List[CheckReport] = []
    if tp.construction == "reflection":
        reports.append(verify_odd_symmetry(tp))
    else:
        reports.append(verify_null_mass(tp, settings))
    reports.extend(_dbar_reports(tp, settings))
    reports.append(verify_schwarz_boundary(tp, settings.schwarz_constant))
    if tp.gamma:
        reports.append(verify_schwarz_jump(tp, settings.schwarz_constant))
    else:
        logger.warning("interface is empty; jump check skipped")
    reports.append(verify_quadrature_identity(tp, settings=settings))
    for report in reports:
        logger.log("INFO" if report.passed else "WARNING", f"{report.name}: {'pass' if report.passed else 'FAIL'}")
    return reports


def one_phase_schwarz_reports(ball: BallResult, settings: Optional[VerificationSettings] = None) -> List[CheckReport]:
    """Circle identity and analyticity of S = conj(z) - 4 du/dz for a whole-plane ball"""
    settings = settings or VerificationSettings()
    grid = ball.grid
    radius = settings.exclusion_cells * grid.h
    S = schwarz_field(ball.balayage.u, ball.balayage.omega, 1.0, 1, radius, [ball.center])
    exclusion = max(radius, pole_exclusion_radius(grid.h, ball.alpha, settings.schwarz_constant, S.max_modulus()))
    return [
        verify_circle_identity(S, ball.balayage.omega, ball.center, math.sqrt(ball.alpha / math.pi), settings.schwarz_constant),
        verify_dbar_analytic(S, ball.balayage.omega, [(ball.center, exclusion)], (), settings.schwarz_constant, "dbar"),
    ]
