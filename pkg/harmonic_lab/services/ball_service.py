"""
Subharmonic ball service: compute D(x0, alpha) and verify it
"""

import math
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import ndimage

from ..errors import (
    DomainNotStarshaped,
    GridMismatch,
    IncomparableInputs,
    ProbeInsideBall,
    ProbeTooCloseToBoundary,
    WrongDomainKind,
)
from ..models.balayage_models import BalayageResult, MeasureSpec
from ..models.ball_models import BallResult, CheckReport
from ..models.grid_models import DomainKind, DomainMask, GreenMode, Point, RegionMask
from ..models.scenario_models import VerificationSettings
from .balayage_service import BalayageService, complementarity_residual, occupancy
from .green_service import INV_2PI, GreenEvaluator
from .grid_service import CROSS, SQUARE, dilate, distance_to, distance_to_complement, is_starshaped, weighted_integral


def compute_ball(
    mask: DomainMask, x0: Point, alpha: float, service: Optional[BalayageService] = None
) -> BallResult:
    """D(x0, alpha) = omega(K, alpha * delta_x0) from the obstacle solver"""
    service = service or BalayageService()
    logger.info(f"Computing ball at {x0} with alpha = {alpha:.6g} in {mask.kind.value}")
    balayage = service.solve_obstacle(mask, MeasureSpec.point_mass(x0, alpha))
    ball = BallResult(center=x0, alpha=alpha, balayage=balayage, mask=mask)
    node = mask.grid.node_of(x0)
    if not balayage.omega.members[node]:
        logger.warning(f"centre {x0} is not a member of omega")
    return ball


def _node_points(grid, nodes: np.ndarray) -> List[Point]:
    return [grid.point_of((int(i), int(j))) for i, j in nodes]


def _distance_to_nodes(region: RegionMask, point: Point) -> float:
    pts = region.points()
    if len(pts) == 0:
        return math.inf
    return float(np.hypot(pts[:, 0] - point[0], pts[:, 1] - point[1]).min())


def verify_field_characterization(ball: BallResult, settings: Optional[VerificationSettings] = None) -> CheckReport:
    """u >= 0 on K, u = 0 outside K and on K minus omega, complementarity"""
    settings = settings or VerificationSettings()
    result = ball.balayage
    grid = ball.grid
    u = result.u.values
    interior = ball.mask.interior
    scale = max(float(u.max()), 0.0) or 1.0
    report = CheckReport(name="field_characterization")

    floor = -settings.negativity_tolerance * scale
    negative = interior & (u < floor)
    report.add(
        "u_nonnegative",
        float(u[interior].min()) / scale if interior.any() else 0.0,
        -settings.negativity_tolerance,
        not negative.any(),
        "min of u over K relative to max u",
        _node_points(grid, np.argwhere(negative)),
    )

    outside = ~interior & (u != 0)
    report.add(
        "u_zero_outside_K",
        float(np.abs(u[~interior]).max(initial=0.0)),
        0.0,
        not outside.any(),
        violations=_node_points(grid, np.argwhere(outside)),
    )

    far = interior & ~result.omega.members & (distance_to(result.omega.members, grid) >= 2.0 * grid.h - 1e-12)
    off = np.abs(u[far]).max(initial=0.0) / scale
    bad = far & (np.abs(u) > settings.zero_tolerance * scale)
    report.add(
        "u_zero_off_omega",
        off,
        settings.zero_tolerance,
        not bad.any(),
        "max |u| on K minus omega at distance >= 2h, relative to max u",
        _node_points(grid, np.argwhere(bad)),
    )

    residual = complementarity_residual(result)
    report.add(
        "complementarity",
        residual / ball.alpha,
        settings.complementarity_tolerance,
        residual <= settings.complementarity_tolerance * ball.alpha,
        "max |min(u, (1 - B) h^2)| relative to alpha",
    )
    return report


def _check_probe(ball: BallResult, probe: Point, margin: float) -> None:
    omega = ball.balayage.omega
    node = ball.grid.node_of(probe)
    if ball.grid.contains_node(node) and omega.members[node]:
        raise ProbeInsideBall(f"probe {probe} lies inside omega")
    if _distance_to_nodes(omega, probe) < margin:
        raise ProbeInsideBall(f"probe {probe} lies within {margin:.3g} of omega")
    if distance_to_complement(ball.mask, probe) < margin:
        raise ProbeTooCloseToBoundary(f"probe {probe} lies within {margin:.3g} of the boundary of K")


def _kernel_scale(green: GreenEvaluator, ball: BallResult, probe: Point) -> float:
    expected = ball.alpha * green.value(ball.center, probe)
    if green.mode == GreenMode.FREE_SPACE:
        # ln|x - y| changes sign at distance 1, so fall back to the kernel's natural unit
        return max(abs(expected), ball.alpha * INV_2PI)
    return abs(expected)


def verify_mean_value(
    ball: BallResult,
    probes: Sequence[Point],
    green: Optional[GreenEvaluator] = None,
    settings: Optional[VerificationSettings] = None,
) -> CheckReport:
    """alpha * G(x0, x) against the occupancy integral of G(., x) for probes outside omega"""
    settings = settings or VerificationSettings()
    green = green or GreenEvaluator(ball.mask)
    weights = occupancy(ball.balayage)
    margin = settings.probe_margin_cells * ball.grid.h - 1e-12

    residuals = []
    failing: List[Point] = []
    for probe in probes:
        _check_probe(ball, probe, margin)
        expected = ball.alpha * green.value(ball.center, probe)
        measured = weighted_integral(green.field(probe), weights)
        rel = abs(expected - measured) / _kernel_scale(green, ball, probe)
        residuals.append(rel)
        if rel > settings.relative_tolerance:
            failing.append(probe)
        logger.debug(f"mean value at {probe}: expected {expected:.6e}, measured {measured:.6e}, rel {rel:.3e}")

    report = CheckReport(name="mean_value")
    worst = max(residuals, default=0.0)
    report.add(
        "mean_value",
        worst,
        settings.relative_tolerance,
        worst <= settings.relative_tolerance,
        f"max relative residual over {len(residuals)} probes",
        failing,
    )
    return report


def verify_subharmonic_inequality(
    ball: BallResult,
    probes: Sequence[Point],
    green: Optional[GreenEvaluator] = None,
    settings: Optional[VerificationSettings] = None,
) -> CheckReport:
    """alpha * G(x0, x) - int G(., x) d(lambda|omega) >= 0 for probes anywhere in K"""
    settings = settings or VerificationSettings()
    green = green or GreenEvaluator(ball.mask)
    weights = occupancy(ball.balayage)
    h = ball.grid.h

    margins = []
    failing: List[Point] = []
    for probe in probes:
        if math.hypot(probe[0] - ball.center[0], probe[1] - ball.center[1]) < 3.0 * h:
            logger.warning(f"subharmonic check skips probe {probe}: within 3h of the centre")
            continue
        gap = ball.alpha * green.value(ball.center, probe) - weighted_integral(green.field(probe), weights)
        relative = gap / _kernel_scale(green, ball, probe)
        margins.append(relative)
        if relative < -settings.relative_tolerance:
            failing.append(probe)

    report = CheckReport(name="subharmonic_inequality")
    worst = min(margins, default=0.0)
    report.add(
        "subharmonic_inequality",
        worst,
        settings.relative_tolerance,
        worst >= -settings.relative_tolerance,
        f"min relative margin over {len(margins)} probes",
        failing,
    )
    return report


def check_positivity(ball: BallResult, settings: Optional[VerificationSettings] = None) -> CheckReport:
    """nu >= 0 nodewise, lambda(omega) <= alpha, lambda(omega) + nu_total = alpha"""
    settings = settings or VerificationSettings()
    result = ball.balayage
    alpha = ball.alpha
    report = CheckReport(name="positivity")

    support = ball.mask.boundary
    floor = -settings.positivity_tolerance * alpha
    negative = support & (result.nu.weights < floor)
    report.add(
        "nu_nonnegative",
        result.nu.min_weight(support) / alpha,
        -settings.positivity_tolerance,
        not negative.any(),
        "min nu weight relative to alpha",
        _node_points(ball.grid, np.argwhere(negative)),
    )

    area = weighted_integral(np.ones(ball.grid.shape), occupancy(result))
    report.add(
        "area_bound",
        area / alpha - 1.0,
        settings.relative_tolerance,
        area <= alpha * (1.0 + settings.relative_tolerance),
        f"lambda(omega) = {area:.6g}",
    )

    balance = abs(area + result.nu.total - alpha) / alpha
    report.add(
        "mass_balance",
        balance,
        settings.relative_tolerance,
        balance <= settings.relative_tolerance,
        f"lambda(omega) + nu = {area + result.nu.total:.6g}, alpha = {alpha:.6g}",
    )
    return report


def check_monotonicity(first: BallResult, second: BallResult) -> CheckReport:
    """omega_1 must sit inside omega_2 grown by one cell"""
    if first.grid != second.grid:
        raise GridMismatch("monotonicity needs both balls on the same grid")
    same_domain = first.mask.domain == second.mask.domain
    same_centre = np.allclose(first.center, second.center)
    nested_domain = not (first.mask.interior & ~second.mask.interior).any()
    if same_domain and same_centre and first.alpha <= second.alpha:
        detail = f"alpha {first.alpha:.6g} <= {second.alpha:.6g}"
    elif same_centre and math.isclose(first.alpha, second.alpha) and nested_domain:
        detail = f"{first.mask.kind.value} inside {second.mask.kind.value}"
    else:
        raise IncomparableInputs("balls differ in more than one of (alpha, K) or in the wrong direction")

    grown = dilate(second.balayage.omega, 1).members
    outside = first.balayage.omega.members & ~grown
    report = CheckReport(name="monotonicity")
    report.add(
        "omega_nested",
        int(outside.sum()),
        0,
        not outside.any(),
        detail,
        _node_points(first.grid, np.argwhere(outside)),
    )
    return report


def _closure_excess(ball: BallResult) -> np.ndarray:
    """Nodes of Omega minus omega lying more than h away from the outside of Omega"""
    result = ball.balayage
    grid = ball.grid
    extra = result.omega_big.members & ~result.omega.members
    if not extra.any():
        return extra
    outside = ~result.omega_big.members
    return extra & (distance_to(outside, grid) > grid.h * (1.0 + 1e-9))


def check_starshaped_ball(ball: BallResult) -> CheckReport:
    """K starshaped w.r.t. x0 implies omega starshaped and Omega = omega"""
    grid = ball.grid
    domain_region = RegionMask(grid=grid, members=ball.mask.interior)
    starshaped_domain, _ = is_starshaped(domain_region, ball.center, rim_only=True)
    if not starshaped_domain:
        raise DomainNotStarshaped(f"{ball.mask.kind.value} is not starshaped with respect to {ball.center}")

    ok, violations = is_starshaped(ball.balayage.omega, ball.center)
    report = CheckReport(name="starshaped")
    report.add("omega_starshaped", len(violations), 0, ok, violations=violations)
    excess = _closure_excess(ball)
    report.add(
        "omega_equals_Omega",
        int(excess.sum()),
        0,
        not excess.any(),
        "Omega minus omega nodes deeper than one cell",
        _node_points(grid, np.argwhere(excess)),
    )
    return report


def check_halfspace_omega_equality(ball: BallResult) -> CheckReport:
    """For a half-plane, Omega = omega up to a one-cell layer and K minus omega is connected"""
    if ball.mask.kind != DomainKind.HALF_PLANE:
        raise WrongDomainKind(f"half-space check needs a half-plane, got {ball.mask.kind.value}")
    excess = _closure_excess(ball)
    report = CheckReport(name="halfspace_omega_equality")
    report.add(
        "omega_equals_Omega",
        int(excess.sum()),
        0,
        not excess.any(),
        violations=_node_points(ball.grid, np.argwhere(excess)),
    )
    _, components = ndimage.label(ball.mask.interior & ~ball.balayage.omega.members, structure=CROSS)
    report.add("complement_connected", components, 1, components == 1, "components of K minus omega")
    return report


def verify_one_phase_quadrature(
    ball: BallResult, kmax: Optional[int] = None, settings: Optional[VerificationSettings] = None
) -> CheckReport:
    """Whole-plane balls are quadrature domains: int_omega z^k = alpha * x0^k"""
    settings = settings or VerificationSettings()
    if ball.mask.kind != DomainKind.WHOLE_PLANE_BOX:
        raise WrongDomainKind("one-phase quadrature identity holds for whole-plane balls only")
    kmax = settings.kmax if kmax is None else kmax
    grid = ball.grid
    z = grid.complex_coordinates()
    weights = occupancy(ball.balayage)
    x0 = complex(*ball.center)
    radius = math.sqrt(ball.alpha / math.pi)
    members = ball.balayage.omega.members
    reach = float(np.abs(z[members]).max()) if members.any() else radius

    report = CheckReport(name="one_phase_quadrature")
    for k in range(kmax + 1):
        lhs = weighted_integral(z ** k, weights)
        rhs = ball.alpha * x0 ** k
        tol = settings.quadrature_tolerance * ball.alpha * (abs(x0) ** k + reach ** k * grid.h / radius)
        err = abs(lhs - rhs)
        report.add(f"z^{k}", err, tol, err <= tol, f"lhs {complex(lhs):.6g}, rhs {complex(rhs):.6g}")
    return report


def check_oracle_equivalence(
    obstacle: BalayageResult, sandpile: BalayageResult, settings: Optional[VerificationSettings] = None
) -> CheckReport:
    """Obstacle and sandpile solutions agree to O(h); omegas differ only next to the free boundary"""
    settings = settings or VerificationSettings()
    if obstacle.grid != sandpile.grid:
        raise GridMismatch("oracle comparison needs both results on the same grid")
    grid = obstacle.grid
    scale = float(obstacle.u.values.max()) or 1.0
    gap = float(np.abs(obstacle.u.values - sandpile.u.values).max()) / (grid.h * scale)

    report = CheckReport(name="oracle_equivalence")
    report.add("u_sup_norm", gap, settings.oracle_u_factor, gap <= settings.oracle_u_factor, "in units of h * max u")

    members = obstacle.omega.members
    layer = ndimage.binary_dilation(members, structure=SQUARE) & ~ndimage.binary_erosion(
        members, structure=SQUARE, border_value=0
    )
    stray = (members ^ sandpile.omega.members) & ~layer
    report.add(
        "omega_layer",
        int(stray.sum()),
        0,
        not stray.any(),
        f"symmetric difference {int((members ^ sandpile.omega.members).sum())} nodes",
        _node_points(grid, np.argwhere(stray)),
    )
    return report


def default_probes(ball: BallResult, count: int = 16, margin_cells: float = 3.0) -> List[Point]:
    """Probes on two concentric arcs around x0 outside omega, clear of the boundary of K"""
    grid = ball.grid
    omega = ball.balayage.omega
    pts = omega.points()
    cx, cy = ball.center
    reach = float(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy).max()) if len(pts) else grid.h
    margin = margin_cells * grid.h
    radii = (reach + margin + grid.h, 1.5 * (reach + margin + grid.h))

    per_ring = [count - count // 2, count // 2]
    probes: List[Point] = []
    for radius, wanted in zip(radii, per_ring):
        if wanted == 0:
            continue
        angles = np.linspace(0.0, 2.0 * math.pi, 8 * wanted, endpoint=False)
        candidates = [(cx + radius * math.cos(t), cy + radius * math.sin(t)) for t in angles]
        valid = [
            p for p in candidates
            if grid.x_min < p[0] < grid.x_max and grid.y_min < p[1] < grid.y_max
            and distance_to_complement(ball.mask, p) >= margin
            and _distance_to_nodes(omega, p) >= margin
        ]
        if not valid:
            continue
        picks = np.linspace(0, len(valid) - 1, min(wanted, len(valid))).round().astype(int)
        probes.extend(valid[i] for i in picks)
    if not probes:
        logger.warning("no admissible probe positions around the ball")
    return probes


def _inner_probes(ball: BallResult, green: GreenEvaluator) -> List[Point]:
    """A few omega nodes away from x0 and from the boundary of K"""
    h = ball.grid.h
    wanted = 2 if green.mode == GreenMode.NUMERIC else 8
    cx, cy = ball.center
    pts = ball.balayage.omega.points()
    pts = pts[np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) >= 3.0 * h]
    if len(pts) > 8 * wanted:
        pts = pts[np.linspace(0, len(pts) - 1, 8 * wanted).round().astype(int)]
    candidates = [(float(x), float(y)) for x, y in pts if distance_to_complement(ball.mask, (x, y)) >= 3.0 * h]
    if not candidates:
        return []
    picks = np.linspace(0, len(candidates) - 1, min(wanted, len(candidates))).round().astype(int)
    return [candidates[i] for i in picks]


def run_suite(
    ball: BallResult,
    settings: Optional[VerificationSettings] = None,
    green: Optional[GreenEvaluator] = None,
    probes: Optional[Sequence[Point]] = None,
) -> List[CheckReport]:
    """Every check that applies to this ball's domain"""
    settings = settings or VerificationSettings()
    reports = [verify_field_characterization(ball, settings), check_positivity(ball, settings)]

    if settings.mean_value:
        green = green or GreenEvaluator(ball.mask)
        probes = list(probes) if probes is not None else default_probes(
            ball, settings.probe_count, settings.probe_margin_cells
        )
        reports.append(verify_mean_value(ball, probes, green, settings))
        reports.append(verify_subharmonic_inequality(ball, list(probes) + _inner_probes(ball, green), green, settings))

    try:
        reports.append(check_starshaped_ball(ball))
    except DomainNotStarshaped as e:
        logger.warning(f"starshapedness check skipped: {e}")

    if ball.mask.kind == DomainKind.HALF_PLANE:
        reports.append(check_halfspace_omega_equality(ball))
    if ball.mask.kind == DomainKind.WHOLE_PLANE_BOX:
        reports.append(verify_one_phase_quadrature(ball, settings=settings))

    for report in reports:
        level = "INFO" if report.passed else "WARNING"
        logger.log(level, f"{report.name}: {'pass' if report.passed else 'FAIL'}")
    return reports
