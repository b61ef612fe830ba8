import math

import numpy as np
import pytest

from harmonic_lab.errors import BoxTooSmall, SupportTouchesBoundary
from harmonic_lab.models.balayage_models import MeasureSpec
from harmonic_lab.models.grid_models import DomainSpec, GridSpec
from harmonic_lab.models.scenario_models import SolverSettings
from harmonic_lab.services.balayage_service import (
    BalayageService,
    complementarity_residual,
    measure_density,
    occupancy,
)
from harmonic_lab.services.ball_service import check_oracle_equivalence
from harmonic_lab.services.grid_service import build_domain_mask, region_from_domain, weighted_integral

from .conftest import DISC_ALPHA


def _area(result):
    return weighted_integral(np.ones(result.grid.shape), occupancy(result))


def test_measure_density_carries_total_mass(whole_mask):
    grid = whole_mask.grid
    mu = MeasureSpec.point_mass((0.01, -0.03), 0.7)
    assert measure_density(grid, mu).sum() * grid.h ** 2 == pytest.approx(0.7)
    square = region_from_domain(grid, DomainSpec.rectangle(-0.1, -0.1, 0.1, 0.1))
    uniform = MeasureSpec.uniform(square, 2.0)
    assert measure_density(grid, uniform).sum() * grid.h ** 2 == pytest.approx(uniform.total_mass())


def test_whole_plane_ball_is_a_disc_of_area_alpha(whole_ball):
    result = whole_ball.balayage
    h = result.grid.h
    # frontier nodes carry partial fill, so the node count alone runs short
    assert result.omega.count * h ** 2 == pytest.approx(DISC_ALPHA, rel=0.15)
    assert _area(result) == pytest.approx(DISC_ALPHA, rel=1e-4)
    assert abs(result.nu.total) <= 1e-6 * DISC_ALPHA
    radius = np.hypot(*result.omega.points().T).max()
    assert radius == pytest.approx(math.sqrt(DISC_ALPHA / math.pi), abs=2 * h)


def test_obstacle_solution_satisfies_complementarity(whole_ball):
    result = whole_ball.balayage
    assert result.u.values.min() >= 0.0
    assert complementarity_residual(result) <= 1e-8 * DISC_ALPHA
    assert result.iterations > 0
    assert result.method == "obstacle"


def test_occupancy_is_fill_fraction(whole_ball):
    result = whole_ball.balayage
    weights = occupancy(result).values
    assert (weights >= 0).all() and (weights <= 1).all()
    assert (weights[result.omega.members] == 1).all()
    frontier = (weights > 0) & ~result.omega.members
    assert frontier.any()


def test_contact_ball_sweeps_mass_onto_the_line(contact_ball):
    result = contact_ball.balayage
    nu = result.nu.weights
    assert nu.min() >= 0.0
    assert result.nu.total > 0.01 * DISC_ALPHA
    # only the line y = 0 carries sweeping mass; the far box sides stay clean
    assert (nu[:, 1:] == 0).all()
    assert _area(result) + result.nu.total == pytest.approx(DISC_ALPHA, rel=1e-4)
    assert _area(result) < DISC_ALPHA


def test_noncontact_ball_is_translated_whole_plane_ball(whole_ball, noncontact_ball):
    shifted = noncontact_ball.balayage.omega.members
    assert np.array_equal(shifted, whole_ball.balayage.omega.members)
    assert noncontact_ball.balayage.nu.total == 0.0


def test_sandpile_matches_obstacle(whole_mask, whole_ball):
    sandpile = BalayageService().sandpile(whole_mask, MeasureSpec.point_mass((0.0, 0.0), DISC_ALPHA))
    report = check_oracle_equivalence(whole_ball.balayage, sandpile)
    assert report.passed, report.to_summary()
    assert _area(sandpile) == pytest.approx(DISC_ALPHA, rel=1e-3)
    assert sandpile.method == "sandpile"


def test_support_near_boundary_is_rejected(half_mask):
    with pytest.raises(SupportTouchesBoundary):
        BalayageService().solve_obstacle(half_mask, MeasureSpec.point_mass((0.0, 0.02), 0.1))


def test_box_too_small():
    grid = GridSpec.from_bounds(-0.5, 0.5, -0.5, 0.5, 0.02)
    mask = build_domain_mask(grid, DomainSpec.whole_plane())
    with pytest.raises(BoxTooSmall):
        BalayageService(SolverSettings(margin_nodes=5)).solve_obstacle(mask, MeasureSpec.point_mass((0.0, 0.0), 0.6))
