import math

import pytest

from harmonic_lab.models.grid_models import DomainSpec, GridSpec
from harmonic_lab.services.ball_service import compute_ball
from harmonic_lab.services.grid_service import build_domain_mask, region_from_domain
from harmonic_lab.services.twophase_service import null_quadrature_pair, reflection_twophase

# Area of a disc of radius 0.2
DISC_ALPHA = math.pi * 0.04
H = 0.02


@pytest.fixture(scope="session")
def whole_mask():
    grid = GridSpec.from_bounds(-0.5, 0.5, -0.5, 0.5, H)
    return build_domain_mask(grid, DomainSpec.whole_plane())


@pytest.fixture(scope="session")
def half_mask():
    grid = GridSpec.from_bounds(-0.5, 0.5, 0.0, 0.6, H)
    return build_domain_mask(grid, DomainSpec.half_plane(0.0))


@pytest.fixture(scope="session")
def tall_half_mask():
    grid = GridSpec.from_bounds(-0.5, 0.5, 0.0, 1.0, H)
    return build_domain_mask(grid, DomainSpec.half_plane(0.0))


@pytest.fixture(scope="session")
def whole_ball(whole_mask):
    return compute_ball(whole_mask, (0.0, 0.0), DISC_ALPHA)


@pytest.fixture(scope="session")
def contact_ball(half_mask):
    return compute_ball(half_mask, (0.0, 0.1), DISC_ALPHA)


@pytest.fixture(scope="session")
def noncontact_ball(tall_half_mask):
    return compute_ball(tall_half_mask, (0.0, 0.5), DISC_ALPHA)


@pytest.fixture(scope="session")
def reflection_pair():
    grid = GridSpec.from_bounds(-0.6, 0.6, -0.6, 0.6, H)
    return reflection_twophase(grid, (0.0, 0.16), DISC_ALPHA)


@pytest.fixture(scope="session")
def null_pair():
    grid = GridSpec.from_bounds(-0.8, 0.8, -0.8, 0.8, H)
    mask = build_domain_mask(grid, DomainSpec.whole_plane())
    d_plus = region_from_domain(grid, DomainSpec.disc((0.0, 0.0), 0.3))
    return null_quadrature_pair(mask, d_plus)
