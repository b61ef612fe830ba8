import math

import numpy as np
import pytest

from harmonic_lab.errors import CoincidentPoints, ConfigError, SourceTooCloseToBoundary
from harmonic_lab.models.grid_models import DomainSpec, GreenMode, GridSpec
from harmonic_lab.services.green_service import (
    INV_2PI,
    SELF_CELL_LOG,
    GreenEvaluator,
    default_mode,
    green_disc,
    green_halfplane,
    green_numeric,
    log_kernel,
)
from harmonic_lab.services.grid_service import build_domain_mask


def test_log_kernel():
    assert log_kernel((0.0, 0.0), (1.0, 0.0)) == pytest.approx(0.0)
    assert log_kernel((0.0, 0.0), (0.5, 0.0)) == pytest.approx(math.log(2.0) * INV_2PI)
    with pytest.raises(CoincidentPoints):
        log_kernel((0.3, 0.3), (0.3, 0.3))


def test_halfplane_green_images():
    assert green_halfplane((0.0, 1.0), (0.0, 2.0)) == pytest.approx(math.log(3.0) * INV_2PI)
    assert green_halfplane((0.2, 0.5), (-0.3, 0.1)) == pytest.approx(green_halfplane((-0.3, 0.1), (0.2, 0.5)))
    assert green_halfplane((0.2, 0.0), (0.1, 0.4)) == 0.0
    assert green_halfplane((0.2, -0.1), (0.1, 0.4)) == 0.0
    # lower half-plane mirrors the upper one
    assert green_halfplane((0.0, -1.0), (0.0, -2.0), upper=False) == pytest.approx(math.log(3.0) * INV_2PI)
    assert green_halfplane((0.0, 1.5), (0.0, 2.5), offset=0.5) == pytest.approx(math.log(3.0) * INV_2PI)


def test_disc_green():
    assert green_disc((0.0, 0.0), (0.5, 0.0)) == pytest.approx(math.log(2.0) * INV_2PI)
    a, b = (0.1, 0.2), (-0.4, 0.3)
    assert green_disc(a, b) == pytest.approx(green_disc(b, a))
    assert green_disc(a, (1.0, 0.0)) == 0.0
    assert green_disc((1.1, 2.0), (1.0, 2.0), center=(1.0, 2.0), radius=0.5) == pytest.approx(math.log(5.0) * INV_2PI)


def test_default_modes():
    assert default_mode(DomainSpec.half_plane().kind) == GreenMode.ANALYTIC
    assert default_mode(DomainSpec.whole_plane().kind) == GreenMode.FREE_SPACE
    assert default_mode(DomainSpec.rectangle(0, 0, 1, 1).kind) == GreenMode.NUMERIC


def test_invalid_mode_is_config_error():
    grid = GridSpec.from_bounds(-1.0, 1.0, -1.0, 1.0, 0.1)
    mask = build_domain_mask(grid, DomainSpec.rectangle(-0.5, -0.5, 0.5, 0.5))
    with pytest.raises(ConfigError):
        GreenEvaluator(mask, GreenMode.ANALYTIC)
    with pytest.raises(ConfigError):
        GreenEvaluator(mask, GreenMode.FREE_SPACE)


def test_field_matches_pointwise_values():
    grid = GridSpec.from_bounds(-1.0, 1.0, 0.0, 1.0, 0.05)
    mask = build_domain_mask(grid, DomainSpec.half_plane(0.0))
    green = GreenEvaluator(mask)
    source = (0.1, 0.5)
    field = green.field(source)
    for node in [(5, 3), (30, 12), (22, 14)]:
        assert field[node] == pytest.approx(green.value(grid.point_of(node), source), rel=1e-9)
    assert (field[:, 0] == 0).all()
    assert field.min() >= 0.0


def test_field_self_cell_uses_cell_average():
    grid = GridSpec.from_bounds(-1.0, 1.0, -1.0, 1.0, 0.1)
    mask = build_domain_mask(grid, DomainSpec.whole_plane())
    field = GreenEvaluator(mask).field((0.0, 0.0))
    centre = grid.node_of((0.0, 0.0))
    assert field[centre] == pytest.approx(-INV_2PI * (math.log(0.1) + SELF_CELL_LOG))
    # the singularity lifts the cell average above the kernel at the edge midpoint
    assert log_kernel((0.0, 0.0), (0.05, 0.0)) < field[centre]


def test_numeric_green_approaches_disc_formula():
    grid = GridSpec.from_bounds(-1.0, 1.0, -1.0, 1.0, 0.025)
    mask = build_domain_mask(grid, DomainSpec.disc((0.0, 0.0), 0.9))
    numeric = GreenEvaluator(mask, GreenMode.NUMERIC)
    source, target = (0.0, 0.0), (0.3, 0.0)
    exact = green_disc(source, target, (0.0, 0.0), 0.9)
    assert numeric.value(source, target) == pytest.approx(exact, rel=0.05)
    # cached per source
    assert numeric.numeric_field(source) is numeric.numeric_field(source)


def test_numeric_green_rejects_sources_near_boundary():
    grid = GridSpec.from_bounds(-1.0, 1.0, -1.0, 1.0, 0.1)
    mask = build_domain_mask(grid, DomainSpec.disc((0.0, 0.0), 0.9))
    with pytest.raises(SourceTooCloseToBoundary):
        green_numeric(mask, (0.85, 0.0))


def test_numeric_green_vanishes_off_domain():
    grid = GridSpec.from_bounds(-1.0, 1.0, -1.0, 1.0, 0.05)
    mask = build_domain_mask(grid, DomainSpec.rectangle(-0.6, -0.6, 0.6, 0.6))
    g = green_numeric(mask, (0.0, 0.0)).values
    assert (g[~mask.interior] == 0).all()
    assert g[mask.interior].min() > 0.0
    assert np.unravel_index(np.argmax(g), g.shape) == grid.node_of((0.0, 0.0))
