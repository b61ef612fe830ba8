import math

import numpy as np
import pytest

from harmonic_lab.errors import EmptyInterface, InvalidGeometry, MarginTooSmall, WrongDomainKind
from harmonic_lab.models.grid_models import ComplexField, DomainSpec, GridSpec, ScalarField
from harmonic_lab.services.grid_service import build_domain_mask, field_from_function, region_from_domain
from harmonic_lab.services.twophase_service import (
    null_quadrature_pair,
    pole_exclusion_radius,
    reflection_twophase,
    run_twophase_suite,
    schwarz_field,
    verify_circle_identity,
    verify_dbar_analytic,
    verify_null_mass,
    verify_odd_symmetry,
    verify_quadrature_identity,
    verify_schwarz_boundary,
    verify_schwarz_jump,
)

from .conftest import DISC_ALPHA


@pytest.fixture(scope="module")
def disc_setup():
    grid = GridSpec.from_bounds(-0.5, 0.5, -0.5, 0.5, 0.02)
    region = region_from_domain(grid, DomainSpec.disc((0.0, 0.0), 0.3))
    return grid, region


def _pole_field(grid, region, radius, cut):
    defined = region.members & (np.abs(grid.complex_coordinates()) >= cut)
    return field_from_function(grid, lambda z: radius ** 2 / z, defined)


def test_reflection_is_odd(reflection_pair):
    report = verify_odd_symmetry(reflection_pair)
    assert report.passed
    assert report.item("u_odd").value == 0.0
    assert reflection_pair.D_plus.count == reflection_pair.D_minus.count
    assert reflection_pair.ball is not None


def test_reflection_interface_lies_on_axis(reflection_pair):
    assert reflection_pair.gamma
    assert all(edge.midpoint[1] == 0.0 for edge in reflection_pair.gamma)
    xs = [edge.midpoint[0] for edge in reflection_pair.gamma]
    assert min(xs) == pytest.approx(-max(xs))


def test_reflection_quadrature_identity(reflection_pair):
    report = verify_quadrature_identity(reflection_pair, kmax=4)
    assert report.passed, report.to_summary()
    assert len(report.items) == 15


def test_reflection_jump(reflection_pair):
    assert verify_schwarz_jump(reflection_pair).passed
    flipped = verify_schwarz_jump(reflection_pair, flip_target=True)
    assert not flipped.passed


def test_jump_needs_an_interface(reflection_pair):
    empty = reflection_pair.model_copy(update={"gamma": []})
    with pytest.raises(EmptyInterface):
        verify_schwarz_jump(empty)


def test_reflection_needs_symmetric_grid():
    grid = GridSpec.from_bounds(-0.6, 0.6, -0.5, 0.6, 0.02)
    with pytest.raises(InvalidGeometry):
        reflection_twophase(grid, (0.0, 0.16), DISC_ALPHA)
    square = GridSpec.from_bounds(-0.6, 0.6, -0.6, 0.6, 0.02)
    with pytest.raises(InvalidGeometry):
        reflection_twophase(square, (0.0, 0.02), DISC_ALPHA)


def test_null_pair_balances_mass(null_pair):
    assert not null_pair.D_minus.is_empty()
    assert not (null_pair.D_plus.members & null_pair.D_minus.members).any()
    assert null_pair.gamma
    report = verify_null_mass(null_pair)
    assert report.passed, report.to_summary()


def test_null_pair_moments_vanish(null_pair):
    report = verify_quadrature_identity(null_pair, kmax=3)
    assert report.passed, report.to_summary()


def test_construction_specific_checks(null_pair, reflection_pair):
    with pytest.raises(WrongDomainKind):
        verify_odd_symmetry(null_pair)
    with pytest.raises(WrongDomainKind):
        verify_null_mass(reflection_pair)


def test_null_pair_needs_room():
    grid = GridSpec.from_bounds(-0.8, 0.8, -0.8, 0.8, 0.02)
    mask = build_domain_mask(grid, DomainSpec.whole_plane())
    with pytest.raises(MarginTooSmall):
        null_quadrature_pair(mask, region_from_domain(grid, DomainSpec.disc((0.0, 0.0), 0.6)))


def test_null_pair_needs_whole_plane():
    grid = GridSpec.from_bounds(-0.8, 0.8, 0.0, 0.8, 0.02)
    mask = build_domain_mask(grid, DomainSpec.half_plane(0.0))
    with pytest.raises(WrongDomainKind):
        null_quadrature_pair(mask, region_from_domain(grid, DomainSpec.disc((0.0, 0.4), 0.2)))


def test_suite_picks_checks_by_construction(reflection_pair, null_pair):
    names = [report.name for report in run_twophase_suite(reflection_pair)]
    assert names[0] == "odd_symmetry"
    assert {"dbar_plus", "dbar_minus", "schwarz_boundary", "schwarz_jump", "quadrature_identity"} <= set(names)
    assert run_twophase_suite(null_pair)[0].name == "null_mass"


def test_schwarz_field_of_flat_potential(disc_setup):
    grid, region = disc_setup
    z = grid.complex_coordinates()
    flat = ScalarField.zeros(grid)
    S = schwarz_field(flat, region, beta=2.0, sign=-1)
    assert np.allclose(S.values[region.members], -2.0 * np.conj(z[region.members]))
    assert (S.values[~region.members] == 0).all()
    cut = schwarz_field(flat, region, exclusion_radius=0.1, atoms=[(0.0, 0.0)])
    assert not cut.defined[grid.node_of((0.0, 0.0))]
    assert cut.defined[grid.node_of((0.2, 0.0))]


def test_pole_exclusion_radius():
    r = pole_exclusion_radius(0.01, 0.5, 5.0, 2.0)
    assert r == pytest.approx((2 * 0.01 * 0.5 / (math.pi * 5.0 * 2.0)) ** 0.25)
    # a pole of strength w/pi has dbar_h ~ h^2 w / (pi r^4) at the cut-off
    assert 0.01 ** 2 * 0.5 / (math.pi * r ** 4) == pytest.approx(5.0 * 0.01 * 2.0 / 2)
    assert pole_exclusion_radius(0.01, 0.5, 5.0, 0.0) == 0.0


def test_dbar_accepts_analytic_pole(disc_setup):
    grid, region = disc_setup
    S = _pole_field(grid, region, 0.3, 3 * grid.h)
    weight = math.pi * 0.3 ** 2
    exclusion = pole_exclusion_radius(grid.h, weight, 5.0, S.max_modulus())
    report = verify_dbar_analytic(S, region, [((0.0, 0.0), exclusion)])
    assert report.passed, report.to_summary()


def test_dbar_rejects_non_analytic_field(disc_setup):
    grid, region = disc_setup
    S = field_from_function(grid, lambda z: np.conj(z) * z, region.members)
    report = verify_dbar_analytic(S, region)
    assert not report.passed
    assert report.item("dbar_max").violations


def test_circle_identity(disc_setup):
    grid, region = disc_setup
    S = _pole_field(grid, region, 0.3, 3 * grid.h)
    assert verify_circle_identity(S, region, (0.0, 0.0), 0.3).passed
    shifted = ComplexField(grid=grid, values=np.where(S.defined, S.values + 1.0, 0.0), defined=S.defined)
    report = verify_circle_identity(shifted, region, (0.0, 0.0), 0.3)
    assert not report.passed
    assert report.item("circle_identity").value == pytest.approx(1.0)


def test_null_pair_suite_passes(null_pair):
    reports = run_twophase_suite(null_pair)
    failing = [report.to_summary() for report in reports if not report.passed]
    assert not failing
    dbar_plus = next(report for report in reports if report.name == "dbar_plus")
    assert dbar_plus.item("dbar_max").value < dbar_plus.item("dbar_max").tolerance


def test_dbar_tolerance_uses_given_scale(disc_setup):
    grid, region = disc_setup
    S = field_from_function(grid, np.conj, region.members)
    assert not verify_dbar_analytic(S, region).passed
    shared = verify_dbar_analytic(S, region, scale=20.0)
    assert shared.passed
    assert shared.item("dbar_max").tolerance == pytest.approx(5.0 * grid.h * 20.0)


def test_schwarz_boundary_on_both_pairs(reflection_pair, null_pair):
    for pair in (reflection_pair, null_pair):
        report = verify_schwarz_boundary(pair)
        assert report.passed, report.to_summary()
    assert not verify_schwarz_boundary(reflection_pair, flip_sign=True).passed


def test_reflection_phases_share_excluded_nodes(reflection_pair):
    S_plus, S_minus = reflection_pair.S_plus, reflection_pair.S_minus
    assert np.array_equal(S_minus.defined, S_plus.defined[:, ::-1])
    assert S_minus.max_modulus() == pytest.approx(S_plus.max_modulus(), rel=1e-9)
