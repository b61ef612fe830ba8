import numpy as np
import pytest

from harmonic_lab.errors import NonConvergence
from harmonic_lab.services.relaxation import discrete_laplacian, relax, residual


def _box(n=21, h=0.1):
    xs = -1.0 + h * np.arange(n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    active = np.zeros((n, n), dtype=bool)
    active[1:-1, 1:-1] = True
    return X, Y, active


def test_laplacian_of_quadratic_is_exact():
    X, Y, _ = _box()
    lap = discrete_laplacian(X ** 2 + Y ** 2, 0.1)
    assert np.allclose(lap[1:-1, 1:-1], 4.0)
    assert (lap[0, :] == 0).all() and (lap[:, -1] == 0).all()


def test_relax_recovers_discrete_solution():
    X, Y, active = _box()
    exact = (1.0 - X ** 2) * (1.0 - Y ** 2)
    exact[~active] = 0.0
    rhs = np.where(active, -discrete_laplacian(exact, 0.1), 0.0)
    outcome = relax(
        np.zeros_like(exact), rhs, active, 0.1,
        relaxation=1.8, tolerance=1e-9, max_sweeps=20_000, check_every=10, project=False,
    )
    assert outcome.residual <= 1e-9
    assert np.abs(outcome.values - exact).max() < 1e-8
    assert outcome.sweeps > 0


def test_projected_relax_keeps_zero_when_nothing_to_push():
    _, _, active = _box()
    rhs = np.where(active, -1.0, 0.0)
    outcome = relax(
        np.zeros(active.shape), rhs, active, 0.1,
        relaxation=1.9, tolerance=1e-12, max_sweeps=10, check_every=5, project=True,
    )
    assert outcome.sweeps == 0
    assert (outcome.values == 0).all()
    assert residual(outcome.values, rhs, 0.1, active, project=True) == 0.0


def test_projected_relax_stays_nonnegative():
    _, _, active = _box()
    rhs = np.where(active, -1.0, 0.0)
    rhs[10, 10] = 50.0
    outcome = relax(
        np.zeros(active.shape), rhs, active, 0.1,
        relaxation=1.9, tolerance=1e-9, max_sweeps=50_000, check_every=10, project=True,
    )
    assert outcome.values.min() >= 0.0
    assert outcome.values[10, 10] > 0.0
    assert outcome.values[2, 2] == 0.0


def test_sweep_budget_raises_non_convergence():
    X, Y, active = _box()
    rhs = np.where(active, 1.0, 0.0)
    with pytest.raises(NonConvergence) as info:
        relax(
            np.zeros(X.shape), rhs, active, 0.1,
            relaxation=1.9, tolerance=1e-14, max_sweeps=5, check_every=10, project=False,
        )
    assert info.value.iterations == 5
    assert info.value.residual > 1e-14
