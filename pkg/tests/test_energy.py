"""
Tests for the discrete functional.
"""

import numpy as np
import pytest

from bernoulli_lab.components.energy import (
    ScalarField,
    dirichlet_energy,
    harmonic_extension,
    local_update,
    positivity_measure,
    total_energy,
)
from bernoulli_lab.components.geometry import build_grid


def _interval_field(grid, values):
    array = np.zeros(grid.shape)
    array[1:6] = values
    return ScalarField(grid, array)


def test_zero_field_has_zero_energy(coarse_square):
    """Test that the zero field costs nothing."""
    u = ScalarField(coarse_square, np.zeros(coarse_square.shape))
    assert total_energy(u) == 0.0


def test_single_boundary_jump(coarse_interval):
    """Test one boundary-interior edge: ((1 - 0) / h)**2 * h."""
    u = _interval_field(coarse_interval, [1.0, 0.0, 0.0, 0.0, 0.0])
    assert dirichlet_energy(u) == pytest.approx(4.0)
    assert positivity_measure(u) == 0.0
    assert total_energy(u) == pytest.approx(4.0)


def test_linear_profile_energy(coarse_interval):
    """Test the linear interpolant: Dirichlet (a - b)**2 / L plus lambda times the positive interior cells."""
    u = _interval_field(coarse_interval, [1.0, 0.75, 0.5, 0.25, 0.0])
    assert dirichlet_energy(u) == pytest.approx(1.0)
    assert positivity_measure(u) == pytest.approx(0.75)
    assert total_energy(u, lam=2.0) == pytest.approx(2.5)


def test_boundary_edges_have_half_weight(coarse_square):
    """Test that edges between two boundary cells count one half."""
    values = np.zeros(coarse_square.shape)
    values[1, 1] = 1.0  # the corner (0, 0)
    u = ScalarField(coarse_square, values)
    assert dirichlet_energy(u) == pytest.approx(1.0)


def test_constant_field_pays_only_measure(coarse_square):
    """Test that a constant field costs lambda times the interior area."""
    u = ScalarField(coarse_square, np.where(coarse_square.closure, 1.0, 0.0), lam=2.0)
    assert dirichlet_energy(u) == pytest.approx(0.0)
    assert total_energy(u) == pytest.approx(2.0 * 9 * 0.0625)


def test_local_update_threshold(coarse_interval):
    """Test the local rule: the neighbor mean wins iff mean**2 > lambda h**2 / (2 d)."""
    u = _interval_field(coarse_interval, [1.0, 0.0, 0.0, 0.0, 0.0])
    assert local_update(u, (2,)) == pytest.approx(0.5)
    assert local_update(u, (2,), lam=16.0) == 0.0
    # exact tie goes to zero
    assert local_update(u, (2,), lam=8.0) == 0.0
    with pytest.raises(ValueError):
        local_update(u, (1,))


def test_harmonic_extension_is_linear_in_1d(coarse_interval):
    """Test that the discrete harmonic extension of end values is linear."""
    values = np.zeros(coarse_interval.shape)
    values[1] = 1.0
    extended = harmonic_extension(coarse_interval, values, coarse_interval.interior)
    assert np.allclose(extended[1:6], [1.0, 0.75, 0.5, 0.25, 0.0])


def test_field_validation(coarse_square):
    """Test shape, finiteness and lambda checks."""
    with pytest.raises(ValueError):
        ScalarField(coarse_square, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        ScalarField(coarse_square, np.full(coarse_square.shape, np.nan))
    with pytest.raises(ValueError):
        ScalarField(coarse_square, np.zeros(coarse_square.shape), lam=0.0)
    with pytest.raises(ValueError):
        positivity_measure(ScalarField(coarse_square, np.zeros(coarse_square.shape)), -1.0)


def test_field_frame_columns(x_field):
    """Test the CSV columns of a 2D field: one row per closed-domain cell."""
    frame = x_field.to_frame()
    assert list(frame.columns) == ["ix", "iy", "x", "y", "value"]
    assert len(frame) == 25
    assert np.allclose(frame["value"], frame["x"])


def test_local_updates_never_raise_the_energy(unit_square):
    """Test that every single-cell update of a random field lowers or keeps the total energy."""
    grid = build_grid(unit_square, 0.125)
    rng = np.random.default_rng(7)
    u = ScalarField(grid, np.where(grid.closure, rng.uniform(0.0, 1.0, grid.shape), 0.0), lam=2.0)
    cells = grid.cells(grid.interior)
    previous = total_energy(u)
    for _ in range(3):
        for k in rng.permutation(len(cells)):
            cell = cells[k]
            u.values[cell] = local_update(u, cell)
            current = total_energy(u)
            assert current <= previous + 1e-12
            previous = current


def test_energy_does_not_depend_on_cell_order(unit_square):
    """Test that relabeling cells by a symmetry of the square keeps the energy."""
    grid = build_grid(unit_square, 0.125)
    rng = np.random.default_rng(11)
    values = np.where(grid.closure, rng.uniform(0.0, 1.0, grid.shape), 0.0)
    energy = total_energy(ScalarField(grid, values))
    for relabeled in (values.T, values[::-1, :], values[:, ::-1], np.rot90(values)):
        assert total_energy(ScalarField(grid, np.ascontiguousarray(relabeled))) == pytest.approx(energy, abs=1e-12)
