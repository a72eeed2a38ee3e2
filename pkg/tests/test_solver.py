"""
Tests for the relaxation solver and the extreme minimizers.
"""

import numpy as np
import pytest

from bernoulli_lab.components.boundary_data import BoundaryDatum
from bernoulli_lab.components.energy import ScalarField
from bernoulli_lab.components.geometry import DomainSpec, build_grid, shifted, stencil_offsets
from bernoulli_lab.components.solver import (
    SolveOptions,
    default_tie_tolerance,
    free_boundary_cells,
    gradient_on_free_boundary,
    interior_gradient_max,
    solve,
    solve_extremes,
)
from bernoulli_lab.exceptions import ConfigurationError


def _ends(grid, a, b):
    """Boundary values a at x = 0 and b at x = 1 on a 1D grid."""
    values = np.zeros(grid.shape)
    left, right = np.flatnonzero(grid.boundary)
    values[left], values[right] = a, b
    return values


def test_left_detached_discrete_optimum(fine_interval):
    """Test the 1D solve with a = 1/4, b = 0: three positive cells, energy 1/4 + 3/16."""
    for traversal in ("red-black", "lexicographic"):
        opts = SolveOptions(traversal=traversal)
        u, report = solve(fine_interval, None, opts, boundary_values=_ends(fine_interval, 0.25, 0.0))
        assert report.converged
        assert report.energy == pytest.approx(0.4375, abs=1e-9)
        # within h of the continuum energy 2 a sqrt(lam)
        assert abs(report.energy - 0.5) <= 2 * fine_interval.h
        assert int(u.positive.sum()) == 3


def test_energy_history_never_increases(fine_interval):
    """Test that every sweep keeps or lowers the energy."""
    _, report = solve(fine_interval, None, SolveOptions(initialization="datum-sup"),
                      boundary_values=_ends(fine_interval, 0.25, 0.1))
    assert np.all(np.diff(report.history) <= 1e-12)
    assert report.history[-1] == report.energy


def test_free_boundary_slope(fine_interval):
    """Test that the one-sided gradient on the free boundary is sqrt(lambda)."""
    u, _ = solve(fine_interval, None, boundary_values=_ends(fine_interval, 0.25, 0.0))
    assert len(free_boundary_cells(u)) == 1
    stats = gradient_on_free_boundary(u)
    assert stats.count == 1
    assert stats.median == pytest.approx(1.0)
    assert stats.iqr == pytest.approx(0.0)


def test_large_lambda_gives_zero_interior(coarse_square):
    """Test that small data and large lambda leave the interior at zero."""
    g = BoundaryDatum(kind="constant", params={"value": 0.1})
    u, report = solve(coarse_square, g, SolveOptions(lam=100.0))
    assert report.converged
    assert report.positivity_measure == 0.0
    assert np.all(u.values[coarse_square.interior] == 0.0)


def test_constant_datum_gives_constant_solution(coarse_square):
    """Test that datum 1 with lambda 1 fills the square with 1."""
    g = BoundaryDatum(kind="constant", params={"value": 1.0})
    u, report = solve(coarse_square, g)
    assert report.converged
    assert np.allclose(u.values[coarse_square.interior], 1.0)
    assert report.energy == pytest.approx(9 * 0.0625, abs=1e-9)
    stats = gradient_on_free_boundary(u)
    assert stats.empty
    assert stats.to_dict()["median"] is None
    assert interior_gradient_max(u, 0.25) == pytest.approx(0.0, abs=1e-9)


def test_non_convergence_is_reported(coarse_square):
    """Test that running out of sweeps is reported, not raised."""
    g = BoundaryDatum(kind="constant", params={"value": 1.0})
    _, report = solve(coarse_square, g, SolveOptions(max_sweeps=1, harmonic_replacement=False))
    assert not report.converged
    assert report.sweeps == 1
    assert report.to_dict()["converged"] is False


def test_solve_argument_errors(coarse_square):
    """Test missing data, negative boundary values and a missing initial field."""
    with pytest.raises(ValueError):
        solve(coarse_square, None)
    with pytest.raises(ConfigurationError):
        solve(coarse_square, None, boundary_values=np.where(coarse_square.boundary, -1.0, 0.0))
    g = BoundaryDatum(kind="constant", params={"value": 1.0})
    with pytest.raises(ValueError):
        solve(coarse_square, g, SolveOptions(initialization="given"))


def test_given_initialization(coarse_square):
    """Test starting from a supplied field."""
    g = BoundaryDatum(kind="constant", params={"value": 1.0})
    start = ScalarField(coarse_square, np.where(coarse_square.closure, 1.0, 0.0))
    u, report = solve(coarse_square, g, SolveOptions(initialization="given"), initial=start)
    assert report.converged
    assert report.sweeps == 1
    assert u.max_difference(start) == pytest.approx(0.0)


def test_default_tie_tolerance(fine_interval):
    """Test lambda * h * #boundary * h**(d-1)."""
    assert default_tie_tolerance(fine_interval, 1.0) == pytest.approx(0.125)


def test_extremes_on_symmetric_tie(fine_interval):
    """Test that the symmetric 1D tie yields the zero and datum-sup solves as extremes."""
    grid = fine_interval
    g = BoundaryDatum(kind="constant", params={"value": 0.25})
    lower, upper, report = solve_extremes(grid, g)
    assert report.ordered
    assert set(report.candidates) == {"zero", "datum-sup"}
    assert set(report.minimal) == {"zero", "datum-sup"}
    assert report.lower.initialization == "zero"
    assert report.upper.initialization == "datum-sup"
    assert np.all(lower.values[grid.closure] <= upper.values[grid.closure] + 1e-12)
    assert lower.max_difference(upper) == pytest.approx(0.25)
    assert report.upper.energy == pytest.approx(15 / 16, abs=1e-9)
    assert report.lower.energy == pytest.approx(0.875, abs=1e-9)
    assert report.to_dict()["minimal"] == report.minimal


def test_extremes_are_the_two_specified_solves(fine_interval):
    """Test that lower and upper equal plain solves from zero and from the datum sup."""
    g = BoundaryDatum(kind="constant", params={"value": 0.25})
    lower, upper, _ = solve_extremes(fine_interval, g)
    from_zero, _ = solve(fine_interval, g, SolveOptions(initialization="zero"))
    from_sup, _ = solve(fine_interval, g, SolveOptions(initialization="datum-sup"))
    assert lower.max_difference(from_zero) == 0.0
    assert upper.max_difference(from_sup) == 0.0


def test_multi_start_extremes_are_opt_in(fine_interval):
    """Test that the harmonic start and polishing only run with multi_start."""
    g = BoundaryDatum(kind="constant", params={"value": 0.25})
    lower, upper, report = solve_extremes(fine_interval, g, multi_start=True)
    assert set(report.candidates) == {"zero", "datum-sup", "harmonic"}
    assert set(report.minimal) == {"zero", "datum-sup", "harmonic"}
    assert report.ordered
    assert report.lower.mode == "lower"
    assert report.upper.mode == "upper"
    assert np.all(lower.values[fine_interval.closure] <= upper.values[fine_interval.closure] + 1e-10)


def test_extremes_coincide_when_unique(coarse_square):
    """Test that a unique minimizer gives lower == upper."""
    g = BoundaryDatum(kind="constant", params={"value": 1.0})
    lower, upper, report = solve_extremes(coarse_square, g)
    assert lower.max_difference(upper) == pytest.approx(0.0, abs=1e-9)
    assert report.lower.mode == "lower"
    assert report.upper.mode == "upper"


def _neighbor_mean(u):
    grid = u.grid
    total = np.zeros(grid.shape)
    for offset in stencil_offsets(grid.dimension):
        total += shifted(u.values, offset)
    return total / len(stencil_offsets(grid.dimension))


def test_solution_is_discrete_harmonic_on_positive_set(unit_square):
    """Test that converged solves equal their neighbor mean wherever they are positive."""
    g = BoundaryDatum(kind="power", params={"anchor": [0.0, 0.0], "exponent": 1.0, "coefficient": 0.5, "offset": 0.3})
    opts = SolveOptions()
    u, report = solve(build_grid(unit_square, 1.0 / 16.0), g, opts)
    assert report.converged
    residual = np.abs(u.values - _neighbor_mean(u))[u.positive]
    assert residual.size > 0
    assert residual.max() <= 10 * opts.tolerance


def test_solutions_ordered_under_datum_shift(unit_square):
    """Test that raising the datum by a constant never lowers either extreme."""
    grid = build_grid(unit_square, 1.0 / 16.0)
    g = BoundaryDatum(kind="power", params={"anchor": [0.3, 0.0], "exponent": 0.75, "coefficient": 0.4, "offset": 0.1})
    low = solve_extremes(grid, g)
    high = solve_extremes(grid, g.model_copy(update={"shift": 0.1}))
    for k in (0, 1):
        assert np.min((high[k].values - low[k].values)[grid.closure]) >= -1e-8


def test_red_black_solve_is_deterministic(unit_square):
    """Test that repeated red-black solves agree bit for bit."""
    grid = build_grid(unit_square, 1.0 / 16.0)
    g = BoundaryDatum(kind="linear", params={"value": 0.2, "gradient": [0.3, 0.1]})
    first, first_report = solve(grid, g, SolveOptions(traversal="red-black"))
    second, second_report = solve(grid, g, SolveOptions(traversal="red-black"))
    assert np.array_equal(first.values, second.values)
    assert first_report.history == second_report.history


def test_interior_gradient_stays_bounded_under_refinement():
    """Test that the interior gradient maxima on the disk settle as h halves."""
    disk = DomainSpec(kind="disk", params={"center": [0.0, 0.0], "radius": 1.0})
    g = BoundaryDatum(kind="power", params={"anchor": [1.0, 0.0], "exponent": 1.0, "coefficient": 0.5, "offset": 0.2})
    maxima = []
    for n in (16, 32, 64):
        u, _ = solve(build_grid(disk, 1.0 / n), g)
        maxima.append(interior_gradient_max(u, 0.2 * disk.diameter()))
    ratios = [b / a for a, b in zip(maxima, maxima[1:])]
    assert all(ratio <= 1.25 for ratio in ratios)
