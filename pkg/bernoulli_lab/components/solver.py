"""
Thresholded coordinate relaxation for the discrete one-phase functional.

Each sweep visits every interior cell and replaces its value by whichever of
{0, neighbor mean} has the smaller local energy (ties go to 0). Two optional
steps keep the descent monotone and speed it up:

- harmonic replacement: after a sweep, solve the discrete Laplace equation on
  the current positivity set and keep it when the energy does not increase;
- free-boundary moves: once the local rule is stationary, try growing the
  positivity set where the free-boundary slope exceeds sqrt(lam) and shrinking
  it where it falls short, accepting a move only if the total energy drops.

Pure local flips stall on any free boundary whose discrete slope lies between
sqrt(lam / 2) and sqrt(2 lam); the moves take the descent past those states.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from bernoulli_lab.components.boundary_data import BoundaryDatum, sample_datum
from bernoulli_lab.components.energy import (
    ZERO_TOL,
    ScalarField,
    branch_energies,
    harmonic_extension,
    positivity_measure,
    total_energy,
)
from bernoulli_lab.components.geometry import Grid, boundary_distance_map, shifted, stencil_offsets
from bernoulli_lab.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

Initialization = Literal["zero", "datum-sup", "harmonic", "given"]
Traversal = Literal["lexicographic", "red-black"]
Mode = Literal["single", "lower", "upper"]

# Stop when the energy has dropped by less than this for STALL_SWEEPS sweeps in a row.
STALL_DECREASE = 1e-14
STALL_SWEEPS = 10
# How many times a rejected free-boundary move is halved before giving up.
MAX_HALVINGS = 6


class SolveOptions(BaseModel):
    """Options of one relaxation solve."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(1.0, gt=0, alias="lambda")
    max_sweeps: int = Field(5000, ge=1)
    tolerance: float = Field(1e-10, gt=0)
    initialization: Initialization = "zero"
    traversal: Traversal = "red-black"
    harmonic_replacement: bool = True
    free_boundary_moves: bool = True


@dataclass
class SolveReport:
    """Outcome of a solve; ``history`` holds the energy before sweep 1 and after every sweep."""

    energy: float
    sweeps: int
    residual: float
    positivity_measure: float
    converged: bool
    mode: Mode = "single"
    initialization: str = "zero"
    history: List[float] = field(default_factory=list)

    @property
    def initial_energy(self) -> float:
        return self.history[0] if self.history else self.energy

    def to_dict(self) -> Dict[str, Any]:
        return {
            "energy": self.energy,
            "sweeps": self.sweeps,
            "residual": self.residual,
            "positivity_measure": self.positivity_measure,
            "converged": self.converged,
            "mode": self.mode,
        }


@dataclass
class ExtremesReport:
    """Reports of the lower and upper solves plus every candidate descent."""

    lower: SolveReport
    upper: SolveReport
    candidates: Dict[str, SolveReport]
    minimal: List[str]
    tie_tolerance: float
    ordered: bool = True

    @property
    def gap(self) -> float:
        return abs(self.upper.energy - self.lower.energy)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower": self.lower.to_dict(),
            "upper": self.upper.to_dict(),
            "candidates": {name: report.to_dict() for name, report in self.candidates.items()},
            "minimal": list(self.minimal),
            "tie_tolerance": self.tie_tolerance,
            "ordered": self.ordered,
        }


@dataclass(frozen=True)
class FreeBoundaryStats:
    """Order statistics of |grad u| on free-boundary cells; count 0 means no free boundary."""

    count: int
    median: float = float("nan")
    iqr: float = float("nan")
    q25: float = float("nan")
    q75: float = float("nan")
    minimum: float = float("nan")
    maximum: float = float("nan")

    @property
    def empty(self) -> bool:
        return self.count == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "median": None if self.empty else self.median,
            "iqr": None if self.empty else self.iqr,
            "q25": None if self.empty else self.q25,
            "q75": None if self.empty else self.q75,
            "min": None if self.empty else self.minimum,
            "max": None if self.empty else self.maximum,
        }


def _energy(grid: Grid, values: np.ndarray, lam: float) -> float:
    return total_energy(ScalarField(grid, values, lam))


def _neighbors(values: np.ndarray, dimension: int) -> np.ndarray:
    return np.stack([shifted(values, offset) for offset in stencil_offsets(dimension)])


def _sweep_red_black(grid: Grid, values: np.ndarray, lam: float, colors: List[np.ndarray]) -> None:
    # Same-color cells share no stencil edge, so each color updates at once.
    for mask in colors:
        at_zero, at_mean, mean = branch_energies(_neighbors(values, grid.dimension), grid.h, grid.dimension, lam)
        values[mask] = np.where(at_mean < at_zero, mean, 0.0)[mask]


def _sweep_lexicographic(grid: Grid, values: np.ndarray, lam: float, cells: np.ndarray) -> None:
    offsets = np.asarray(stencil_offsets(grid.dimension))
    threshold = lam * grid.h ** 2 / (2 * grid.dimension)
    for cell in cells:
        neighbors = values[tuple((cell + offsets).T)]
        mean = float(neighbors.mean())
        values[tuple(cell)] = mean if mean * mean > threshold else 0.0


def _harmonic_on(grid: Grid, boundary: np.ndarray, positive: np.ndarray) -> np.ndarray:
    """Harmonic on ``positive``, zero on the other interior cells, datum on the boundary."""
    values = harmonic_extension(grid, boundary, positive)
    values[values <= ZERO_TOL] = 0.0
    return values


def _axis_pairs(values: np.ndarray, dimension: int):
    for axis in range(dimension):
        step = tuple(1 if k == axis else 0 for k in range(dimension))
        back = tuple(-s for s in step)
        yield shifted(values, step), shifted(values, back)


def _move_candidates(grid: Grid, values: np.ndarray, lam: float, kind: str) -> Tuple[np.ndarray, np.ndarray]:
    """Cells whose free-boundary slope test says the set should move, best first."""
    positive = grid.interior & (values > ZERO_TOL)
    h2 = grid.h ** 2
    slope2 = np.zeros(grid.shape)
    if kind == "grow":
        touching = np.zeros(grid.shape, dtype=bool)
        for forward, backward in _axis_pairs(values, grid.dimension):
            largest = np.maximum(forward, backward)
            slope2 += largest ** 2 / h2
            touching |= largest > ZERO_TOL
        mask = grid.interior & ~positive & touching & (slope2 > lam)
        score = slope2 - lam
    else:
        mask = free_boundary_mask(ScalarField(grid, values, lam))
        for forward, backward in _axis_pairs(values, grid.dimension):
            slope2 += np.maximum(np.abs(values - forward), np.abs(values - backward)) ** 2 / h2
        mask &= slope2 < lam
        score = lam - slope2
    cells = np.argwhere(mask)
    order = np.argsort(-score[mask], kind="stable")
    return cells[order], positive


def _free_boundary_moves(
    grid: Grid, boundary: np.ndarray, values: np.ndarray, lam: float, energy: float
) -> Tuple[np.ndarray, float, bool]:
    moved = False
    for kind in ("grow", "shrink"):
        cells, positive = _move_candidates(grid, values, lam, kind)
        for _ in range(MAX_HALVINGS + 1):
            if len(cells) == 0:
                break
            trial_set = positive.copy()
            trial_set[tuple(cells.T)] = kind == "grow"
            trial = _harmonic_on(grid, boundary, trial_set)
            trial_energy = _energy(grid, trial, lam)
            if trial_energy < energy - STALL_DECREASE * max(1.0, abs(energy)):
                logger.debug("Accepted %s move of %d cells: energy %.12g -> %.12g", kind, len(cells), energy, trial_energy)
                values, energy, moved = trial, trial_energy, True
                break
            cells = cells[: len(cells) // 2]
    return values, energy, moved


def _boundary_array(grid: Grid, g: Optional[BoundaryDatum], boundary_values: Optional[np.ndarray]) -> np.ndarray:
    if boundary_values is None:
        if g is None:
            raise ValueError("a datum or explicit boundary values are required")
        return sample_datum(g, grid)
    given = np.asarray(boundary_values, dtype=float)
    if given.shape != grid.shape:
        raise ValueError(f"boundary values shape {given.shape} does not match grid {grid.shape}")
    if np.any(given[grid.boundary] < 0):
        raise ConfigurationError("boundary values must be nonnegative")
    boundary = np.zeros(grid.shape)
    boundary[grid.boundary] = given[grid.boundary]
    return boundary


def _initial_values(grid: Grid, boundary: np.ndarray, opts: SolveOptions, initial: Optional[ScalarField]) -> np.ndarray:
    values = boundary.copy()
    if opts.initialization == "datum-sup":
        values[grid.interior] = float(boundary[grid.boundary].max())
    elif opts.initialization == "harmonic":
        values = np.clip(harmonic_extension(grid, boundary, grid.interior), 0.0, None)
    elif opts.initialization == "given":
        if initial is None:
            raise ConfigurationError("initialization 'given' needs an initial field")
        if not grid.same_lattice(initial.grid):
            raise ValueError("initial field lives on a different lattice")
        if np.any(initial.values[grid.interior] < 0):
            raise ValueError("initial field has negative interior values")
        values[grid.interior] = initial.values[grid.interior]
    return values


def solve(
    grid: Grid,
    g: Optional[BoundaryDatum],
    opts: Optional[SolveOptions] = None,
    initial: Optional[ScalarField] = None,
    mode: Mode = "single",
    boundary_values: Optional[np.ndarray] = None,
) -> Tuple[ScalarField, SolveReport]:
    """
    Minimize the discrete functional with boundary values fixed to g.

    Args:
        grid: Lattice over the domain
        g: Nonnegative boundary datum, sampled at boundary cells
        opts: Relaxation options
        initial: Starting field for ``initialization="given"``
        mode: Label written into the report
        boundary_values: Values on boundary cells to use instead of sampling g

    Returns:
        (minimizing field, report); non-convergence is reported, not raised

    Raises:
        ConfigurationError: If the datum is negative on a boundary cell
        ValueError: If neither g nor boundary_values is given
    """
    opts = opts or SolveOptions()
    lam = opts.lam
    boundary = _boundary_array(grid, g, boundary_values)
    values = _initial_values(grid, boundary, opts, initial)

    parity = np.indices(grid.shape).sum(axis=0) % 2
    colors = [grid.interior & (parity == 0), grid.interior & (parity == 1)]
    cells = np.argwhere(grid.interior)

    energy = _energy(grid, values, lam)
    history = [energy]
    residual = float("inf")
    converged = False
    stalled = 0
    sweeps = 0
    for sweeps in range(1, opts.max_sweeps + 1):
        previous = values.copy()
        if opts.traversal == "red-black":
            _sweep_red_black(grid, values, lam, colors)
        else:
            _sweep_lexicographic(grid, values, lam, cells)
        current = _energy(grid, values, lam)

        if opts.harmonic_replacement:
            replaced = _harmonic_on(grid, boundary, grid.interior & (values > ZERO_TOL))
            replaced_energy = _energy(grid, replaced, lam)
            if replaced_energy <= current:
                values, current = replaced, replaced_energy

        residual = float(np.abs(values - previous)[grid.interior].max())
        if residual <= opts.tolerance and opts.free_boundary_moves:
            values, current, moved = _free_boundary_moves(grid, boundary, values, lam, current)
            if moved:
                residual = float(np.abs(values - previous)[grid.interior].max())

        history.append(current)
        if residual <= opts.tolerance:
            converged = True
            break
        stalled = stalled + 1 if energy - current < STALL_DECREASE else 0
        energy = current
        if stalled >= STALL_SWEEPS:
            logger.debug("Energy stalled after %d sweeps (residual %.3g)", sweeps, residual)
            break

    result = ScalarField(grid, values, lam)
    report = SolveReport(
        energy=history[-1],
        sweeps=sweeps,
        residual=residual,
        positivity_measure=positivity_measure(result),
        converged=converged,
        mode=mode,
        initialization=opts.initialization,
        history=history,
    )
    if converged:
        logger.debug("Solve (%s, %s) converged in %d sweeps, energy %.12g", mode, opts.initialization, sweeps, report.energy)
    else:
        logger.warning("Solve (%s, %s) did not converge in %d sweeps (residual %.3g)", mode, opts.initialization, sweeps, residual)
    return result, report


def default_tie_tolerance(grid: Grid, lam: float) -> float:
    """lam * h times the discrete boundary size: the measure error of moving the free boundary by one cell."""
    return lam * grid.h * float(grid.boundary.sum()) * grid.h ** (grid.dimension - 1)


def solve_extremes(
    grid: Grid,
    g: BoundaryDatum,
    opts: Optional[SolveOptions] = None,
    tie_tolerance: Optional[float] = None,
    multi_start: bool = False,
) -> Tuple[ScalarField, ScalarField, ExtremesReport]:
    """
    Lower and upper discrete minimizers.

    The lower one descends from the zero initialization and the upper one from
    the constant sup of the datum. Both runs are candidates; those within
    ``tie_tolerance`` of the best energy are listed as minimal.

    With ``multi_start`` the harmonic start joins them, and lower and upper
    become the pointwise min and max of the minimal candidates, each polished
    by one more descent without free-boundary moves.

    Returns:
        (lower, upper, report); ``report.ordered`` is False when lower > upper
        somewhere on the closure by more than 1e-10
    """
    opts = opts or SolveOptions()
    tie_tolerance = default_tie_tolerance(grid, opts.lam) if tie_tolerance is None else float(tie_tolerance)

    starts: Dict[str, Mode] = {"zero": "lower", "datum-sup": "upper"}
    if multi_start:
        starts["harmonic"] = "single"
    fields: Dict[str, ScalarField] = {}
    reports: Dict[str, SolveReport] = {}
    for start, mode in starts.items():
        fields[start], reports[start] = solve(grid, g, opts.model_copy(update={"initialization": start}), mode=mode)

    best = min(report.energy for report in reports.values())
    minimal = [name for name, report in reports.items() if report.energy <= best + tie_tolerance]

    if not multi_start:
        lower, upper = fields["zero"], fields["datum-sup"]
        lower_report, upper_report = reports["zero"], reports["datum-sup"]
    elif len(minimal) == 1:
        only = minimal[0]
        lower, upper = fields[only].copy(), fields[only].copy()
        lower_report = _relabel(reports[only], "lower")
        upper_report = _relabel(reports[only], "upper")
    else:
        stack = np.stack([fields[name].values for name in minimal])
        polish = opts.model_copy(update={"initialization": "given", "free_boundary_moves": False})
        lower, lower_report = solve(grid, g, polish, initial=ScalarField(grid, stack.min(axis=0), opts.lam), mode="lower")
        upper, upper_report = solve(grid, g, polish, initial=ScalarField(grid, stack.max(axis=0), opts.lam), mode="upper")

    ordered = bool(np.all(lower.values[grid.closure] <= upper.values[grid.closure] + 1e-10))
    if not ordered:
        excess = float(np.max((lower.values - upper.values)[grid.closure]))
        logger.warning("Lower and upper solves are unordered (lower exceeds upper by %.3g)", excess)

    report = ExtremesReport(
        lower=lower_report,
        upper=upper_report,
        candidates=reports,
        minimal=minimal,
        tie_tolerance=tie_tolerance,
        ordered=ordered,
    )
    logger.debug("Extremes: minimal starts %s, energies %.12g / %.12g", minimal, lower_report.energy, upper_report.energy)
    return lower, upper, report


def _relabel(report: SolveReport, mode: Mode) -> SolveReport:
    return SolveReport(
        energy=report.energy,
        sweeps=report.sweeps,
        residual=report.residual,
        positivity_measure=report.positivity_measure,
        converged=report.converged,
        mode=mode,
        initialization=report.initialization,
        history=list(report.history),
    )


def free_boundary_mask(u: ScalarField) -> np.ndarray:
    """Positive interior cells with at least one stencil neighbor at zero."""
    grid = u.grid
    zero = grid.closure & (u.values <= ZERO_TOL)
    touching = np.zeros(grid.shape, dtype=bool)
    for offset in stencil_offsets(grid.dimension):
        touching |= shifted(zero, offset)
    return u.positive & touching


def free_boundary_cells(u: ScalarField) -> List[Tuple[int, ...]]:
    return u.grid.cells(free_boundary_mask(u))


def _one_sided_gradient(u: ScalarField) -> np.ndarray:
    """Per-cell |grad u| from differences toward the larger neighbor on each axis."""
    squared = np.zeros(u.grid.shape)
    for forward, backward in _axis_pairs(u.values, u.grid.dimension):
        squared += np.maximum(np.maximum(forward, backward) - u.values, 0.0) ** 2
    return np.sqrt(squared) / u.grid.h


def gradient_on_free_boundary(u: ScalarField) -> FreeBoundaryStats:
    """
    Order statistics of the discrete gradient magnitude on the free boundary.

    The difference on each axis is taken toward the larger neighbor, i.e. into
    the positivity set. An empty free boundary gives ``count == 0``.
    """
    mask = free_boundary_mask(u)
    if not mask.any():
        return FreeBoundaryStats(count=0)
    samples = _one_sided_gradient(u)[mask]
    q25, median, q75 = np.percentile(samples, [25, 50, 75])
    return FreeBoundaryStats(
        count=int(samples.size),
        median=float(median),
        iqr=float(q75 - q25),
        q25=float(q25),
        q75=float(q75),
        minimum=float(samples.min()),
        maximum=float(samples.max()),
    )


def interior_gradient_max(u: ScalarField, min_distance: float) -> float:
    """
    Largest discrete gradient magnitude over cells at distance >= min_distance from the boundary.

    Raises:
        ValueError: If no cell is that far inside
    """
    distances = boundary_distance_map(u.grid)
    region = u.grid.interior & (np.nan_to_num(distances, nan=-1.0) >= min_distance)
    if not region.any():
        raise ValueError(f"no interior cell lies {min_distance} away from the boundary")
    squared = np.zeros(u.grid.shape)
    for forward, backward in _axis_pairs(u.values, u.grid.dimension):
        squared += np.maximum(np.abs(forward - u.values), np.abs(u.values - backward)) ** 2
    return float(np.sqrt(squared[region]).max() / u.grid.h)
