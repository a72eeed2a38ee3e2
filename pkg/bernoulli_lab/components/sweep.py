"""
Sweeps over a monotone datum family: extreme solves per t and the jump set.

Rows are independent, so they run on a thread pool; results are always
aggregated in t order, which keeps every output identical whatever the
worker count.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from bernoulli_lab.components.boundary_data import DatumFamily, family_member
from bernoulli_lab.components.energy import ScalarField
from bernoulli_lab.components.geometry import Grid
from bernoulli_lab.components.regularity import CheckReport, check_comparison
from bernoulli_lab.components.solver import SolveOptions, solve_extremes
from bernoulli_lab.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

THREADS_ENV = "BERNOULLI_LAB_THREADS"

SWEEP_COLUMNS = ["t", "gap", "energy_lower", "energy_upper", "converged_lower", "converged_upper"]
# Default jump energy tolerance, in units of the solver tolerance.
ENERGY_TOL_FACTOR = 100.0


@dataclass
class SweepRow:
    """Extreme solves at one family parameter t."""

    t: float
    gap: float
    energy_lower: float
    energy_upper: float
    converged_lower: bool
    converged_upper: bool
    h: float
    energy_tol: float
    lower: Optional[ScalarField] = field(default=None, repr=False)
    upper: Optional[ScalarField] = field(default=None, repr=False)

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError(f"gap must be nonnegative, got {self.gap}")

    @property
    def converged(self) -> bool:
        return self.converged_lower and self.converged_upper

    @property
    def energy_difference(self) -> float:
        return abs(self.energy_upper - self.energy_lower)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "gap": self.gap,
            "energy_lower": self.energy_lower,
            "energy_upper": self.energy_upper,
            "converged_lower": self.converged_lower,
            "converged_upper": self.converged_upper,
        }


@dataclass
class JumpSet:
    intervals: List[Tuple[float, float]]
    gap_tol: Optional[float]
    energy_tol: Optional[float]

    @property
    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def contains(self, t: float) -> bool:
        return any(lo <= t <= hi for lo, hi in self.intervals)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "intervals": [[lo, hi] for lo, hi in self.intervals],
            "measure": self.measure,
            "gap_tol": self.gap_tol,
            "energy_tol": self.energy_tol,
        }


def worker_count(threads: Optional[int] = None) -> int:
    """Threads to use: the argument, else BERNOULLI_LAB_THREADS, 0 meaning one per CPU."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0")
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if threads < 0:
        raise ConfigurationError(f"thread count must be nonnegative, got {threads}")
    return threads or (os.cpu_count() or 1)


def check_t_grid(ts: Sequence[float]) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    if ts.size == 0:
        raise ValueError("t-grid is empty")
    if np.any(ts <= 0) or np.any(ts >= 1):
        raise ValueError("t-grid must lie inside (0, 1)")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("t-grid must be strictly increasing")
    return ts


def t_grid(tmin: float, tmax: float, tstep: float) -> np.ndarray:
    """tmin, tmin + tstep, ... up to tmax, rounded to 12 decimals so that grid points land exactly."""
    if not tstep > 0:
        raise ValueError(f"tstep must be positive, got {tstep}")
    count = int(np.floor((tmax - tmin) / tstep + 1e-9)) + 1
    return check_t_grid(np.round(tmin + tstep * np.arange(count), 12))


def run_sweep(
    grid: Grid,
    fam: DatumFamily,
    ts: Sequence[float],
    opts: Optional[SolveOptions] = None,
    threads: Optional[int] = None,
    keep_fields: bool = False,
    progress: bool = False,
) -> List[SweepRow]:
    """
    Solve the extremes at every t of a family.

    Args:
        grid: Lattice over the domain
        fam: Monotone datum family
        ts: Strictly increasing parameters in (0, 1)
        opts: Solver options
        threads: Worker threads (default from BERNOULLI_LAB_THREADS)
        keep_fields: Keep lower/upper fields on the rows
        progress: Show a progress bar

    Returns:
        Rows in t order; rows with a non-converged solve are kept and flagged
    """
    ts = check_t_grid(ts)
    opts = opts or SolveOptions()

    def solve_row(t: float) -> SweepRow:
        lower, upper, report = solve_extremes(grid, family_member(fam, t), opts)
        return SweepRow(
            t=float(t),
            gap=lower.max_difference(upper),
            energy_lower=report.lower.energy,
            energy_upper=report.upper.energy,
            converged_lower=report.lower.converged,
            converged_upper=report.upper.converged,
            h=grid.h,
            energy_tol=ENERGY_TOL_FACTOR * opts.tolerance,
            lower=lower if keep_fields else None,
            upper=upper if keep_fields else None,
        )

    workers = min(worker_count(threads), len(ts))
    logger.debug("Sweeping %d values of t on %d threads", len(ts), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(tqdm(pool.map(solve_row, ts), total=len(ts), desc="Sweep", disable=not progress))

    for row in rows:
        if not row.converged:
            logger.warning("Row t=%g has a non-converged solve; excluded from jump statistics", row.t)
    return rows


def jump_set(
    rows: Sequence[SweepRow],
    gap_tol: Optional[float] = None,
    energy_tol: Optional[float] = None,
) -> JumpSet:
    """
    t-intervals where the extreme solves differ but cost the same.

    A row is a jump when gap > gap_tol (default 10 h) and
    |energy_upper - energy_lower| <= energy_tol (default the row's own
    ``energy_tol``: 100 times the solver tolerance for grid rows).

    Each maximal run of jump rows becomes one interval reaching halfway to
    the neighboring t values, so a lone spike has the width of one t-step.
    Non-converged rows are skipped.
    """
    usable = [row for row in rows if row.converged]
    ts = [row.t for row in usable]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("sweep rows must be sorted by t")

    def is_jump(row: SweepRow) -> bool:
        gap_limit = 10.0 * row.h if gap_tol is None else gap_tol
        energy_limit = row.energy_tol if energy_tol is None else energy_tol
        return row.gap > gap_limit and row.energy_difference <= energy_limit

    flags = [is_jump(row) for row in usable]
    intervals = []
    k = 0
    while k < len(usable):
        if not flags[k]:
            k += 1
            continue
        start = k
        while k + 1 < len(usable) and flags[k + 1]:
            k += 1
        lo = 0.5 * (ts[start - 1] + ts[start]) if start > 0 else ts[start]
        hi = 0.5 * (ts[k] + ts[k + 1]) if k + 1 < len(usable) else ts[k]
        intervals.append((float(lo), float(hi)))
        k += 1
    jumps = JumpSet(intervals, gap_tol, energy_tol)
    logger.debug("Jump set: %d interval(s), measure %.6g", len(intervals), jumps.measure)
    return jumps


def check_sweep_monotonicity(rows: Sequence[SweepRow], tol: float = 1e-8) -> List[CheckReport]:
    """
    Comparison check between every pair of adjacent rows, for lower and upper fields.

    Raises:
        ValueError: If the rows were produced without ``keep_fields``
    """
    reports = []
    for before, after in zip(rows, rows[1:]):
        for side in ("lower", "upper"):
            low, high = getattr(before, side), getattr(after, side)
            if low is None or high is None:
                raise ValueError("monotonicity needs rows with fields (run_sweep(keep_fields=True))")
            report = check_comparison(low, high, tol)
            report.params.update({"side": side, "t": before.t, "t_next": after.t})
            reports.append(report)
    return reports


def energy_diagnostics(rows: Sequence[SweepRow], tol: float = 1e-10) -> List[Dict[str, float]]:
    """Adjacent rows whose lower energy decreases in t; logged, never raised."""
    flagged = []
    for before, after in zip(rows, rows[1:]):
        drop = before.energy_lower - after.energy_lower
        if drop > tol:
            flagged.append({"t": before.t, "t_next": after.t, "decrease": drop})
            logger.warning("Energy decreases from t=%g to t=%g by %.3g", before.t, after.t, drop)
    return flagged


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in rows], columns=SWEEP_COLUMNS)
