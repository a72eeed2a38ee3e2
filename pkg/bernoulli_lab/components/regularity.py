"""
Numerical checks of the qualitative properties of one-phase minimizers.

Every check returns a ``CheckReport`` whose ``passed`` flag is exactly
``violation <= tolerance``. Checks never raise on a failed property; they
raise only on malformed arguments.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from bernoulli_lab.components.boundary_data import (
    BoundaryDatum,
    ModulusCurve,
    datum_field,
    empirical_modulus,
    holder_seminorm,
)
from bernoulli_lab.components.energy import ZERO_TOL, ScalarField, total_energy
from bernoulli_lab.components.geometry import DomainSpec, Grid, boundary_distance_map, build_grid
from bernoulli_lab.components.solver import SolveOptions, default_tie_tolerance, solve

logger = logging.getLogger(__name__)

CellOrPair = Union[Tuple[int, ...], Tuple[Tuple[int, ...], Tuple[int, ...]], None]


@dataclass
class CheckReport:
    name: str
    passed: bool
    violation: float
    tolerance: float
    params: Dict[str, Any] = field(default_factory=dict)
    location: CellOrPair = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passed,
            "violation": self.violation,
            "tolerance": self.tolerance,
            "params": self.params,
            "location": None if self.location is None else list(self.location),
        }


def _report(name: str, violation: float, tolerance: float, params: Dict[str, Any], location: CellOrPair = None) -> CheckReport:
    report = CheckReport(name, bool(violation <= tolerance), float(violation), float(tolerance), params, location)
    log = logger.debug if report.passed else logger.info
    log("Check %s: %s (violation %.3g, tolerance %.3g)", name, "pass" if report.passed else "FAIL", violation, tolerance)
    return report


def _same_grid(u: ScalarField, v: ScalarField) -> None:
    if not u.grid.same_lattice(v.grid):
        raise ValueError("fields live on different grids")


def check_comparison(u_low: ScalarField, u_high: ScalarField, tol: float = 1e-8) -> CheckReport:
    """
    Pass iff u_high >= u_low - tol on every cell of the closed domain.

    The violation is max(0, -min(u_high - u_low)).
    """
    _same_grid(u_low, u_high)
    closure = u_low.grid.closure
    difference = np.where(closure, u_high.values - u_low.values, np.inf)
    worst = np.unravel_index(int(np.argmin(difference)), difference.shape)
    minimum = float(difference[worst])
    return _report(
        "comparison",
        max(0.0, -minimum),
        tol,
        {"min_difference": minimum},
        tuple(int(i) for i in worst),
    )


def check_cut_paste(
    u: ScalarField,
    v: ScalarField,
    lam: Optional[float] = None,
    energy_tolerance: Optional[float] = None,
) -> CheckReport:
    """
    Submodularity slack [E(u) + E(v)] - [E(max) + E(min)], which must be >= 0.

    With ``energy_tolerance`` (for u, v both minimizers of the same datum) the
    check also requires max and min to cost no more than the better of u, v
    plus that tolerance.

    Raises:
        ValueError: If the grids or the boundary values differ
    """
    _same_grid(u, v)
    if float(np.abs(u.boundary_values() - v.boundary_values()).max()) > 1e-12:
        raise ValueError("cut-and-paste needs identical boundary values")
    lam = u.lam if lam is None else lam

    upper = u.with_values(np.maximum(u.values, v.values))
    lower = u.with_values(np.minimum(u.values, v.values))
    e_u, e_v = total_energy(u, lam), total_energy(v, lam)
    e_max, e_min = total_energy(upper, lam), total_energy(lower, lam)
    slack = (e_u + e_v) - (e_max + e_min)
    tolerance = 1e-12 * max(1.0, abs(e_u + e_v))

    violation = max(0.0, -slack)
    params = {"lambda": lam, "slack": slack, "energy_u": e_u, "energy_v": e_v, "energy_max": e_max, "energy_min": e_min}
    if energy_tolerance is not None:
        excess = max(e_max, e_min) - min(e_u, e_v)
        params["energy_excess"] = excess
        params["energy_tolerance"] = energy_tolerance
        violation = max(violation, excess - energy_tolerance)
    return _report("cutpaste", violation, tolerance, params)


def _patch_mask(grid: Grid, patch) -> np.ndarray:
    if isinstance(patch, np.ndarray) and patch.dtype == bool:
        mask = patch & grid.boundary
    else:
        mask = np.zeros(grid.shape, dtype=bool)
        for cell in patch:
            mask[tuple(int(i) for i in cell)] = True
        mask &= grid.boundary
    if not mask.any():
        raise ValueError("barrier patch contains no boundary cell")
    return mask


def check_barrier_positivity(u: ScalarField, patch, level: float, rho: float) -> CheckReport:
    """
    Pass iff every interior cell within ``rho`` of the patch has u > 1e-12.

    Args:
        u: Converged solve
        patch: Boundary cells (mask or cell list) where the datum is at least ``level``
        level: Lower bound of the datum on the patch
        rho: Radius of the positivity claim

    Raises:
        ValueError: If the patch is empty or the datum drops below ``level`` on it
    """
    grid = u.grid
    mask = _patch_mask(grid, patch)
    if float(u.values[mask].min()) < level - 1e-12:
        raise ValueError(f"datum falls below level {level} on the patch")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")

    centers = grid.centers
    distances, _ = cKDTree(centers[mask]).query(centers[grid.interior])
    near = np.zeros(grid.shape, dtype=bool)
    near[grid.interior] = distances <= rho
    failing = near & (u.values <= ZERO_TOL)

    location = None
    if failing.any():
        nearest = np.full(grid.shape, np.inf)
        nearest[grid.interior] = distances
        location = tuple(int(i) for i in np.unravel_index(int(np.argmin(np.where(failing, nearest, np.inf))), grid.shape))
    return _report(
        "barrier",
        float(failing.sum()),
        0.0,
        {"level": level, "rho": rho, "cells_checked": int(near.sum()), "cells_failing": int(failing.sum())},
        location,
    )


def largest_passing_radius(u: ScalarField, patch, level: float, ladder: Optional[Sequence[float]] = None) -> float:
    """
    Largest radius on a ladder for which the barrier check passes (0.0 if none).

    The default ladder is diam / 2**k for k = 1..10.
    """
    if ladder is None:
        diameter = u.grid.spec.diameter()
        ladder = [diameter / 2 ** k for k in range(1, 11)]
    passing = [rho for rho in sorted(ladder) if check_barrier_positivity(u, patch, level, rho).passed]
    return max(passing) if passing else 0.0


@dataclass
class EquicontinuityReport:
    curves: List[ModulusCurve]
    envelope: ModulusCurve

    def to_dict(self) -> Dict[str, Any]:
        return {
            "deltas": self.envelope.deltas.tolist(),
            "envelope": self.envelope.omegas.tolist(),
            "curves": [curve.omegas.tolist() for curve in self.curves],
        }


def equicontinuity_report(fields: Sequence[ScalarField], deltas: Sequence[float]) -> EquicontinuityReport:
    """
    Modulus curves of a family of fields on the closed domain and their pointwise max.

    Raises:
        ValueError: If no field is given or the fields live on different grids
    """
    if not fields:
        raise ValueError("equicontinuity needs at least one field")
    for other in fields[1:]:
        _same_grid(fields[0], other)
    curves = [empirical_modulus(u, None, deltas) for u in fields]
    envelope = np.max(np.stack([curve.omegas for curve in curves]), axis=0)
    return EquicontinuityReport(curves, ModulusCurve(curves[0].deltas, envelope))


def _band_mask(grid: Grid, band: float) -> np.ndarray:
    if band < 2 * grid.h * (1 - 1e-9):
        raise ValueError(f"band {band} is narrower than 2h = {2 * grid.h}")
    distances = boundary_distance_map(grid)
    return grid.closure & (np.nan_to_num(distances, nan=np.inf) <= band)


def boundary_holder_quotient(u: ScalarField, gamma: float, band: float, max_sep: Optional[float] = None) -> float:
    """
    Hölder quotient over pairs with at least one cell within ``band`` of the boundary.

    ``max_sep`` caps the pair separation (default: the domain diameter).

    Raises:
        ValueError: If band < 2h
    """
    return holder_seminorm(u, gamma, max_sep=max_sep, anchor=_band_mask(u.grid, band))


def holder_bound_ratio(u: ScalarField, g: BoundaryDatum, gamma: float, band: float, max_sep: Optional[float] = None) -> float:
    """
    Boundary quotient divided by 1 + [g]_gamma + sup|u|.

    This is the quantity that stays bounded under refinement when the
    datum is C^gamma; [g]_gamma is taken over boundary cells.
    """
    quotient = boundary_holder_quotient(u, gamma, band, max_sep)
    datum_seminorm = holder_seminorm(datum_field(g, u.grid, u.lam), gamma, region=u.grid.boundary, max_sep=max_sep)
    sup = float(np.abs(u.values[u.grid.closure]).max())
    return quotient / (1.0 + datum_seminorm + sup)


def _cell_index(grid: Grid, points: np.ndarray) -> Tuple[np.ndarray, ...]:
    index = []
    for axis_values, coordinate in zip(grid.axes, np.moveaxis(points, -1, 0)):
        position = (coordinate - axis_values[0]) / grid.h
        rounded = np.rint(position)
        if np.any(np.abs(position - rounded) > 1e-6):
            raise ValueError("subdomain lattice is not aligned with the field's lattice")
        index.append(rounded.astype(int))
    return tuple(index)


def check_restriction(
    u: ScalarField,
    subdomain: DomainSpec,
    opts: Optional[SolveOptions] = None,
    tolerance: Optional[float] = None,
) -> CheckReport:
    """
    Re-solve on a subdomain with u's own values as datum and compare energies.

    A minimizer restricted to a subdomain minimizes there with its own trace,
    so the violation is how much the restriction costs above the re-solve.
    The subdomain's lattice must coincide with u's.

    Raises:
        ValueError: If the subdomain lattice is misaligned or leaves u's interior
    """
    opts = (opts or SolveOptions()).model_copy(update={"lam": u.lam})
    grid = u.grid
    sub = build_grid(subdomain, grid.h)
    closure_cells = sub.centers[sub.closure]
    index = _cell_index(grid, closure_cells)
    if any(np.any(i < 0) or np.any(i >= n) for i, n in zip(index, grid.shape)):
        raise ValueError("subdomain extends beyond the field's grid")
    if not np.all(grid.interior[index][sub.interior[sub.closure]]):
        raise ValueError("subdomain interior must lie inside the field's interior")

    restricted = np.zeros(sub.shape)
    restricted[sub.closure] = u.values[index]
    own = ScalarField(sub, restricted, u.lam)
    resolved, report = solve(sub, None, opts, boundary_values=restricted)

    own_energy = total_energy(own)
    tolerance = default_tie_tolerance(sub, u.lam) if tolerance is None else tolerance
    return _report(
        "restriction",
        max(0.0, own_energy - report.energy),
        tolerance,
        {
            "restricted_energy": own_energy,
            "resolved_energy": report.energy,
            "max_difference": own.max_difference(resolved),
            "converged": report.converged,
        },
    )


def holder_exponent_estimate(quotients: Sequence[float], spacings: Sequence[float]) -> float:
    """
    Log-log slope of quotients against grid spacing along a refinement ladder.

    Near zero means bounded; negative means the quotient blows up as h shrinks.
    """
    q = np.asarray(quotients, dtype=float)
    h = np.asarray(spacings, dtype=float)
    if q.size < 2 or q.shape != h.shape or np.any(q <= 0) or np.any(h <= 0):
        raise ValueError("need at least two positive quotients with matching spacings")
    slope, _ = np.polyfit(np.log(h), np.log(q), 1)
    return float(slope) if math.isfinite(slope) else float("nan")
