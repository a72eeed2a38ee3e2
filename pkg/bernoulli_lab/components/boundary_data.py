"""
Boundary data g, monotone families {g_t}, and empirical regularity estimators.

Datum kinds (``{"kind": ..., "params": {...}}``):

- constant: ``value``
- linear: ``value + gradient . x``
- power: ``offset + coefficient * |x - anchor|**exponent``
- table: piecewise-linear in ``coordinate`` (x, y, or angle about ``center``)
- radial-step: ``inside`` for |x - center| < radius, ``outside`` otherwise
- radial-harmonic: the radial harmonic function equal to ``inside`` at radius
  ``inner`` and ``outside`` at radius ``outer`` (log r in 2D, r**(2-d) otherwise),
  clipped at zero; it extends annulus data to cells off the two circles
- halfspace: ``inside`` where normal . x <= offset, ``outside`` otherwise

Every datum is post-composed with ``scale * g + shift``; families act through
those two fields.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from bernoulli_lab.components.energy import ScalarField, dirichlet_energy, harmonic_extension
from bernoulli_lab.components.geometry import Grid
from bernoulli_lab.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# Regions larger than this are subsampled with a deterministic stride.
MAX_PAIR_CELLS = 100_000

DatumKind = Literal["constant", "linear", "power", "table", "radial-step", "radial-harmonic", "halfspace"]
FamilyKind = Literal["additive-shift", "scaling", "vertical-translation"]


class BoundaryDatum(BaseModel):
    """A nonnegative boundary datum given by a closed-form rule or a table."""

    model_config = ConfigDict(frozen=True)

    kind: DatumKind
    params: Dict[str, Any] = Field(default_factory=dict)
    scale: float = Field(1.0, ge=0)
    shift: float = 0.0
    nonnegative: bool = True

    @model_validator(mode="after")
    def _check_params(self) -> "BoundaryDatum":
        p = self.params
        if self.kind == "constant":
            if "value" not in p or not math.isfinite(float(p["value"])):
                raise ValueError("constant datum needs a finite value")
            if self.nonnegative and float(p["value"]) < 0:
                raise ValueError("constant datum is negative")
        elif self.kind == "linear":
            if "value" not in p or "gradient" not in p:
                raise ValueError("linear datum needs value and gradient")
        elif self.kind == "power":
            exponent = float(p.get("exponent", 0.0))
            if "anchor" not in p or not 0 < exponent:
                raise ValueError("power datum needs an anchor and a positive exponent")
            if self.nonnegative and (float(p.get("coefficient", 1.0)) < 0 or float(p.get("offset", 0.0)) < 0):
                raise ValueError("power datum with negative coefficient or offset can go negative")
        elif self.kind == "table":
            knots = np.asarray(p.get("knots", []), dtype=float)
            values = np.asarray(p.get("values", []), dtype=float)
            if knots.size < 2 or knots.shape != values.shape:
                raise ValueError("table datum needs matching knots and values (at least two)")
            if not np.all(np.isfinite(values)) or not np.all(np.isfinite(knots)):
                raise ValueError("table datum values must be finite")
            if np.any(np.diff(knots) <= 0):
                raise ValueError("table knots must be strictly increasing")
            if p.get("coordinate", "x") not in ("x", "y", "angle"):
                raise ValueError("table coordinate must be x, y or angle")
            if self.nonnegative and np.any(values < 0):
                raise ValueError("table datum has negative values")
        elif self.kind == "radial-step":
            if "center" not in p or not float(p.get("radius", 0.0)) > 0:
                raise ValueError("radial-step datum needs a center and a positive radius")
        elif self.kind == "radial-harmonic":
            inner, outer = float(p.get("inner", 0.0)), float(p.get("outer", 0.0))
            if "center" not in p or not 0 < inner < outer:
                raise ValueError("radial-harmonic datum needs a center and radii 0 < inner < outer")
        elif self.kind == "halfspace":
            if "normal" not in p or "offset" not in p:
                raise ValueError("halfspace datum needs a normal and an offset")
        if self.kind in ("radial-step", "radial-harmonic", "halfspace") and self.nonnegative:
            if float(p.get("inside", 0.0)) < 0 or float(p.get("outside", 0.0)) < 0:
                raise ValueError(f"{self.kind} datum has a negative level")
        return self

    def evaluate_raw(self, points: np.ndarray) -> np.ndarray:
        """Values at points shaped (n, d), without the sign check."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.params
        if self.kind == "constant":
            base = np.full(pts.shape[0], float(p["value"]))
        elif self.kind == "linear":
            gradient = np.asarray(p["gradient"], dtype=float)[: pts.shape[1]]
            base = float(p["value"]) + pts[:, : gradient.size] @ gradient
        elif self.kind == "power":
            anchor = np.asarray(p["anchor"], dtype=float)[: pts.shape[1]]
            distance = np.linalg.norm(pts[:, : anchor.size] - anchor, axis=1)
            base = float(p.get("offset", 0.0)) + float(p.get("coefficient", 1.0)) * distance ** float(p["exponent"])
        elif self.kind == "table":
            knots = np.asarray(p["knots"], dtype=float)
            values = np.asarray(p["values"], dtype=float)
            coordinate = p.get("coordinate", "x")
            if coordinate == "angle":
                center = np.asarray(p.get("center", [0.0, 0.0]), dtype=float)
                angle = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
                base = np.interp(angle, knots, values, period=2.0 * math.pi)
            else:
                base = np.interp(pts[:, 0 if coordinate == "x" else 1], knots, values)
        elif self.kind == "radial-step":
            center = np.asarray(p["center"], dtype=float)[: pts.shape[1]]
            inside = np.linalg.norm(pts[:, : center.size] - center, axis=1) < float(p["radius"])
            base = np.where(inside, float(p.get("inside", 0.0)), float(p.get("outside", 0.0)))
        elif self.kind == "radial-harmonic":
            base = _radial_harmonic(pts, p)
        else:
            normal = np.asarray(p["normal"], dtype=float)[: pts.shape[1]]
            inside = pts[:, : normal.size] @ normal <= float(p["offset"]) + 1e-9
            base = np.where(inside, float(p.get("inside", 0.0)), float(p.get("outside", 0.0)))
        return self.scale * base + self.shift


def _radial_harmonic(pts: np.ndarray, p: Dict[str, Any]) -> np.ndarray:
    center = np.asarray(p["center"], dtype=float)[: pts.shape[1]]
    inner, outer = float(p["inner"]), float(p["outer"])
    radius = np.maximum(np.linalg.norm(pts[:, : center.size] - center, axis=1), 1e-12 * inner)
    d = pts.shape[1]

    def potential(r):
        return np.log(r) if d == 2 else r ** (2.0 - d)

    inside, outside = float(p.get("inside", 0.0)), float(p.get("outside", 0.0))
    fraction = (potential(radius) - potential(inner)) / (potential(outer) - potential(inner))
    return np.maximum(inside + (outside - inside) * fraction, 0.0)


class DatumFamily(BaseModel):
    """A monotone one-parameter family {g_t}, t in (0, 1)."""

    model_config = ConfigDict(frozen=True)

    base: BoundaryDatum
    kind: FamilyKind = "additive-shift"
    rate: float = Field(1.0, gt=0)
    bound: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_rate(self) -> "DatumFamily":
        if self.kind == "vertical-translation" and self.rate < 1.0:
            raise ValueError("vertical-translation family needs rate >= 1 so that g_t - g_s >= t - s")
        return self


def eval_datum(g: BoundaryDatum, point: Union[Sequence[float], np.ndarray]) -> Union[float, np.ndarray]:
    """
    Evaluate a datum at one point (returns a float) or at points shaped (n, d).

    Raises:
        ConfigurationError: If the datum is negative at an evaluated point
    """
    pts = np.asarray(point, dtype=float)
    single = pts.ndim <= 1
    values = g.evaluate_raw(pts.reshape(1, -1) if single else pts)
    if g.nonnegative and np.any(values < 0):
        worst = int(np.argmin(values))
        raise ConfigurationError(f"{g.kind} datum is negative ({values[worst]:.3g}) at an evaluated point")
    return float(values[0]) if single else values


def family_member(fam: DatumFamily, t: float) -> BoundaryDatum:
    """
    The datum g_t of a family.

    Raises:
        ValueError: If t is outside (0, 1)
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"family parameter t must lie in (0, 1), got {t}")
    base = fam.base
    if fam.kind == "scaling":
        return base.model_copy(update={"scale": base.scale * t, "shift": base.shift * t})
    return base.model_copy(update={"shift": base.shift + fam.rate * t})


def sample_datum(g: BoundaryDatum, grid: Grid) -> np.ndarray:
    """Datum values on boundary cells, zero elsewhere."""
    values = np.zeros(grid.shape)
    values[grid.boundary] = eval_datum(g, grid.centers[grid.boundary])
    return values


def datum_field(g: BoundaryDatum, grid: Grid, lam: float = 1.0) -> ScalarField:
    """Field carrying the datum on boundary cells and zero inside."""
    return ScalarField(grid, sample_datum(g, grid), lam)


def datum_h1_proxy(g: BoundaryDatum, grid: Grid) -> Tuple[float, float]:
    """
    Desk-scale stand-in for the H^1 norm of a datum.

    Returns:
        (sup norm on boundary cells, Dirichlet energy of the discrete harmonic extension)
    """
    boundary = sample_datum(g, grid)
    extension = harmonic_extension(grid, boundary, grid.interior)
    sup = float(np.abs(boundary[grid.boundary]).max())
    return sup, dirichlet_energy(ScalarField(grid, extension))


def family_sup_bound(fam: DatumFamily, grid: Grid, ts: Sequence[float]) -> float:
    """
    Largest boundary sup norm over the sampled members.

    Raises:
        ConfigurationError: If it exceeds the family's declared bound M
    """
    worst = max(float(np.abs(sample_datum(family_member(fam, t), grid)[grid.boundary]).max()) for t in ts)
    if fam.bound is not None and worst > fam.bound + 1e-12:
        raise ConfigurationError(f"family exceeds its uniform bound M={fam.bound}: sup norm {worst:.6g}")
    return worst


@dataclass
class ModulusCurve:
    """Empirical modulus of continuity: omega(delta) at increasing deltas."""

    deltas: np.ndarray
    omegas: np.ndarray

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.omegas = np.asarray(self.omegas, dtype=float)
        if self.deltas.shape != self.omegas.shape:
            raise ValueError("deltas and omegas differ in length")
        if np.any(np.diff(self.deltas) <= 0):
            raise ValueError("deltas must be strictly increasing")
        if np.any(self.omegas < 0) or np.any(np.diff(self.omegas) < 0):
            raise ValueError("omega must be nonnegative and nondecreasing")

    def at(self, delta: float) -> float:
        index = int(np.searchsorted(self.deltas, delta * (1 + 1e-12), side="right")) - 1
        if index < 0:
            raise ValueError(f"delta {delta} is below the smallest sampled delta")
        return float(self.omegas[index])


def _values_and_region(values, region: Optional[np.ndarray], grid: Optional[Grid]) -> Tuple[Grid, np.ndarray, np.ndarray]:
    if isinstance(values, ScalarField):
        grid = values.grid
        array = values.values
        default = grid.closure
    elif isinstance(values, BoundaryDatum):
        if grid is None:
            raise ValueError("a grid is required to sample a datum")
        default = grid.boundary
    else:
        raise TypeError(f"expected a ScalarField or BoundaryDatum, got {type(values).__name__}")
    region = default if region is None else np.asarray(region, dtype=bool) & grid.closure
    if not region.any():
        raise ValueError("region is empty")
    if isinstance(values, BoundaryDatum):
        # evaluated at every region cell, interior cells included
        array = np.zeros(grid.shape)
        array[region] = eval_datum(values, grid.centers[region])
    count = int(region.sum())
    if count > MAX_PAIR_CELLS:
        stride = math.ceil(count / MAX_PAIR_CELLS)
        kept = np.zeros(count, dtype=bool)
        kept[::stride] = True
        region = region.copy()
        region[region] = kept
        logger.debug("Subsampled %d region cells with stride %d", count, stride)
    return grid, array, region


def _lattice_offsets(dimension: int, reach: int) -> np.ndarray:
    """Nonzero integer offsets with |o| <= reach, one per +/- pair."""
    ranges = [np.arange(-reach, reach + 1)] * dimension
    offsets = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, dimension)
    # sign of the first nonzero component picks one of each +/- pair
    leading = offsets[np.arange(len(offsets)), np.argmax(offsets != 0, axis=1)]
    keep = (leading > 0) & (np.sum(offsets ** 2, axis=1) <= reach ** 2)
    return offsets[keep]


def _pair_slices(shape: Tuple[int, ...], offset: np.ndarray) -> Optional[Tuple[tuple, tuple]]:
    first, second = [], []
    for n, o in zip(shape, offset):
        o = int(o)
        if abs(o) >= n:
            return None
        if o >= 0:
            first.append(slice(0, n - o))
            second.append(slice(o, n))
        else:
            first.append(slice(-o, n))
            second.append(slice(0, n + o))
    return tuple(first), tuple(second)


def pair_differences(
    grid: Grid,
    values: np.ndarray,
    region: np.ndarray,
    max_sep: float,
    anchor: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Largest |u(x) - u(y)| per lattice separation vector.

    Scans every pair of region cells with |x - y| <= max_sep (and at least
    one cell in ``anchor`` when given).

    Returns:
        (separation lengths, max difference per separation; -inf where no pair)
    """
    reach = int(math.floor(max_sep / grid.h * (1 + 1e-9)))
    offsets = _lattice_offsets(grid.dimension, reach)
    lengths = np.linalg.norm(offsets, axis=1) * grid.h
    largest = np.full(len(offsets), -np.inf)
    for k, offset in enumerate(offsets):
        slices = _pair_slices(grid.shape, offset)
        if slices is None:
            continue
        first, second = slices
        valid = region[first] & region[second]
        if anchor is not None:
            valid &= anchor[first] | anchor[second]
        if valid.any():
            largest[k] = float(np.abs(values[first] - values[second])[valid].max())
    return lengths, largest


def empirical_modulus(
    values: Union[ScalarField, BoundaryDatum],
    region: Optional[np.ndarray],
    deltas: Sequence[float],
    grid: Optional[Grid] = None,
) -> ModulusCurve:
    """
    omega(delta) = max |u(x) - u(y)| over region pairs with |x - y| <= delta.

    Args:
        values: Field, or datum sampled on ``grid``
        region: Cell mask (defaults to the closed domain for fields, boundary cells for data)
        deltas: Positive, increasing separations
        grid: Grid for sampling a datum

    Raises:
        ValueError: If the region is empty or deltas are not positive and sorted
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size == 0 or np.any(deltas <= 0) or np.any(np.diff(deltas) <= 0):
        raise ValueError("deltas must be positive and strictly increasing")
    grid, array, region = _values_and_region(values, region, grid)
    lengths, largest = pair_differences(grid, array, region, float(deltas[-1]))

    order = np.argsort(lengths, kind="stable")
    lengths = lengths[order]
    running = np.maximum.accumulate(np.maximum(largest[order], 0.0)) if lengths.size else lengths
    omegas = []
    for delta in deltas:
        count = int(np.searchsorted(lengths, delta * (1 + 1e-9), side="right"))
        omegas.append(float(running[count - 1]) if count else 0.0)
    return ModulusCurve(deltas, np.maximum.accumulate(np.asarray(omegas)))


def holder_seminorm(
    values: ScalarField,
    gamma: float,
    region: Optional[np.ndarray] = None,
    min_sep: Optional[float] = None,
    max_sep: Optional[float] = None,
    anchor: Optional[np.ndarray] = None,
) -> float:
    """
    sup |u(x) - u(y)| / |x - y|**gamma over region pairs with min_sep <= |x - y| <= max_sep.

    Raises:
        ValueError: If gamma is outside (0, 1], min_sep < h, or no pair qualifies
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"Hölder exponent must lie in (0, 1], got {gamma}")
    grid, array, region = _values_and_region(values, region, None)
    min_sep = grid.h if min_sep is None else float(min_sep)
    if min_sep < grid.h * (1 - 1e-9):
        raise ValueError(f"min_sep={min_sep} is below the grid spacing {grid.h}")
    max_sep = grid.spec.diameter() + 2 * grid.h if max_sep is None else float(max_sep)

    lengths, largest = pair_differences(grid, array, region, max_sep, anchor=anchor)
    usable = (lengths >= min_sep * (1 - 1e-9)) & np.isfinite(largest)
    if not usable.any():
        raise ValueError("no cell pair satisfies the separation constraints")
    return float(np.max(largest[usable] / lengths[usable] ** gamma))
