"""
Domains, uniform lattices over them, and boundary geometry.

A domain is described by a ``DomainSpec`` (JSON: ``{"kind", "params",
"dimension"}``). ``build_grid`` lays a uniform lattice of spacing ``h`` over
its bounding box, padded by one ring, and labels every cell center:

- interior: the center lies strictly inside the domain;
- boundary: not interior, but some neighbor in the full 3**d block is interior;
- exterior: everything else.

Boundary cells carry the Dirichlet datum; interior cells carry unknowns.
"""

import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import ndimage
from scipy.integrate import trapezoid
from scipy.spatial import cKDTree

from bernoulli_lab.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

DomainKind = Literal[
    "interval", "rectangle", "disk", "annulus", "convex-polygon", "lipschitz-graph"
]

# Membership is strict: centers closer than this to the boundary are outside.
MEMBERSHIP_EPS = 1e-9

_REQUIRED_PARAMS = {
    "interval": ("a", "b"),
    "rectangle": ("xmin", "xmax", "ymin", "ymax"),
    "disk": ("center", "radius"),
    "annulus": ("center", "inner", "outer"),
    "convex-polygon": ("vertices",),
    "lipschitz-graph": ("x0", "x1", "samples", "cap"),
}


class CellLabel(IntEnum):
    EXTERIOR = 0
    BOUNDARY = 1
    INTERIOR = 2


Cell = Tuple[int, ...]


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


class DomainSpec(BaseModel):
    """Geometry of an admissible domain D."""

    model_config = ConfigDict(frozen=True)

    kind: DomainKind
    params: Dict[str, Any]
    dimension: int = 2

    @model_validator(mode="before")
    @classmethod
    def _default_dimension(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("dimension") is None:
            data = dict(data)
            data["dimension"] = 1 if data.get("kind") == "interval" else 2
        return data

    @model_validator(mode="after")
    def _check_geometry(self) -> "DomainSpec":
        missing = [k for k in _REQUIRED_PARAMS[self.kind] if k not in self.params]
        if missing:
            raise ValueError(f"{self.kind} domain is missing params: {missing}")

        expected = 1 if self.kind == "interval" else 2
        if self.dimension != expected:
            raise ValueError(f"{self.kind} domain has dimension {expected}, got {self.dimension}")

        p = self.params
        if self.kind == "interval":
            if not float(p["b"]) > float(p["a"]):
                raise ValueError("interval needs a < b")
        elif self.kind == "rectangle":
            if not (float(p["xmax"]) > float(p["xmin"]) and float(p["ymax"]) > float(p["ymin"])):
                raise ValueError("rectangle has zero area")
        elif self.kind == "disk":
            if len(p["center"]) != 2 or not float(p["radius"]) > 0:
                raise ValueError("disk needs a 2D center and a positive radius")
        elif self.kind == "annulus":
            if len(p["center"]) != 2 or not 0 < float(p["inner"]) < float(p["outer"]):
                raise ValueError("annulus needs 0 < inner < outer")
        elif self.kind == "convex-polygon":
            vertices = np.asarray(p["vertices"], dtype=float)
            if vertices.ndim != 2 or vertices.shape[0] < 3 or vertices.shape[1] != 2:
                raise ValueError("convex-polygon needs at least three 2D vertices")
            edges = np.roll(vertices, -1, axis=0) - vertices
            turns = _cross(edges, np.roll(edges, -1, axis=0))
            if not (np.all(turns > 0) or np.all(turns < 0)):
                raise ValueError("convex-polygon vertices are not in convex position")
        elif self.kind == "lipschitz-graph":
            samples = np.asarray(p["samples"], dtype=float)
            if samples.ndim != 1 or samples.size < 2 or not np.all(np.isfinite(samples)):
                raise ValueError("lipschitz-graph needs at least two finite samples")
            if not float(p["x1"]) > float(p["x0"]):
                raise ValueError("lipschitz-graph needs x0 < x1")
            side = p.get("side", "above")
            if side not in ("above", "below"):
                raise ValueError("lipschitz-graph side must be 'above' or 'below'")
            cap = float(p["cap"])
            if (side == "above" and not cap > samples.max()) or (side == "below" and not cap < samples.min()):
                raise ValueError("lipschitz-graph cap does not leave a region of positive area")
        return self

    # -- geometry -----------------------------------------------------------------

    def bounding_box(self) -> List[Tuple[float, float]]:
        p = self.params
        if self.kind == "interval":
            return [(float(p["a"]), float(p["b"]))]
        if self.kind == "rectangle":
            return [(float(p["xmin"]), float(p["xmax"])), (float(p["ymin"]), float(p["ymax"]))]
        if self.kind in ("disk", "annulus"):
            cx, cy = (float(c) for c in p["center"])
            r = float(p["radius"] if self.kind == "disk" else p["outer"])
            return [(cx - r, cx + r), (cy - r, cy + r)]
        if self.kind == "convex-polygon":
            v = np.asarray(p["vertices"], dtype=float)
            return [(v[:, 0].min(), v[:, 0].max()), (v[:, 1].min(), v[:, 1].max())]
        samples = np.asarray(p["samples"], dtype=float)
        cap = float(p["cap"])
        lo, hi = (samples.min(), cap) if p.get("side", "above") == "above" else (cap, samples.max())
        return [(float(p["x0"]), float(p["x1"])), (float(lo), float(hi))]

    def diameter(self) -> float:
        return float(math.sqrt(sum((hi - lo) ** 2 for lo, hi in self.bounding_box())))

    def feature_size(self) -> float:
        """Smallest geometric length a grid must resolve."""
        p = self.params
        if self.kind == "interval":
            return float(p["b"]) - float(p["a"])
        if self.kind == "rectangle":
            return min(float(p["xmax"]) - float(p["xmin"]), float(p["ymax"]) - float(p["ymin"]))
        if self.kind == "disk":
            return float(p["radius"])
        if self.kind == "annulus":
            return (float(p["outer"]) - float(p["inner"])) / 2.0
        if self.kind == "convex-polygon":
            v = np.asarray(p["vertices"], dtype=float)
            return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).min())
        samples = np.asarray(p["samples"], dtype=float)
        gap = np.abs(float(p["cap"]) - samples).min()
        return float(min(float(p["x1"]) - float(p["x0"]), gap))

    def area(self) -> float:
        """Exact d-dimensional measure of the domain."""
        p = self.params
        if self.kind == "interval":
            return float(p["b"]) - float(p["a"])
        if self.kind == "rectangle":
            return (float(p["xmax"]) - float(p["xmin"])) * (float(p["ymax"]) - float(p["ymin"]))
        if self.kind == "disk":
            return math.pi * float(p["radius"]) ** 2
        if self.kind == "annulus":
            return math.pi * (float(p["outer"]) ** 2 - float(p["inner"]) ** 2)
        if self.kind == "convex-polygon":
            v = np.asarray(p["vertices"], dtype=float)
            return float(abs(_cross(v, np.roll(v, -1, axis=0)).sum()) / 2.0)
        samples = np.asarray(p["samples"], dtype=float)
        xs = np.linspace(float(p["x0"]), float(p["x1"]), samples.size)
        return float(trapezoid(np.abs(float(p["cap"]) - samples), xs))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Strict membership of points shaped (..., d)."""
        pts = np.asarray(points, dtype=float)
        p = self.params
        eps = MEMBERSHIP_EPS
        x = pts[..., 0]
        if self.kind == "interval":
            return (x > float(p["a"]) + eps) & (x < float(p["b"]) - eps)
        y = pts[..., 1]
        if self.kind == "rectangle":
            return ((x > float(p["xmin"]) + eps) & (x < float(p["xmax"]) - eps)
                    & (y > float(p["ymin"]) + eps) & (y < float(p["ymax"]) - eps))
        if self.kind in ("disk", "annulus"):
            cx, cy = (float(c) for c in p["center"])
            r = np.hypot(x - cx, y - cy)
            if self.kind == "disk":
                return r < float(p["radius"]) - eps
            return (r > float(p["inner"]) + eps) & (r < float(p["outer"]) - eps)
        if self.kind == "convex-polygon":
            v = _counterclockwise(np.asarray(p["vertices"], dtype=float))
            inside = np.ones(x.shape, dtype=bool)
            for start, end in zip(v, np.roll(v, -1, axis=0)):
                edge = end - start
                side = edge[0] * (y - start[1]) - edge[1] * (x - start[0])
                inside &= side > eps * np.linalg.norm(edge)
            return inside
        samples = np.asarray(p["samples"], dtype=float)
        x0, x1, cap = float(p["x0"]), float(p["x1"]), float(p["cap"])
        f = np.interp(x, np.linspace(x0, x1, samples.size), samples)
        inside = (x > x0 + eps) & (x < x1 - eps)
        if p.get("side", "above") == "above":
            return inside & (y > f + eps) & (y < cap - eps)
        return inside & (y < f - eps) & (y > cap + eps)

    def boundary_polylines(self) -> List[Tuple[np.ndarray, bool]]:
        """Polygonal boundary pieces as (points, closed) pairs; graphs give only the graph."""
        p = self.params
        if self.kind == "rectangle":
            x0, x1, y0, y1 = (float(p[k]) for k in ("xmin", "xmax", "ymin", "ymax"))
            return [(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]), True)]
        if self.kind == "convex-polygon":
            return [(_counterclockwise(np.asarray(p["vertices"], dtype=float)), True)]
        if self.kind == "lipschitz-graph":
            samples = np.asarray(p["samples"], dtype=float)
            xs = np.linspace(float(p["x0"]), float(p["x1"]), samples.size)
            return [(np.column_stack([xs, samples]), False)]
        return []


def _counterclockwise(vertices: np.ndarray) -> np.ndarray:
    signed = _cross(vertices, np.roll(vertices, -1, axis=0)).sum()
    return vertices if signed > 0 else vertices[::-1].copy()


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform lattice over a domain with per-cell labels."""

    spec: DomainSpec
    h: float
    axes: Tuple[np.ndarray, ...]
    labels: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.labels.shape

    @property
    def interior(self) -> np.ndarray:
        return self.labels == CellLabel.INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.labels == CellLabel.BOUNDARY

    @property
    def closure(self) -> np.ndarray:
        """Interior and boundary cells: the discrete closed domain."""
        return self.labels != CellLabel.EXTERIOR

    @property
    def centers(self) -> np.ndarray:
        """Cell-center coordinates shaped ``shape + (d,)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dimension

    def cell_center(self, cell: Cell) -> np.ndarray:
        return np.array([axis[i] for axis, i in zip(self.axes, cell)])

    def cells(self, mask: np.ndarray) -> List[Cell]:
        return [tuple(int(i) for i in idx) for idx in np.argwhere(mask)]

    def interior_area(self) -> float:
        """Interior cell count times h**d."""
        return float(self.interior.sum()) * self.cell_volume

    def same_lattice(self, other: "Grid") -> bool:
        return (self is other) or (
            self.shape == other.shape
            and math.isclose(self.h, other.h, rel_tol=1e-12)
            and all(np.allclose(a, b, rtol=0, atol=1e-12 * max(1.0, self.h)) for a, b in zip(self.axes, other.axes))
            and np.array_equal(self.labels, other.labels)
        )

    def to_frame(self) -> pd.DataFrame:
        centers = self.centers.reshape(-1, self.dimension)
        index = np.indices(self.shape).reshape(self.dimension, -1)
        return pd.DataFrame({
            "ix": index[0],
            "iy": index[1] if self.dimension > 1 else np.zeros(index.shape[1], dtype=int),
            "x": centers[:, 0],
            "y": centers[:, 1] if self.dimension > 1 else np.zeros(centers.shape[0]),
            "label": [CellLabel(v).name.lower() for v in self.labels.ravel()],
        })


def stencil_offsets(dimension: int) -> List[Cell]:
    """The 2*d nearest-neighbor offsets of the 5-point (3-point in 1D) stencil."""
    offsets = []
    for axis in range(dimension):
        for step in (-1, 1):
            offset = [0] * dimension
            offset[axis] = step
            offsets.append(tuple(offset))
    return offsets


def shifted(values: np.ndarray, offset: Cell) -> np.ndarray:
    """Array whose entry at a cell is ``values`` at ``cell + offset``.

    The lattice is padded by an exterior ring, so wrap-around only ever pairs
    exterior cells.
    """
    return np.roll(values, shift=tuple(-o for o in offset), axis=tuple(range(values.ndim)))


def build_grid(spec: DomainSpec, h: float) -> Grid:
    """
    Lay a uniform lattice of spacing h over a domain and classify its cells.

    Args:
        spec: Domain geometry
        h: Lattice spacing

    Returns:
        Grid with interior/boundary/exterior labels

    Raises:
        ConfigurationError: If h is not positive, too coarse for the domain,
            or leaves no interior cell
    """
    if not h > 0:
        raise ConfigurationError(f"grid spacing h must be positive, got {h}")
    if h > spec.feature_size() / 2.0 + 1e-12:
        raise ConfigurationError(
            f"h={h} is too coarse for {spec.kind} (smallest feature {spec.feature_size():.6g})"
        )

    axes = []
    for lo, hi in spec.bounding_box():
        n = int(math.ceil((hi - lo) / h - 1e-9))
        axes.append(lo + h * np.arange(-1, n + 2, dtype=float))

    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    interior = spec.contains(mesh)
    if not interior.any():
        raise ConfigurationError(f"h={h} leaves no interior cell in the {spec.kind} domain")

    neighborhood = np.ones((3,) * spec.dimension, dtype=bool)
    boundary = ndimage.binary_dilation(interior, structure=neighborhood) & ~interior

    labels = np.full(interior.shape, CellLabel.EXTERIOR, dtype=np.int8)
    labels[boundary] = CellLabel.BOUNDARY
    labels[interior] = CellLabel.INTERIOR

    logger.debug(
        "Built %s grid h=%g: %d interior, %d boundary cells",
        spec.kind, h, int(interior.sum()), int(boundary.sum()),
    )
    return Grid(spec=spec, h=float(h), axes=tuple(axes), labels=labels)


def boundary_distance_map(grid: Grid) -> np.ndarray:
    """Distance from every cell center to the nearest boundary cell center (NaN outside)."""
    centers = grid.centers
    tree = cKDTree(centers[grid.boundary])
    distances = np.full(grid.shape, np.nan)
    distances[grid.closure], _ = tree.query(centers[grid.closure])
    return distances


def distance_to_boundary(grid: Grid, cell: Cell) -> float:
    """
    Euclidean distance from a cell center to the nearest boundary cell center.

    Raises:
        ValueError: If the cell is exterior
    """
    cell = tuple(int(i) for i in cell)
    if grid.labels[cell] == CellLabel.EXTERIOR:
        raise ValueError(f"cell {cell} is exterior")
    if grid.labels[cell] == CellLabel.BOUNDARY:
        return 0.0
    tree = cKDTree(grid.centers[grid.boundary])
    distance, _ = tree.query(grid.cell_center(cell))
    return float(distance)


def lipschitz_constant(spec: DomainSpec, scale: float, center: Optional[Sequence[float]] = None) -> float:
    """
    Largest local slope of the boundary seen as a graph in windows of a given radius.

    In each window the boundary is rotated to the frame that bisects the range
    of tangent directions it contains; the slope in that frame is
    ``tan(spread / 2)``. Windows are centered at ``center`` if given, otherwise
    at every polygon vertex and edge midpoint. Infinity means the boundary is
    not a graph at that scale.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")

    if spec.kind == "interval":
        return 0.0

    if spec.kind in ("disk", "annulus"):
        radius = float(spec.params["radius"] if spec.kind == "disk" else spec.params["inner"])
        if scale >= 2.0 * radius:
            return math.inf
        spread = 4.0 * math.asin(scale / (2.0 * radius))
        return math.inf if spread >= math.pi else math.tan(spread / 2.0)

    starts, ends = [], []
    for points, closed in spec.boundary_polylines():
        stop = points if closed else points[:-1]
        starts.append(stop)
        ends.append(np.roll(points, -1, axis=0) if closed else points[1:])
    starts, ends = np.concatenate(starts), np.concatenate(ends)
    directions = np.arctan2(ends[:, 1] - starts[:, 1], ends[:, 0] - starts[:, 0])

    if center is not None:
        centers = np.asarray(center, dtype=float).reshape(1, 2)
    else:
        centers = np.concatenate([starts, ends, (starts + ends) / 2.0])

    worst = 0.0
    for c in centers:
        seg = ends - starts
        t = np.clip(((c - starts) * seg).sum(axis=1) / (seg * seg).sum(axis=1), 0.0, 1.0)
        nearest = starts + t[:, None] * seg
        inside = np.linalg.norm(nearest - c, axis=1) <= scale
        if not inside.any():
            continue
        angles = directions[inside]
        relative = np.angle(np.exp(1j * (angles - angles[0])))
        spread = float(relative.max() - relative.min())
        if spread >= math.pi - 1e-12:
            return math.inf
        worst = max(worst, math.tan(spread / 2.0))
    return worst
