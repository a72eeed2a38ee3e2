"""
The discrete one-phase functional on a grid.

    E(u) = sum over edges of ((u_i - u_j) / h)**2 * h**d  +  lam * h**d * #{interior cells: u > 0}

Edges join stencil neighbors in the discrete closed domain. An edge with at
least one interior end has weight 1; an edge between two boundary cells has
weight 1/2 (trapezoidal closure along the boundary). Boundary-boundary edges
only see the datum, so they never change which field is a minimizer.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import spsolve

from bernoulli_lab.components.geometry import Cell, CellLabel, Grid, shifted, stencil_offsets

logger = logging.getLogger(__name__)

# Values at or below this are "zero" for masks.
ZERO_TOL = 1e-12


@dataclass(eq=False)
class ScalarField:
    """Per-cell values of a candidate or computed minimizer."""

    grid: Grid
    values: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values[self.grid.closure])):
            raise ValueError("field has non-finite values")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def positive(self) -> np.ndarray:
        """Omega_u: interior cells with value above the zero tolerance."""
        return self.grid.interior & (self.values > ZERO_TOL)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.lam)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values, self.lam)

    def boundary_values(self) -> np.ndarray:
        return self.values[self.grid.boundary]

    def max_difference(self, other: "ScalarField") -> float:
        """Max-norm distance over the closed domain."""
        closure = self.grid.closure
        return float(np.abs(self.values[closure] - other.values[closure]).max())

    def to_frame(self) -> pd.DataFrame:
        frame = self.grid.to_frame()
        frame = frame[self.grid.closure.ravel()].drop(columns="label")
        frame["value"] = self.values.ravel()[self.grid.closure.ravel()]
        return frame.reset_index(drop=True)


def _edge_weights(grid: Grid, offset: Cell) -> np.ndarray:
    """Weight of the edge from each cell to ``cell + offset``."""
    here = grid.labels
    there = shifted(grid.labels, offset)
    inside = (here != CellLabel.EXTERIOR) & (there != CellLabel.EXTERIOR)
    touches_interior = (here == CellLabel.INTERIOR) | (there == CellLabel.INTERIOR)
    return np.where(inside & touches_interior, 1.0, np.where(inside, 0.5, 0.0))


def edge_energy(u_i, u_j, h: float, dimension: int):
    """Dirichlet contribution ((u_i - u_j) / h)**2 * h**d of one edge."""
    return ((np.asarray(u_i, dtype=float) - np.asarray(u_j, dtype=float)) / h) ** 2 * h ** dimension


def dirichlet_energy(u: ScalarField) -> float:
    """Sum of forward-difference edge energies over the closed domain."""
    grid = u.grid
    total = 0.0
    for axis in range(grid.dimension):
        offset = tuple(1 if k == axis else 0 for k in range(grid.dimension))
        weights = _edge_weights(grid, offset)
        terms = edge_energy(u.values, shifted(u.values, offset), grid.h, grid.dimension)
        total += float(np.sum(weights * terms))
    return total


def positivity_measure(u: ScalarField, threshold: float = 0.0) -> float:
    """(number of interior cells with value > threshold) * h**d."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    count = int(np.count_nonzero(u.grid.interior & (u.values > threshold)))
    return count * u.grid.cell_volume


def total_energy(u: ScalarField, lam: Optional[float] = None) -> float:
    """Dirichlet energy plus lam times the positivity measure (lam defaults to the field's)."""
    lam = u.lam if lam is None else lam
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return dirichlet_energy(u) + lam * positivity_measure(u, 0.0)


def branch_energies(neighbors: np.ndarray, h: float, dimension: int, lam: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Local energies of the two candidate values of a cell.

    Args:
        neighbors: Stencil neighbor values, stencil on axis 0
        h: Grid spacing
        dimension: Grid dimension
        lam: Weight of the positivity term

    Returns:
        (energy at 0, energy at the neighbor mean, the neighbor mean)
    """
    mean = neighbors.mean(axis=0)
    scale = h ** (dimension - 2)
    at_zero = scale * np.sum(neighbors ** 2, axis=0)
    at_mean = scale * np.sum((mean - neighbors) ** 2, axis=0) + lam * h ** dimension
    return at_zero, at_mean, mean


def local_update(u: ScalarField, cell: Cell, lam: Optional[float] = None) -> float:
    """
    Value minimizing the local energy of one interior cell over {0, neighbor mean}.

    Ties go to 0.
    """
    grid = u.grid
    cell = tuple(int(i) for i in cell)
    if grid.labels[cell] != CellLabel.INTERIOR:
        raise ValueError(f"cell {cell} is not interior")
    lam = u.lam if lam is None else lam
    neighbors = np.array([u.values[tuple(c + o for c, o in zip(cell, offset))]
                          for offset in stencil_offsets(grid.dimension)])
    at_zero, at_mean, mean = branch_energies(neighbors, grid.h, grid.dimension, lam)
    return float(mean) if at_mean < at_zero else 0.0


def harmonic_extension(grid: Grid, values: np.ndarray, unknown: np.ndarray) -> np.ndarray:
    """
    Solve the discrete Laplace equation on ``unknown`` cells.

    Every other cell keeps its value in ``values`` and acts as Dirichlet data.
    Unknown cells must be interior.
    """
    result = np.array(values, dtype=float, copy=True)
    count = int(np.count_nonzero(unknown))
    if count == 0:
        return result
    if np.any(unknown & ~grid.interior):
        raise ValueError("harmonic extension unknowns must be interior cells")

    index = np.full(grid.shape, -1, dtype=np.int64)
    index[unknown] = np.arange(count)

    rows, cols, data = [], [], []
    rhs = np.zeros(count)
    own = index[unknown]
    offsets = stencil_offsets(grid.dimension)
    for offset in offsets:
        neighbor_index = shifted(index, offset)[unknown]
        neighbor_value = shifted(result, offset)[unknown]
        coupled = neighbor_index >= 0
        rows.append(own[coupled])
        cols.append(neighbor_index[coupled])
        data.append(np.full(int(coupled.sum()), -1.0))
        rhs += np.where(coupled, 0.0, neighbor_value)
    rows.append(own)
    cols.append(own)
    data.append(np.full(count, float(len(offsets))))

    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(count, count),
    ).tocsc()
    result[unknown] = np.atleast_1d(spsolve(matrix, rhs))
    return result
