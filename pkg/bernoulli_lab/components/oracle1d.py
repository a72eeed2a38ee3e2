"""
Exact minimizers of the one-phase functional on an interval.

On [0, L] with u(0) = a, u(L) = b every minimizer is affine on each positive
run and leaves zero with slope exactly sqrt(lam), so the candidates are few:

- linear-through: the affine interpolant a -> b;
- left-detached (b = 0): a * (1 - x / l) on [0, l], l = a / sqrt(lam) < L;
- right-detached (a = 0): the mirror image;
- double-detached (a, b > 0): both triangles, when they fit in [0, L];
- identically-zero (a = b = 0).

Enumerating them and keeping all of minimal energy gives the whole minimizer
set, including the symmetric tie where the constant and the double triangle
cost the same.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd

from bernoulli_lab.components.boundary_data import DatumFamily, family_member
from bernoulli_lab.components.energy import ScalarField
from bernoulli_lab.components.geometry import Grid
from bernoulli_lab.components.sweep import SweepRow

logger = logging.getLogger(__name__)

Structure = Literal["linear-through", "left-detached", "right-detached", "double-detached", "identically-zero"]

# Relative tolerance for declaring two candidate energies tied.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PiecewiseLinear1D:
    """A candidate minimizer on [0, length]; ``breakpoints`` are where it meets zero."""

    structure: Structure
    breakpoints: tuple
    a: float
    b: float
    lam: float
    length: float
    energy: float

    def evaluate(self, x) -> np.ndarray:
        """Values at positions measured from the left end."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.length)
        if self.structure == "linear-through":
            return self.a + (self.b - self.a) * x / self.length
        if self.structure == "identically-zero":
            return np.zeros_like(x)
        values = np.zeros_like(x)
        if self.structure in ("left-detached", "double-detached"):
            values += self.a * np.maximum(1.0 - x / self.breakpoints[0], 0.0)
        if self.structure in ("right-detached", "double-detached"):
            reach = self.length - self.breakpoints[-1]
            values += self.b * np.maximum(1.0 - (self.length - x) / reach, 0.0)
        return values

    def free_boundary_slopes(self) -> List[float]:
        """|u'| where the function detaches from zero inside the interval."""
        slopes = []
        if self.structure in ("left-detached", "double-detached"):
            slopes.append(self.a / self.breakpoints[0])
        if self.structure in ("right-detached", "double-detached"):
            slopes.append(self.b / (self.length - self.breakpoints[-1]))
        return slopes

    def positive_length(self) -> float:
        if self.structure == "identically-zero":
            return 0.0
        if self.structure == "linear-through":
            return self.length
        if self.structure == "left-detached":
            return self.breakpoints[0]
        if self.structure == "right-detached":
            return self.length - self.breakpoints[0]
        return self.breakpoints[0] + self.length - self.breakpoints[1]

    def sample(self, grid: Grid) -> ScalarField:
        """Field on a 1D grid over [origin, origin + length]; boundary cells get the end values."""
        if grid.dimension != 1:
            raise ValueError("a 1D profile samples only onto a 1D grid")
        origin = float(grid.spec.params["a"])
        values = np.zeros(grid.shape)
        values[grid.closure] = self.evaluate(grid.axes[0][grid.closure] - origin)
        return ScalarField(grid, values, self.lam)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "structure": self.structure,
            "breakpoints": list(self.breakpoints),
            "a": self.a,
            "b": self.b,
            "lambda": self.lam,
            "L": self.length,
            "energy": self.energy,
            "free_boundary_slopes": self.free_boundary_slopes(),
        }


def _candidates(length: float, a: float, b: float, lam: float) -> List[PiecewiseLinear1D]:
    root = math.sqrt(lam)
    found = []
    if a == 0 and b == 0:
        return [PiecewiseLinear1D("identically-zero", (), a, b, lam, length, 0.0)]

    found.append(PiecewiseLinear1D(
        "linear-through", (), a, b, lam, length, (a - b) ** 2 / length + lam * length,
    ))
    reach_a, reach_b = a / root, b / root
    if b == 0 and reach_a < length:
        found.append(PiecewiseLinear1D("left-detached", (reach_a,), a, b, lam, length, 2.0 * a * root))
    if a == 0 and reach_b < length:
        found.append(PiecewiseLinear1D("right-detached", (length - reach_b,), a, b, lam, length, 2.0 * b * root))
    if a > 0 and b > 0 and reach_a + reach_b <= length:
        found.append(PiecewiseLinear1D(
            "double-detached", (reach_a, length - reach_b), a, b, lam, length, 2.0 * (a + b) * root,
        ))
    return found


def solve_1d_exact(L: float, a: float, b: float, lam: float = 1.0) -> List[PiecewiseLinear1D]:
    """
    All minimizers on [0, L] with end values a and b, up to energy ties.

    Examples:
        >>> [m.structure for m in solve_1d_exact(1.0, 0.1, 0.0, 1.0)]
        ['left-detached']
        >>> sorted(m.structure for m in solve_1d_exact(1.0, 0.25, 0.25, 1.0))
        ['double-detached', 'linear-through']

    Raises:
        ValueError: If L or lam is not positive, or a datum value is negative
    """
    if not L > 0:
        raise ValueError(f"interval length must be positive, got {L}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if a < 0 or b < 0 or not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"end values must be finite and nonnegative, got a={a}, b={b}")

    candidates = _candidates(float(L), float(a), float(b), float(lam))
    best = min(c.energy for c in candidates)
    return [c for c in candidates if c.energy <= best + TIE_RTOL * max(1.0, abs(best))]


def tie_locus_symmetric(L: float, lam: float = 1.0) -> float:
    """
    Level a* at which g = a* on both ends has two minimizers.

    The constant costs lam * L and the double triangle 4 a sqrt(lam).

    >>> tie_locus_symmetric(1.0, 4.0)
    0.5
    """
    if not L > 0 or not lam > 0:
        raise ValueError("L and lambda must be positive")
    return math.sqrt(lam) * L / 4.0


@dataclass
class OracleRow:
    t: float
    count: int
    gap_mid: float
    energy: float
    minimizers: List[PiecewiseLinear1D] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "count": self.count, "gap_mid": self.gap_mid, "energy": self.energy}


def _family_level(fam: Optional[DatumFamily], t: float) -> float:
    if fam is None:
        if not 0.0 < t < 1.0:
            raise ValueError(f"family parameter t must lie in (0, 1), got {t}")
        return float(t)
    if fam.base.kind != "constant":
        raise ValueError("the exact 1D sweep handles constant symmetric data only")
    member = family_member(fam, t)
    return float(member.evaluate_raw(np.zeros((1, 1)))[0])


def sweep_1d(
    L: float,
    lam: float,
    ts: Sequence[float],
    fam: Optional[DatumFamily] = None,
) -> List[OracleRow]:
    """
    Exact minimizer sets along a family of constant symmetric data.

    With no family the datum is g_t = t on both ends. ``gap_mid`` is the
    spread of the minimizers at L / 2.
    """
    rows = []
    for t in ts:
        level = _family_level(fam, float(t))
        minimizers = solve_1d_exact(L, level, level, lam)
        mids = [float(m.evaluate(L / 2.0)) for m in minimizers]
        rows.append(OracleRow(
            t=float(t),
            count=len(minimizers),
            gap_mid=max(mids) - min(mids),
            energy=min(m.energy for m in minimizers),
            minimizers=minimizers,
        ))
    ties = [row.t for row in rows if row.count > 1]
    logger.debug("Exact 1D sweep over %d values of t: ties at %s", len(rows), ties)
    return rows


def oracle_frame(rows: Sequence[OracleRow]) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in rows], columns=["t", "count", "gap_mid", "energy"])


def sweep_rows(rows: Sequence[OracleRow], resolution: float = 1e-9) -> List[SweepRow]:
    """
    Exact sweep records as ``SweepRow``s for the jump-set detector.

    ``resolution`` plays the part of the grid spacing, so any positive gap
    above ten times it counts as a jump.
    """
    return [
        SweepRow(
            t=row.t,
            gap=row.gap_mid,
            energy_lower=row.energy,
            energy_upper=row.energy,
            converged_lower=True,
            converged_upper=True,
            h=resolution,
            energy_tol=TIE_RTOL * max(1.0, abs(row.energy)),
        )
        for row in rows
    ]
