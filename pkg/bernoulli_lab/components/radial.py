"""
Radially symmetric one-phase problems on annuli.

The annulus B_R \\ B_1 with datum 1 inside and 0 outside has the explicit
minimizer

    v(r) = 1 - log r / log R                          (d = 2)
    v(r) = (r**(2-d) - R**(2-d)) / (1 - R**(2-d))     (d >= 3)

and R is fixed by the free-boundary condition |v'(R)| = sqrt(lam). The radial
reduction of the functional (weight r**(d-1) in both terms) is minimized
exactly on a chain of radial nodes by ``radial_minimize``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from scipy.optimize import newton

from bernoulli_lab.exceptions import InternalCheckError

logger = logging.getLogger(__name__)

BISECTION_TOL = 1e-12


def _check_dimension(d: int) -> int:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    return int(d)


def _radius_equation(d: int, lam: float):
    root = math.sqrt(lam)
    if d == 2:
        return (lambda R: root * R * math.log(R) - 1.0,
                lambda R: root * (math.log(R) + 1.0))
    return (lambda R: root * (1.0 - R ** (2 - d)) - (d - 2) * R ** (1 - d),
            lambda R: root * (d - 2) * R ** (1 - d) + (d - 2) * (d - 1) * R ** (-d))


def critical_radius(d: int, lam: float = 1.0) -> float:
    """
    Outer radius R at which v leaves the outer sphere with slope sqrt(lam).

    Solved by bisection to 1e-12 and cross-checked with Newton's method. For
    lam = 1 the root must lie in (1, 2).

    Other values of lam need no separate code path. Under x -> sqrt(lam) x the
    problem becomes the lam = 1 problem on the annulus with inner radius
    sqrt(lam), whose outer radius is sqrt(lam) * R; the equation solved here is
    that condition written in the original variables (in the plane,
    sqrt(lam) R log R = 1).

    Raises:
        ValueError: If d < 2 or lam <= 0
        InternalCheckError: If the lam = 1 root is not bracketed by (1, 2), or
            Newton disagrees with the bisection
    """
    d = _check_dimension(d)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    f, fprime = _radius_equation(d, lam)

    lo, hi = 1.0, 2.0
    if f(hi) <= 0:
        if lam == 1.0:
            raise InternalCheckError(f"critical radius for d={d} is not bracketed by (1, 2)")
        for _ in range(60):
            lo, hi = hi, 2.0 * hi
            if f(hi) > 0:
                break
        else:
            raise InternalCheckError(f"could not bracket the critical radius for d={d}, lambda={lam}")

    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    radius = 0.5 * (lo + hi)

    polished = float(newton(f, radius, fprime=fprime, tol=1e-14, maxiter=50))
    if abs(polished - radius) > 1e-9:
        raise InternalCheckError(f"bisection ({radius}) and Newton ({polished}) disagree for d={d}")
    if lam == 1.0 and not 1.0 < radius < 2.0:
        raise InternalCheckError(f"critical radius {radius} for d={d} leaves (1, 2)")
    logger.debug("Critical radius d=%d lambda=%g: %.15g", d, lam, radius)
    return radius


def annulus_solution(
    d: int, r: Union[float, np.ndarray], lam: float = 1.0, R: Optional[float] = None
) -> Union[float, np.ndarray]:
    """
    v(r) on [1, R]; R defaults to ``critical_radius(d, lam)``.

    Raises:
        ValueError: If some r lies outside [1, R]
    """
    d = _check_dimension(d)
    R = critical_radius(d, lam) if R is None else float(R)
    radii = np.asarray(r, dtype=float)
    if np.any(radii < 1.0 - 1e-12) or np.any(radii > R + 1e-12):
        raise ValueError(f"radius must lie in [1, {R}]")
    radii = np.clip(radii, 1.0, R)
    if d == 2:
        values = 1.0 - np.log(radii) / math.log(R)
    else:
        values = (radii ** (2 - d) - R ** (2 - d)) / (1.0 - R ** (2 - d))
    return float(values) if values.ndim == 0 else values


def annulus_slope(d: int, r: float, lam: float = 1.0, R: Optional[float] = None) -> float:
    """|v'(r)|."""
    d = _check_dimension(d)
    R = critical_radius(d, lam) if R is None else float(R)
    if d == 2:
        return 1.0 / (r * math.log(R))
    return (d - 2) * r ** (1 - d) / (1.0 - R ** (2 - d))


@dataclass
class RadialProfile:
    """Nodal values of a radial profile; node 0 is r_in, node n is r_out."""

    dimension: int
    radii: np.ndarray
    values: np.ndarray
    lam: float
    energy: float = float("nan")
    history: List[float] = field(default_factory=list)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.radii.shape != self.values.shape:
            raise ValueError("radii and values differ in length")
        if np.any(self.values < 0):
            raise ValueError("radial profile has negative values")

    def free_boundary_radius(self) -> Optional[float]:
        """First radius where the profile drops from positive to zero, if any."""
        positive = self.values > 0
        drops = np.flatnonzero(positive[:-1] & ~positive[1:])
        return float(self.radii[drops[0] + 1]) if drops.size else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"r": self.radii, "value": self.values})


def _weights(radii: np.ndarray, d: int) -> np.ndarray:
    return radii ** (d - 1)


def radial_energy(radii: np.ndarray, values: np.ndarray, d: int, lam: float) -> float:
    """Radial functional; edge weights at midpoints, measure weights at interior nodes."""
    h = radii[1] - radii[0]
    conductance = _weights(0.5 * (radii[1:] + radii[:-1]), d) / h
    dirichlet = float(np.sum(conductance * np.diff(values) ** 2))
    interior = slice(1, len(radii) - 1)
    measure = float(np.sum(_weights(radii[interior], d)[values[interior] > 0]) * h)
    return dirichlet + lam * measure


def _run_values(resistance: np.ndarray, start: int, stop: int, high: float, at_start: bool) -> np.ndarray:
    """Series-resistor interpolation on nodes start..stop with ``high`` at one end and 0 at the other."""
    cumulative = np.concatenate([[0.0], np.cumsum(resistance[start:stop])])
    total = cumulative[-1]
    if at_start:
        return high * (1.0 - cumulative / total)
    return high * cumulative / total


def _structured_minimizer(radii: np.ndarray, d: int, a: float, b: float, lam: float) -> np.ndarray:
    """
    Exact minimizer of the radial chain energy.

    The positive set is a run attached to r_in, a run attached to r_out, or
    everything; a detached run would be weighted-harmonic with zero ends and
    hence zero.
    """
    n = len(radii) - 1
    h = radii[1] - radii[0]
    resistance = h / _weights(0.5 * (radii[1:] + radii[:-1]), d)
    mass = lam * _weights(radii, d) * h
    mass[0] = mass[n] = 0.0
    mass_prefix = np.concatenate([[0.0], np.cumsum(mass)])
    rho_prefix = np.concatenate([[0.0], np.cumsum(resistance)])

    nodes = np.arange(n + 1)
    # left run ends at zero node z: nodes 1..z-1 positive
    left = np.full(n + 1, np.inf)
    if a > 0:
        z = nodes[1:]
        left[1:] = a ** 2 / rho_prefix[z] + mass_prefix[z]
        if b > 0:
            left[n] = np.inf
    else:
        left[0] = 0.0
    # right run starts after zero node s: nodes s+1..n-1 positive
    right = np.full(n + 1, np.inf)
    if b > 0:
        s = nodes[:-1]
        right[:-1] = b ** 2 / (rho_prefix[n] - rho_prefix[s]) + (mass_prefix[n] - mass_prefix[s + 1])
        if a > 0:
            right[0] = np.inf
    else:
        right[n] = 0.0

    best_left = np.minimum.accumulate(left)
    best_left_at = _running_argmin(left)
    split = best_left + right
    s_best = int(np.argmin(split))
    split_energy = float(split[s_best])
    z_best = int(best_left_at[s_best])

    full_energy = np.inf
    if a > 0 or b > 0:
        full_energy = (a - b) ** 2 / rho_prefix[n] + mass_prefix[n]

    values = np.zeros(n + 1)
    if full_energy < split_energy:
        cumulative = rho_prefix / rho_prefix[n]
        values = a + (b - a) * cumulative
    else:
        if a > 0:
            values[: z_best + 1] = _run_values(resistance, 0, z_best, a, at_start=True)
        if b > 0:
            values[s_best:] = _run_values(resistance, s_best, n, b, at_start=False)
    values[0], values[n] = a, b
    return np.maximum(values, 0.0)


def _running_argmin(values: np.ndarray) -> np.ndarray:
    best = np.empty(len(values), dtype=int)
    current = 0
    for k in range(len(values)):
        if values[k] < values[current]:
            current = k
        best[k] = current
    return best


def _relax(radii: np.ndarray, values: np.ndarray, d: int, lam: float, max_sweeps: int, tolerance: float) -> List[float]:
    """Red-black weighted relaxation with the 0-vs-mean rule; returns the energy history."""
    h = radii[1] - radii[0]
    conductance = _weights(0.5 * (radii[1:] + radii[:-1]), d) / h
    left_c, right_c = conductance[:-1], conductance[1:]
    mass = lam * _weights(radii[1:-1], d) * h
    history = [radial_energy(radii, values, d, lam)]
    interior = np.arange(1, len(radii) - 1)
    for _ in range(max_sweeps):
        previous = values.copy()
        for color in (0, 1):
            pick = interior % 2 == color
            i = interior[pick]
            lo, hi = values[i - 1], values[i + 1]
            cl, cr = left_c[pick], right_c[pick]
            mean = (cl * lo + cr * hi) / (cl + cr)
            at_zero = cl * lo ** 2 + cr * hi ** 2
            at_mean = cl * (mean - lo) ** 2 + cr * (mean - hi) ** 2 + mass[pick]
            values[i] = np.where(at_mean < at_zero, mean, 0.0)
        history.append(radial_energy(radii, values, d, lam))
        if np.abs(values - previous).max() <= tolerance:
            break
    return history


def radial_minimize(
    d: int,
    r_in: float,
    r_out: float,
    a: float,
    b: float,
    lam: float = 1.0,
    n: int = 1024,
    polish_sweeps: int = 50,
) -> RadialProfile:
    """
    Minimize the radial functional on n radial cells between r_in and r_out.

    The exact chain minimizer is computed first and then polished by the
    weighted 0-vs-mean relaxation, whose energy never increases.

    Raises:
        ValueError: On a degenerate annulus, negative data or n < 2
    """
    d = _check_dimension(d)
    if not 0 < r_in < r_out:
        raise ValueError(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    if a < 0 or b < 0:
        raise ValueError(f"radial data must be nonnegative, got a={a}, b={b}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if n < 2:
        raise ValueError(f"need at least two radial cells, got {n}")

    radii = np.linspace(r_in, r_out, n + 1)
    values = _structured_minimizer(radii, d, float(a), float(b), float(lam))
    history = _relax(radii, values, d, lam, polish_sweeps, tolerance=1e-14)
    profile = RadialProfile(d, radii, values, lam, energy=history[-1], history=history)
    logger.debug("Radial minimizer d=%d on [%g, %g], n=%d: energy %.12g, free boundary %s",
                 d, r_in, r_out, n, profile.energy, profile.free_boundary_radius())
    return profile
