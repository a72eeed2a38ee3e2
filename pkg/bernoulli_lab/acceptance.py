"""
Acceptance suite: every criterion runs, is timed, and lands in ``acceptance.json``.

A criterion that raises is recorded as errored (not failed); the CLI turns
any errored criterion into exit code 4.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq
from tqdm import tqdm

from bernoulli_lab.components.boundary_data import BoundaryDatum
from bernoulli_lab.components.energy import ScalarField, total_energy
from bernoulli_lab.components.geometry import DomainSpec, Grid, build_grid
from bernoulli_lab.components.oracle1d import solve_1d_exact, sweep_1d, sweep_rows
from bernoulli_lab.components.radial import annulus_solution, critical_radius
from bernoulli_lab.components.regularity import (
    boundary_holder_quotient,
    check_comparison,
    check_cut_paste,
    equicontinuity_report,
    holder_exponent_estimate,
    largest_passing_radius,
)
from bernoulli_lab.components.solver import SolveOptions, gradient_on_free_boundary, solve, solve_extremes
from bernoulli_lab.components.sweep import jump_set, t_grid
from bernoulli_lab.main import scaled_datum, shifted_datum
from bernoulli_lab.utils.config import ExperimentConfig
from bernoulli_lab.utils.io import OutputWriter

logger = logging.getLogger(__name__)

UNIT_SQUARE = DomainSpec(kind="rectangle", params={"xmin": 0.0, "xmax": 1.0, "ymin": 0.0, "ymax": 1.0})
UNIT_DISK = DomainSpec(kind="disk", params={"center": [0.0, 0.0], "radius": 1.0})
HALF_DISK = DomainSpec(kind="disk", params={"center": [0.5, 0.5], "radius": 0.5})

# Growth of the gamma = 0.95 quotient over the ladder. For a C^0.75 datum the
# quotient over pairs at separation ~h behaves like h**(0.75 - 0.95), so from
# h_max to h_min it can only grow by (h_max / h_min)**0.2: 4**0.2 ~ 1.32 on
# the 32-64-128 ladder, which puts a fixed factor of 1.5 out of reach. The
# threshold is that rate less 10 percent.
HOLDER_GROWTH_SLACK = 0.9
HOLDER_GROWTH_EXPONENT = 0.2
# Pair separations scanned by the Hölder criterion.
HOLDER_MAX_SEP = 0.25


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool = False
    errored: bool = False
    measured: Dict[str, Any] = field(default_factory=dict)
    message: str = ""
    runtime_s: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "number": self.number,
            "name": self.name,
            "pass": self.passed,
            "errored": self.errored,
            "measured": self.measured,
            "message": self.message,
            "runtime_s": round(self.runtime_s, 3),
        }


def _annulus_problem(h: float):
    radius = critical_radius(2, 1.0)
    spec = DomainSpec(kind="annulus", params={"center": [0.0, 0.0], "inner": 1.0, "outer": radius})
    # boundary cells off the two circles get the exact profile at their own radius
    datum = BoundaryDatum(kind="radial-harmonic", params={"center": [0.0, 0.0], "inner": 1.0, "outer": radius, "inside": 1.0, "outside": 0.0})
    return build_grid(spec, h), datum, radius


def _annulus_error(u: ScalarField, radius: float) -> float:
    grid = u.grid
    r = np.linalg.norm(grid.centers[grid.interior], axis=1)
    exact = annulus_solution(2, np.clip(r, 1.0, radius), 1.0, radius)
    return float(np.abs(u.values[grid.interior] - exact).max())


def criterion_critical_radius(config: ExperimentConfig) -> Dict[str, Any]:
    r2, r3 = critical_radius(2, 1.0), critical_radius(3, 1.0)
    reference = brentq(lambda R: R * math.log(R) - 1.0, 1.0, 2.0, xtol=1e-14)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    passed = abs(r2 - reference) <= 1e-10 and abs(r3 - golden) <= 1e-10 and 1 < r2 < 2 and 1 < r3 < 2
    return {"pass": passed, "R2": r2, "R2_reference": reference, "R3": r3, "R3_reference": golden}


def criterion_annulus(config: ExperimentConfig) -> Dict[str, Any]:
    opts = config.solver.model_copy(update={"lam": 1.0, "initialization": "harmonic"})
    errors = {}
    for n in config.acceptance.annulus_ladder:
        grid, datum, radius = _annulus_problem(1.0 / n)
        u, _ = solve(grid, datum, opts)
        errors[n] = _annulus_error(u, radius)
    ladder = sorted(errors)
    ratios = [errors[a] / errors[b] for a, b in zip(ladder, ladder[1:]) if errors[b] > 0]
    at_64 = errors.get(64, errors[ladder[len(ladder) // 2]])
    passed = at_64 <= 0.05 and all(ratio >= 1.5 for ratio in ratios)
    return {"pass": passed, "errors": {str(n): e for n, e in errors.items()}, "ratios": ratios}


def criterion_nonuniqueness_1d(config: ExperimentConfig) -> Dict[str, Any]:
    minimizers = solve_1d_exact(1.0, 0.25, 0.25, 1.0)
    energies = [m.energy for m in minimizers]
    step = config.acceptance.sweep1d_step
    widths = []
    located = []
    for s in (step, step / 2.0):
        jumps = jump_set(sweep_rows(sweep_1d(1.0, 1.0, t_grid(s, 1.0 - s, s))))
        widths.append(jumps.measure)
        located.append(len(jumps.intervals) == 1 and all(abs(0.5 * (lo + hi) - 0.25) <= step for lo, hi in jumps.intervals))
    passed = (
        len(minimizers) == 2
        and all(abs(e - 1.0) <= 1e-12 for e in energies)
        and all(located)
        and abs(widths[0] / 2.0 - widths[1]) <= step / 2.0
    )
    return {"pass": passed, "count": len(minimizers), "energies": energies, "widths": widths}


def _random_datum(rng: np.random.Generator) -> BoundaryDatum:
    return BoundaryDatum(kind="power", params={
        "anchor": rng.uniform(0.0, 1.0, 2).tolist(),
        "exponent": float(rng.uniform(0.5, 1.5)),
        "coefficient": float(rng.uniform(0.0, 0.5)),
        "offset": float(rng.uniform(0.05, 0.4)),
    })


def criterion_comparison(config: ExperimentConfig) -> Dict[str, Any]:
    rng = np.random.default_rng(config.seed)
    h = 1.0 / config.acceptance.comparison_n
    shifts = np.round(np.linspace(0.05, 0.5, 10), 12)
    worst = 0.0
    pairs = 0
    for spec in (UNIT_SQUARE, HALF_DISK):
        grid = build_grid(spec, h)
        for shift in shifts[: max(1, config.acceptance.comparison_pairs // 2)]:
            g = _random_datum(rng)
            low = solve_extremes(grid, g, config.solver)
            high = solve_extremes(grid, shifted_datum(g, float(shift)), config.solver)
            for k in (0, 1):
                worst = max(worst, check_comparison(low[k], high[k], 1e-8).violation)
            pairs += 1
    return {"pass": worst <= 1e-8, "pairs": pairs, "worst_violation": worst}


def criterion_cut_paste(config: ExperimentConfig) -> Dict[str, Any]:
    rng = np.random.default_rng(config.seed)
    grid = build_grid(UNIT_SQUARE, 1.0 / 16.0)
    worst_slack = math.inf
    for _ in range(config.acceptance.cutpaste_pairs):
        boundary = np.where(grid.boundary, rng.uniform(0.0, 1.0, grid.shape), 0.0)
        fields = []
        for _ in range(2):
            interior = rng.uniform(0.0, 1.0, grid.shape) * (rng.uniform(size=grid.shape) < 0.7)
            fields.append(ScalarField(grid, np.where(grid.interior, interior, boundary)))
        worst_slack = min(worst_slack, check_cut_paste(*fields).params["slack"])

    g = BoundaryDatum(kind="constant", params={"value": 1.0})
    u, _ = solve(grid, g, config.solver.model_copy(update={"initialization": "zero"}))
    v, _ = solve(grid, g, config.solver.model_copy(update={"initialization": "datum-sup"}))
    lower = u.with_values(np.minimum(u.values, v.values))
    upper = u.with_values(np.maximum(u.values, v.values))
    excess = abs(total_energy(upper) - total_energy(lower))
    passed = worst_slack >= -1e-12 and excess <= 10.0 * config.solver.tolerance
    return {"pass": passed, "worst_slack": worst_slack, "energy_max_minus_lower": excess}


def criterion_free_boundary_gradient(config: ExperimentConfig) -> Dict[str, Any]:
    slopes = []
    for lam in (1.0, 4.0):
        for m in solve_1d_exact(1.0, 0.25, 0.0, lam):
            slopes.extend(s / math.sqrt(lam) for s in m.free_boundary_slopes())
    exact = bool(slopes) and all(abs(s - 1.0) <= 1e-15 for s in slopes)

    grid, datum, _ = _annulus_problem(1.0 / 128.0)
    u, _ = solve(grid, datum, config.solver.model_copy(update={"lam": 1.0, "initialization": "harmonic"}))
    stats = gradient_on_free_boundary(u)
    passed = exact and not stats.empty and 0.8 <= stats.median <= 1.2
    return {"pass": passed, "oracle_slopes_over_sqrt_lambda": slopes, "annulus": stats.to_dict()}


def criterion_equicontinuity(config: ExperimentConfig) -> Dict[str, Any]:
    grid = build_grid(UNIT_DISK, 1.0 / config.acceptance.equicontinuity_n)
    base = BoundaryDatum(kind="power", params={"anchor": [1.0, 0.0], "exponent": 1.0, "coefficient": 0.5, "offset": 0.2})
    fields = [solve(grid, scaled_datum(base, t), config.solver)[0] for t in (0.2, 0.4, 0.6, 0.8, 1.0)]
    deltas = [2.0 / 2 ** k for k in range(5, 0, -1)]
    envelope = equicontinuity_report(fields, deltas).envelope.omegas
    halving = all(envelope[k] <= envelope[k + 1] + 1e-15 for k in range(len(envelope) - 1))
    passed = halving and envelope[0] <= 0.5 * envelope[-1]
    return {"pass": passed, "deltas": deltas, "envelope": envelope.tolist()}


def required_holder_growth(ladder: List[int]) -> float:
    """Smallest accepted growth of the gamma = 0.95 quotient from the coarsest to the finest grid."""
    return HOLDER_GROWTH_SLACK * (max(ladder) / min(ladder)) ** HOLDER_GROWTH_EXPONENT


def criterion_holder(config: ExperimentConfig) -> Dict[str, Any]:
    datum = BoundaryDatum(kind="power", params={"anchor": [1.0, 0.0], "exponent": 0.75, "coefficient": 1.0, "offset": 0.0})
    ladder = sorted(config.acceptance.holder_ladder)
    band = 4.0 / ladder[0]
    quotients: Dict[str, List[float]] = {"0.75": [], "0.95": []}
    for n in ladder:
        u, _ = solve(build_grid(UNIT_DISK, 1.0 / n), datum, config.solver)
        for gamma in quotients:
            quotients[gamma].append(boundary_holder_quotient(u, float(gamma), band, HOLDER_MAX_SEP))
    q75, q95 = quotients["0.75"], quotients["0.95"]
    spread = max(q75) / min(q75)
    growth = q95[-1] / q95[0]
    required = required_holder_growth(ladder)
    passed = spread <= 1.25 and growth >= required
    spacings = [1.0 / n for n in ladder]
    slopes = {gamma: holder_exponent_estimate(values, spacings) for gamma, values in quotients.items()}
    return {
        "pass": passed,
        "quotients": quotients,
        "spread_075": spread,
        "growth_095": growth,
        "required_growth": required,
        "log_log_slopes": slopes,
    }


def criterion_barrier(config: ExperimentConfig) -> Dict[str, Any]:
    datum = BoundaryDatum(kind="halfspace", params={"normal": [0.0, 1.0], "offset": 0.0, "inside": 2.0, "outside": 0.0})
    radii = []
    for n in (config.acceptance.barrier_n, 2 * config.acceptance.barrier_n):
        grid = build_grid(UNIT_SQUARE, 1.0 / n)
        u, _ = solve(grid, datum, config.solver)
        radii.append(largest_passing_radius(u, grid.boundary & (u.values >= 2.0), 2.0))
    stable = all(r > 0 for r in radii) and abs(math.log2(radii[1] / radii[0])) <= 1.0 + 1e-12
    return {"pass": stable, "largest_passing_rho": radii}


CRITERIA: List[Callable[[ExperimentConfig], Dict[str, Any]]] = [
    criterion_critical_radius,
    criterion_annulus,
    criterion_nonuniqueness_1d,
    criterion_comparison,
    criterion_cut_paste,
    criterion_free_boundary_gradient,
    criterion_equicontinuity,
    criterion_holder,
    criterion_barrier,
]


def run_criterion(number: int, criterion: Callable[[ExperimentConfig], Dict[str, Any]], config: ExperimentConfig) -> CriterionResult:
    name = criterion.__name__.replace("criterion_", "")
    result = CriterionResult(number, name)
    started = time.perf_counter()
    try:
        measured = criterion(config)
        result.passed = bool(measured.pop("pass"))
        result.measured = measured
    except Exception as e:
        logger.error("❌ Criterion %d (%s) errored: %s", number, name, e)
        result.errored = True
        result.message = f"{type(e).__name__}: {e}"
    result.runtime_s = time.perf_counter() - started
    return result


def run_acceptance(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    only: Optional[List[int]] = None,
    progress: bool = True,
) -> Dict[str, Any]:
    """Run the criteria (all, or the numbers in ``only``) and write ``acceptance.json``."""
    writer = OutputWriter(output_dir or config.output_dir, seed=config.seed)
    writer.write_json("config.json", config.to_document())

    selected = [(k, c) for k, c in enumerate(CRITERIA, start=1) if only is None or k in only]
    results = []
    for number, criterion in tqdm(selected, desc="Acceptance", disable=not progress):
        result = run_criterion(number, criterion, config)
        status = "errored" if result.errored else ("pass" if result.passed else "FAIL")
        logger.info("%s Criterion %d (%s): %s in %.1fs", "✅" if result.passed else "⚠️", number, result.name, status, result.runtime_s)
        results.append(result)

    summary = {
        "criteria": [r.to_dict() for r in results],
        "count": len(results),
        "passed": sum(r.passed for r in results),
        "failed": sum(not r.passed and not r.errored for r in results),
        "errored": sum(r.errored for r in results),
    }
    writer.write_json("acceptance.json", summary)
    writer.finalize()
    return summary
