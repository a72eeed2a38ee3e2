"""
Experiment steps behind each command: build the grid, solve, check, write outputs.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from bernoulli_lab.components.boundary_data import BoundaryDatum, datum_h1_proxy, family_member, family_sup_bound
from bernoulli_lab.components.energy import ScalarField
from bernoulli_lab.components.geometry import Grid, build_grid
from bernoulli_lab.components.oracle1d import oracle_frame, solve_1d_exact, sweep_1d, sweep_rows
from bernoulli_lab.components.radial import annulus_slope, annulus_solution, critical_radius
from bernoulli_lab.components.regularity import (
    CheckReport,
    boundary_holder_quotient,
    check_barrier_positivity,
    check_comparison,
    check_cut_paste,
    check_restriction,
    equicontinuity_report,
    holder_bound_ratio,
    largest_passing_radius,
)
from bernoulli_lab.components.solver import (
    default_tie_tolerance,
    gradient_on_free_boundary,
    interior_gradient_max,
    solve,
    solve_extremes,
)
from bernoulli_lab.components.sweep import (
    check_sweep_monotonicity,
    energy_diagnostics,
    jump_set,
    run_sweep,
    sweep_frame,
    t_grid,
)
from bernoulli_lab.exceptions import ConfigurationError, ConvergenceError
from bernoulli_lab.utils.config import ExperimentConfig
from bernoulli_lab.utils.io import OutputWriter

logger = logging.getLogger(__name__)


def _writer(config: ExperimentConfig, output_dir: Optional[Path] = None) -> OutputWriter:
    writer = OutputWriter(output_dir or config.output_dir, seed=config.seed)
    writer.write_json("config.json", config.to_document())
    return writer


def _grid(config: ExperimentConfig) -> Grid:
    config.require("domain")
    grid = build_grid(config.domain, config.h)
    logger.info("🧱 %s grid h=%g: %d interior cells", config.domain.kind, config.h, int(grid.interior.sum()))
    return grid


def _field_diagnostics(u: ScalarField) -> Dict[str, Any]:
    """Free-boundary slope statistics and the interior gradient away from the boundary."""
    diagnostics: Dict[str, Any] = {"free_boundary": gradient_on_free_boundary(u).to_dict()}
    distance = 0.2 * u.grid.spec.diameter()
    try:
        diagnostics["interior_gradient_max"] = interior_gradient_max(u, distance)
    except ValueError:
        diagnostics["interior_gradient_max"] = None
    diagnostics["interior_distance"] = distance
    return diagnostics


def scaled_datum(g: BoundaryDatum, factor: float) -> BoundaryDatum:
    """factor * g, for scale families that reach factor 1."""
    return g.model_copy(update={"scale": g.scale * factor, "shift": g.shift * factor})


def shifted_datum(g: BoundaryDatum, amount: float) -> BoundaryDatum:
    return g.model_copy(update={"shift": g.shift + amount})


def run_solve(config: ExperimentConfig, output_dir: Optional[Path] = None) -> Dict[str, Any]:
    """
    Solve one boundary-value problem and write field(s) plus ``report.json``.

    Raises:
        ConvergenceError: After writing outputs, if a solve did not converge
    """
    config.require("domain", "datum")
    writer = _writer(config, output_dir)
    grid = _grid(config)

    logger.info("🔁 Solving (%s mode, lambda=%g)...", config.mode, config.lam)
    if config.mode == "single":
        u, report = solve(grid, config.datum, config.solver)
        writer.write_frame("field.csv", u.to_frame())
        document = report.to_dict()
        converged = report.converged
        diagnostics = _field_diagnostics(u)
    else:
        lower, upper, extremes = solve_extremes(grid, config.datum, config.solver)
        writer.write_frame("field_lower.csv", lower.to_frame())
        writer.write_frame("field_upper.csv", upper.to_frame())
        document = {**extremes.to_dict(), "gap": lower.max_difference(upper)}
        converged = extremes.lower.converged and extremes.upper.converged
        diagnostics = {"lower": _field_diagnostics(lower), "upper": _field_diagnostics(upper)}
    diagnostics["interior_area"] = grid.interior_area()
    writer.write_json("report.json", document)
    writer.write_json("diagnostics.json", diagnostics)
    writer.finalize()

    if not converged:
        raise ConvergenceError("solve did not converge within max_sweeps")
    logger.info("✅ Solve finished; outputs in %s", writer.directory)
    return document


def run_oracle1d(L: float, a: float, b: float, lam: float) -> List[Dict[str, Any]]:
    """Descriptors of every exact 1D minimizer."""
    try:
        minimizers = solve_1d_exact(L, a, b, lam)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e
    logger.info("📐 %d exact minimizer(s) on [0, %g]", len(minimizers), L)
    return [m.to_dict() for m in minimizers]


def run_sweep1d(config: ExperimentConfig, L: float = 1.0, output_dir: Optional[Path] = None) -> Dict[str, Any]:
    """Exact 1D sweep of g_t = t: writes ``sweep1d.csv`` and ``jumps.json``."""
    writer = _writer(config, output_dir)
    ts = t_grid(config.sweep.tmin, config.sweep.tmax, config.sweep.tstep)
    try:
        rows = sweep_1d(L, config.lam, ts, config.family)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e
    writer.write_frame("sweep1d.csv", oracle_frame(rows))
    jumps = jump_set(sweep_rows(rows))
    writer.write_json("jumps.json", jumps.to_dict())
    writer.finalize()
    logger.info("📈 Exact sweep: %d row(s), jump measure %.6g", len(rows), jumps.measure)
    return jumps.to_dict()


def run_annulus(d: int, lam: float, r: Optional[float] = None) -> Dict[str, Any]:
    """Critical radius and optionally v(r)."""
    try:
        radius = critical_radius(d, lam)
        result: Dict[str, Any] = {"d": d, "lambda": lam, "R": radius, "slope_at_R": annulus_slope(d, radius, lam, radius)}
        if r is not None:
            result["r"] = r
            result["value"] = annulus_solution(d, r, lam, radius)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e
    return result


def _solve_required(grid: Grid, g: BoundaryDatum, config: ExperimentConfig, **updates) -> ScalarField:
    u, report = solve(grid, g, config.solver.model_copy(update=updates) if updates else config.solver)
    if not report.converged:
        raise ConvergenceError(f"required solve did not converge (residual {report.residual:.3g})")
    return u


def _extremes_required(grid: Grid, g: BoundaryDatum, config: ExperimentConfig):
    lower, upper, report = solve_extremes(grid, g, config.solver)
    if not (report.lower.converged and report.upper.converged):
        raise ConvergenceError("required extreme solves did not converge")
    return lower, upper, report


def _check_comparison(grid: Grid, config: ExperimentConfig) -> CheckReport:
    g = config.datum
    low_lower, low_upper, _ = _extremes_required(grid, g, config)
    high_lower, high_upper, _ = _extremes_required(grid, shifted_datum(g, config.check.shift), config)
    reports = {
        "lower": check_comparison(low_lower, high_lower),
        "upper": check_comparison(low_upper, high_upper),
    }
    side, worst = max(reports.items(), key=lambda item: item[1].violation)
    worst.params.update({
        "shift": config.check.shift,
        "side": side,
        "min_difference_lower": reports["lower"].params["min_difference"],
        "min_difference_upper": reports["upper"].params["min_difference"],
    })
    worst.passed = all(report.passed for report in reports.values())
    return worst


def _check_cutpaste(grid: Grid, config: ExperimentConfig) -> CheckReport:
    u = _solve_required(grid, config.datum, config, initialization="zero")
    v = _solve_required(grid, config.datum, config, initialization="datum-sup")
    return check_cut_paste(u, v, energy_tolerance=default_tie_tolerance(grid, config.lam))


def _check_barrier(grid: Grid, config: ExperimentConfig) -> CheckReport:
    u = _solve_required(grid, config.datum, config)
    patch = grid.boundary & (u.values >= config.check.level)
    rho = config.check.rho or grid.spec.diameter() / 8.0
    report = check_barrier_positivity(u, patch, config.check.level, rho)
    report.params["largest_passing_rho"] = largest_passing_radius(u, patch, config.check.level)
    return report


def _check_equicontinuity(grid: Grid, config: ExperimentConfig, writer: OutputWriter) -> CheckReport:
    fields = [_solve_required(grid, scaled_datum(config.datum, t), config) for t in config.check.scales]
    report = equicontinuity_report(fields, config.check.deltas)
    frame = pd.DataFrame({"delta": report.envelope.deltas})
    for t, curve in zip(config.check.scales, report.curves):
        frame[f"omega_t{t:g}"] = curve.omegas
    frame["envelope"] = report.envelope.omegas
    writer.write_frame("curves.csv", frame)

    sups, dirichlets = zip(*(datum_h1_proxy(scaled_datum(config.datum, t), grid) for t in config.check.scales))
    omegas = report.envelope.omegas
    # envelope must not grow as delta shrinks
    growth = float(max(0.0, -np.diff(omegas).min())) if omegas.size > 1 else 0.0
    return CheckReport(
        "equicontinuity",
        growth <= 1e-12,
        max(0.0, growth),
        1e-12,
        {
            "scales": list(config.check.scales),
            "datum_sup": max(sups),
            "datum_dirichlet": max(dirichlets),
            **report.to_dict(),
        },
    )


def _check_holder(grid: Grid, config: ExperimentConfig) -> CheckReport:
    u = _solve_required(grid, config.datum, config)
    band = config.check.band or 4.0 * grid.h
    quotient = boundary_holder_quotient(u, config.check.gamma, band)
    ratio = holder_bound_ratio(u, config.datum, config.check.gamma, band)
    # measured only: the bound is a refinement property, not a per-grid threshold
    return CheckReport("holder", True, 0.0, 0.0, {"gamma": config.check.gamma, "band": band, "quotient": quotient, "bound_ratio": ratio, "h": grid.h})


def _check_restriction(grid: Grid, config: ExperimentConfig) -> CheckReport:
    if config.check.subdomain is None:
        raise ConfigurationError("restriction check needs check.subdomain")
    u = _solve_required(grid, config.datum, config)
    return check_restriction(u, config.check.subdomain, config.solver)


def run_check(config: ExperimentConfig, kind: str, output_dir: Optional[Path] = None) -> Dict[str, Any]:
    """Run one regularity check and write ``report.json`` (plus ``curves.csv`` for equicontinuity)."""
    config.require("domain", "datum")
    writer = _writer(config, output_dir)
    grid = _grid(config)
    logger.info("🔎 Running %s check...", kind)

    checks = {
        "comparison": lambda: _check_comparison(grid, config),
        "cutpaste": lambda: _check_cutpaste(grid, config),
        "barrier": lambda: _check_barrier(grid, config),
        "equicontinuity": lambda: _check_equicontinuity(grid, config, writer),
        "holder": lambda: _check_holder(grid, config),
        "restriction": lambda: _check_restriction(grid, config),
    }
    if kind not in checks:
        raise ConfigurationError(f"unknown check kind: {kind}")
    try:
        report = checks[kind]()
    except ConfigurationError:
        raise
    except ValueError as e:
        # argument errors of the check itself: band, level, rho, subdomain, deltas
        raise ConfigurationError(f"{kind} check: {e}") from e

    writer.write_json("report.json", report.to_dict())
    writer.finalize()
    logger.info("%s Check %s: %s", "✅" if report.passed else "⚠️", kind, "pass" if report.passed else "fail")
    return report.to_dict()


def run_family_sweep(config: ExperimentConfig, output_dir: Optional[Path] = None, progress: bool = True) -> Dict[str, Any]:
    """Extreme solves along the configured family: ``sweep.csv``, ``jumps.json``, ``diagnostics.json``."""
    config.require("domain", "family")
    writer = _writer(config, output_dir)
    grid = _grid(config)
    ts = t_grid(config.sweep.tmin, config.sweep.tmax, config.sweep.tstep)

    logger.info("🧹 Sweeping %d values of t...", len(ts))
    rows = run_sweep(
        grid, config.family, ts, config.solver,
        threads=config.threads, keep_fields=config.sweep.keep_fields, progress=progress,
    )
    writer.write_frame("sweep.csv", sweep_frame(rows))
    jumps = jump_set(rows)
    writer.write_json("jumps.json", jumps.to_dict())

    top_sup, top_dirichlet = datum_h1_proxy(family_member(config.family, float(ts[-1])), grid)
    diagnostics: Dict[str, Any] = {
        "energy_decreases": energy_diagnostics(rows),
        "flagged_rows": [row.t for row in rows if not row.converged],
        "datum_bound": {
            "sup": family_sup_bound(config.family, grid, ts),
            "declared": config.family.bound,
            "top_member_sup": top_sup,
            "top_member_dirichlet": top_dirichlet,
        },
    }
    if config.sweep.keep_fields:
        monotonicity = check_sweep_monotonicity(rows)
        diagnostics["monotonicity_failures"] = [r.to_dict() for r in monotonicity if not r.passed]
    writer.write_json("diagnostics.json", diagnostics)
    writer.finalize()
    logger.info("✅ Sweep finished: %d jump interval(s), measure %.6g", len(jumps.intervals), jumps.measure)
    return jumps.to_dict()
