"""
Package initialization for bernoulli_lab components.
"""

from .geometry import DomainSpec, Grid, build_grid, distance_to_boundary, lipschitz_constant
from .boundary_data import (
    BoundaryDatum,
    DatumFamily,
    ModulusCurve,
    eval_datum,
    family_member,
    empirical_modulus,
    holder_seminorm,
)
from .energy import ScalarField, dirichlet_energy, positivity_measure, total_energy, local_update
from .solver import (
    SolveOptions,
    SolveReport,
    solve,
    solve_extremes,
    free_boundary_cells,
    gradient_on_free_boundary,
)
from .oracle1d import PiecewiseLinear1D, solve_1d_exact, tie_locus_symmetric, sweep_1d
from .radial import RadialProfile, critical_radius, annulus_solution, radial_minimize
from .regularity import (
    CheckReport,
    check_comparison,
    check_cut_paste,
    check_barrier_positivity,
    equicontinuity_report,
    boundary_holder_quotient,
)
from .sweep import SweepRow, run_sweep, jump_set

__all__ = [
    'DomainSpec',
    'Grid',
    'build_grid',
    'distance_to_boundary',
    'lipschitz_constant',
    'BoundaryDatum',
    'DatumFamily',
    'ModulusCurve',
    'eval_datum',
    'family_member',
    'empirical_modulus',
    'holder_seminorm',
    'ScalarField',
    'dirichlet_energy',
    'positivity_measure',
    'total_energy',
    'local_update',
    'SolveOptions',
    'SolveReport',
    'solve',
    'solve_extremes',
    'free_boundary_cells',
    'gradient_on_free_boundary',
    'PiecewiseLinear1D',
    'solve_1d_exact',
    'tie_locus_symmetric',
    'sweep_1d',
    'RadialProfile',
    'critical_radius',
    'annulus_solution',
    'radial_minimize',
    'CheckReport',
    'check_comparison',
    'check_cut_paste',
    'check_barrier_positivity',
    'equicontinuity_report',
    'boundary_holder_quotient',
    'SweepRow',
    'run_sweep',
    'jump_set'
]
