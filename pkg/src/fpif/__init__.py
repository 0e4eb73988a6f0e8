"""Fokker-Planck integrate-and-fire toolkit for superlinear drifts."""

from .drift import (
    AssumptionsReport,
    DriftKind,
    DriftPoint,
    DriftSpec,
    blowup_time,
    eval_drift,
    make_callable_drift,
    make_canonical_drift,
    make_table_drift,
    poincare_condition_sup,
    validate_assumptions,
    zeta,
)
from .grid import ConfigurationError, DensityField, Grid
from .solver import DiscreteOperator, EvolutionTrace, build_operator, evolve, firing_rate, flux_profile, step
from .steady_state import (
    SteadyStateProfile,
    TruncatedSteadyState,
    compute_steady_state,
    compute_truncated_steady_state,
    default_alpha,
    default_truncated_grid,
    fisher_integral,
    tail_residual,
    truncated_lambda,
)

__version__ = "0.1.0"
