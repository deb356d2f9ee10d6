"""Decentralized gradient-tracking optimization with uncoordinated step-sizes.

Thin python surface over the C++ core: stacked-matrix norms, mixing
matrices and their contraction factors, problem instances with gradient
oracles, the ATC-DIGing / DIGing solvers, the inexact-gradient harness and
the explicit rate machinery.
"""

from ._core import (
    ArrowCheck,
    ArrowReport,
    DigingError,
    GainLedger,
    Graph,
    GraphSequence,
    IgdTrace,
    MixingMatrix,
    ProblemInstance,
    ReferenceSolution,
    RunResult,
    RunTrace,
    SmoothnessProfile,
    StepSizeSchedule,
    __version__,
    average_seminorm,
    check_rate_empirically,
    complexity_comparison,
    consensus_seminorm,
    contraction_factor,
    ergodic_norm,
    ergodic_norm_scalar,
    fit_log_tail,
    frobenius_norm,
    gain_ledger,
    igd_bound_sides,
    igd_run,
    interpolated_mixing,
    arrow_gains,
    closing_gains,
    make_huber_problem,
    make_least_squares_problem,
    make_quadratic_problem,
    max_stepsize,
    metropolis_weights,
    realize_schedule,
    run,
    run_static,
    small_gain_bound,
    solve_reference,
    guaranteed_rate,
    verify_contraction,
    verify_small_gain_arrows,
)

__all__ = [
    "ArrowCheck",
    "ArrowReport",
    "DigingError",
    "GainLedger",
    "Graph",
    "GraphSequence",
    "IgdTrace",
    "MixingMatrix",
    "ProblemInstance",
    "ReferenceSolution",
    "RunResult",
    "RunTrace",
    "SmoothnessProfile",
    "StepSizeSchedule",
    "__version__",
    "average_seminorm",
    "check_rate_empirically",
    "complexity_comparison",
    "consensus_seminorm",
    "contraction_factor",
    "ergodic_norm",
    "ergodic_norm_scalar",
    "fit_log_tail",
    "frobenius_norm",
    "gain_ledger",
    "igd_bound_sides",
    "igd_run",
    "interpolated_mixing",
    "arrow_gains",
    "closing_gains",
    "make_huber_problem",
    "make_least_squares_problem",
    "make_quadratic_problem",
    "max_stepsize",
    "metropolis_weights",
    "realize_schedule",
    "run",
    "run_static",
    "small_gain_bound",
    "solve_reference",
    "guaranteed_rate",
    "verify_contraction",
    "verify_small_gain_arrows",
]
