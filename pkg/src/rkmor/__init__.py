"""Runge-Kutta gramian quadrature and approximate balancing."""

from rkmor.analysis import (InterpolationReport, SpanReport, adi_iteration, bpod_embedding,
                            principal_angles, verify_interpolation, verify_span)
from rkmor.balancing import (BalancingResult, Truncation, approximate_balance,
                             exact_balanced_truncation, project, realify)
from rkmor.estimators import BalancedTruncation, GramianQuadrature, QuadratureBalancer
from rkmor.exceptions import RkmorError
from rkmor.quadrature import LowRankFactor, log_schedule, run_quadrature
from rkmor.shifted import ShiftedSolver, solve_shifted
from rkmor.system import (GramianKind, LtiSystem, ReducedSystem, markov_parameters, moments,
                          solve_lyapunov_dense, transfer_function)
from rkmor.tableau import (ButcherTableau, CompositeTableau, ExpansionPointSet,
                           assemble_composite, builtin, dirk_from_adi_params,
                           predict_expansion_points)

__version__ = "0.1.0"

__all__ = [
    "BalancedTruncation", "BalancingResult", "ButcherTableau", "CompositeTableau",
    "ExpansionPointSet", "GramianKind", "GramianQuadrature", "InterpolationReport",
    "LowRankFactor", "LtiSystem", "QuadratureBalancer", "ReducedSystem", "RkmorError",
    "ShiftedSolver", "SpanReport", "Truncation", "adi_iteration", "approximate_balance",
    "assemble_composite", "bpod_embedding", "builtin", "dirk_from_adi_params",
    "exact_balanced_truncation", "log_schedule", "markov_parameters", "moments",
    "predict_expansion_points", "principal_angles", "project", "realify", "run_quadrature",
    "solve_lyapunov_dense", "solve_shifted", "transfer_function", "verify_interpolation",
    "verify_span",
]
