"""Transcendental engineering equations: a formulator proposes a residual and a
starting guess, Newton-Raphson solves it, and the metrics module scores it."""

from .autodiff import differentiate, simplify
from .domains import (
    DEFAULT_COUNTS,
    DOMAINS,
    DomainId,
    DomainProblem,
    build_residual,
    generate_dataset,
    ground_truth,
    render_query,
)
from .expr import Expr, ParseError, evaluate, parse, render
from .metrics import (
    MetricsReport,
    PredictionRecord,
    build_report,
    convergence_buckets,
    improvement,
    mean_relative_error,
    per_domain_aggregate,
    relative_error,
)
from .solver import Bracket, SolveOutcome, SolverConfig, bisection_oracle, newton_raphson

__version__ = "0.1.0"
