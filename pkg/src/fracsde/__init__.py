"""Euler-Maruyama and fast sum-of-exponentials solvers for multi-term
Riemann-Liouville stochastic fractional differential equations, with a
coupled-path Monte Carlo harness for strong convergence studies.
"""

from __future__ import annotations

from fracsde.brownian import BrownianPath, coarsen, path_seed, sample_path
from fracsde.catalog import CATALOG, get_problem
from fracsde.core import (
    FractionalOrders,
    ProblemSpec,
    TimeGrid,
    Trajectory,
    left_node,
    make_grid,
    validate_orders,
)
from fracsde.harness import (
    ConvergenceReport,
    StudyConfig,
    benchmark,
    coupled_error,
    estimate_orders,
    run_study,
)
from fracsde.soe import SoeApproximation, build_soe, eval_soe, validate_soe
from fracsde.solvers import solve, solve_direct, solve_fast, update_history

__all__ = (
    "CATALOG",
    "BrownianPath",
    "ConvergenceReport",
    "FractionalOrders",
    "ProblemSpec",
    "SoeApproximation",
    "StudyConfig",
    "TimeGrid",
    "Trajectory",
    "benchmark",
    "build_soe",
    "coarsen",
    "coupled_error",
    "estimate_orders",
    "eval_soe",
    "get_problem",
    "left_node",
    "make_grid",
    "path_seed",
    "run_study",
    "sample_path",
    "solve",
    "solve_direct",
    "solve_fast",
    "update_history",
    "validate_orders",
    "validate_soe",
)
