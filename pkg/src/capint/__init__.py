"""Desk-scale numerical toolkit for capacitary integration.

Exact dyadic Hausdorff contents and certified interval bounds for ball
contents on small grids, Choquet integrals against either, capacitary
maximal operators, discretized Riesz capacities via convex programming,
and an inequality verification engine with three-way verdicts.

The heavy kernels run through a compiled extension when available and a
pure-Python fallback otherwise; set CAPINT_FORCE_FALLBACK=1 to force the
fallback. Both produce bit-identical results.
"""

__version__ = "0.1.0"

from ._kernels import active_backend
from .errors import DomainError, FormatError
from .lattice import (
    DyadicCube,
    GridSet,
    StepFunction,
    random_grid_set,
    random_step_function,
    root,
)
from .content import (
    Interval,
    ball_content_bounds,
    dyadic_content,
    dyadic_content_batch,
    level_side_powers,
    omega,
)
from .choquet import (
    BallContentEvaluator,
    DyadicContentEvaluator,
    SetFunctionEvaluator,
    choquet_integral,
)
from .maximal import MaximalResult, ball_maximal, dyadic_maximal, riesz_maximal
from .riesz import (
    CapacityContext,
    CapacitySolution,
    capacity,
    choquet_wrt_capacity,
    gamma_functional,
    kernel_matrix,
)
from .verify import (
    CATALOG,
    FROZEN,
    InequalityCheck,
    InequalitySpec,
    capacity_context,
    catalog,
    check,
    differentiation_trend,
    estimate_sharp_constant,
    frozen_constant,
    gamma_bound_constant,
    interpolation_constant,
    run_ensemble,
    run_suite,
    suite_plan,
)

__all__ = [
    "__version__",
    "active_backend",
    "DomainError",
    "FormatError",
    "DyadicCube",
    "GridSet",
    "StepFunction",
    "random_grid_set",
    "random_step_function",
    "root",
    "Interval",
    "ball_content_bounds",
    "dyadic_content",
    "dyadic_content_batch",
    "level_side_powers",
    "omega",
    "BallContentEvaluator",
    "DyadicContentEvaluator",
    "SetFunctionEvaluator",
    "choquet_integral",
    "MaximalResult",
    "ball_maximal",
    "dyadic_maximal",
    "riesz_maximal",
    "CapacityContext",
    "CapacitySolution",
    "capacity",
    "choquet_wrt_capacity",
    "gamma_functional",
    "kernel_matrix",
    "CATALOG",
    "FROZEN",
    "InequalityCheck",
    "InequalitySpec",
    "capacity_context",
    "catalog",
    "check",
    "differentiation_trend",
    "estimate_sharp_constant",
    "frozen_constant",
    "gamma_bound_constant",
    "interpolation_constant",
    "run_ensemble",
    "run_suite",
    "suite_plan",
]
