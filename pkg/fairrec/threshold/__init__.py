from .curve import TradeoffCurve, TradeoffPoint
from .functions import (
    CovariateOnlyIndex,
    GroupAwareIndex,
    ThresholdSolution,
    breakpoint_mixture,
    dual_objective,
    feasible_epsilon_range,
    lagrangian_L,
    solve_index,
    solve_threshold,
    solve_threshold_covariate_only,
    sweep,
)

__all__ = [
    'CovariateOnlyIndex',
    'GroupAwareIndex',
    'ThresholdSolution',
    'TradeoffCurve',
    'TradeoffPoint',
    'breakpoint_mixture',
    'dual_objective',
    'feasible_epsilon_range',
    'lagrangian_L',
    'solve_index',
    'solve_threshold',
    'solve_threshold_covariate_only',
    'sweep',
]
