from .uncertainty import OverlapPartition, UncertaintySet
from .functions import (
    RobustIndex,
    binary_constant_bound,
    detect_overlap,
    export_bounds,
    plugin_value,
    robust_disparity,
    robust_feasible_range,
    robust_lp_objective,
    solve_robust_threshold,
    value_bounds,
)

__all__ = [
    'OverlapPartition',
    'RobustIndex',
    'UncertaintySet',
    'binary_constant_bound',
    'detect_overlap',
    'export_bounds',
    'plugin_value',
    'robust_disparity',
    'robust_feasible_range',
    'robust_lp_objective',
    'solve_robust_threshold',
    'value_bounds',
]
