from .estimate import PseudoOutcome, ValueEstimate
from .functions import (
    cv_value,
    disparity,
    dm_takeup,
    dm_value,
    dr_takeup,
    dr_value,
    export_estimates,
    group_contrast_weights,
    ipw_value,
    pseudo_outcome,
    pseudo_outcomes,
    responder_takeup,
    value_decomposition,
)

__all__ = [
    'PseudoOutcome',
    'ValueEstimate',
    'cv_value',
    'disparity',
    'dm_takeup',
    'dm_value',
    'dr_takeup',
    'dr_value',
    'export_estimates',
    'group_contrast_weights',
    'ipw_value',
    'pseudo_outcome',
    'pseudo_outcomes',
    'responder_takeup',
    'value_decomposition',
]
