from .constraints import (
    ConstraintSystem,
    Moment,
    MomentTable,
    inflate_bound,
    make_responder_parity,
    make_takeup_gap,
    make_treatment_parity,
    make_unconstrained,
)
from .lagrangian import (
    GapResult,
    Lagrangian,
    best_response_lambda,
    best_response_policy,
    lagrangian_weights,
)
from .result import SaddleResult, TwoStageResult
from .functions import RedfairParams, multipliers, redfair, saddle_gap, two_stage

__all__ = [
    'ConstraintSystem',
    'GapResult',
    'Lagrangian',
    'Moment',
    'MomentTable',
    'RedfairParams',
    'SaddleResult',
    'TwoStageResult',
    'best_response_lambda',
    'best_response_policy',
    'inflate_bound',
    'lagrangian_weights',
    'make_responder_parity',
    'make_takeup_gap',
    'make_treatment_parity',
    'make_unconstrained',
    'multipliers',
    'redfair',
    'saddle_gap',
    'two_stage',
]
