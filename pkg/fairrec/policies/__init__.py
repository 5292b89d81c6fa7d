from .policy import (
    BasePolicy,
    ConstantPolicy,
    LinearIndexPolicy,
    RandomizedPolicy,
    TabularPolicy,
    ThresholdPolicy,
    as_randomized,
    linear_features,
    mixture,
)
from .functions import read_policy, write_policy

__all__ = [
    'BasePolicy',
    'ConstantPolicy',
    'LinearIndexPolicy',
    'RandomizedPolicy',
    'TabularPolicy',
    'ThresholdPolicy',
    'as_randomized',
    'linear_features',
    'mixture',
    'read_policy',
    'write_policy',
]
