"""
The fairrec package learns encouragement policies under fairness constraints.

An encouragement policy recommends a treatment; individuals then decide whether
to take it up. fairrec

* identifies and estimates the value and treatment take-up of a recommendation
  policy under non-adherence (direct, inverse-propensity, doubly-robust and
  control-variate estimators on cross-fitted nuisance models),
* solves resource-parity constraints in closed form by thresholding a Lagrangian
  index, and general linear constraints on take-up by a saddle-point reduction
  over randomized policies, with an optional two-stage variance-localized
  refinement,
* bounds policy values when recommendations lack overlap, and
* checks all of the above against exact oracles on discrete simulated processes.
"""

from . import config
from . import exceptions
from . import utils
from . import datasets
from .datasets import CostSpec, Dataset
from . import policies
from .policies import (
    ConstantPolicy,
    LinearIndexPolicy,
    RandomizedPolicy,
    TabularPolicy,
    ThresholdPolicy,
)
from . import dgp
from .dgp import DGPSpec
from . import nuisance
from .nuisance import FittedBundle, NuisanceConfig, OracleBundle
from . import estimators
from .estimators import ValueEstimate
from . import threshold
from .threshold import ThresholdSolution, TradeoffCurve
from . import robust
from .robust import OverlapPartition, UncertaintySet
from . import redfair
from .redfair import ConstraintSystem, RedfairParams, SaddleResult
from . import experiments
from .experiments import ExperimentConfig


from .__version__ import __version__


__all__ = [
    'ConstantPolicy',
    'ConstraintSystem',
    'CostSpec',
    'DGPSpec',
    'Dataset',
    'ExperimentConfig',
    'FittedBundle',
    'LinearIndexPolicy',
    'NuisanceConfig',
    'OracleBundle',
    'OverlapPartition',
    'RandomizedPolicy',
    'RedfairParams',
    'SaddleResult',
    'TabularPolicy',
    'ThresholdPolicy',
    'ThresholdSolution',
    'TradeoffCurve',
    'UncertaintySet',
    'ValueEstimate',
    'config',
    'datasets',
    'dgp',
    'estimators',
    'exceptions',
    'experiments',
    'nuisance',
    'policies',
    'redfair',
    'robust',
    'threshold',
    'utils',
    '__version__',
]
