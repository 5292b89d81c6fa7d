from .models import LinearModel, fit_linear, fit_logistic, gradient_descent
from .bundle import (
    FittedBundle,
    NuisanceBundle,
    NuisanceConfig,
    NuisancePredictions,
    OracleBundle,
)
from .functions import export_bundle, fit_nuisances, import_bundle

__all__ = [
    'FittedBundle',
    'LinearModel',
    'NuisanceBundle',
    'NuisanceConfig',
    'NuisancePredictions',
    'OracleBundle',
    'export_bundle',
    'fit_linear',
    'fit_logistic',
    'fit_nuisances',
    'gradient_descent',
    'import_bundle',
]
