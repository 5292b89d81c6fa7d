from .config import ExperimentConfig, parse_experiment_config, read_experiment_config
from .functions import (
    Manifest,
    compare_estimators,
    read_manifest,
    run_experiment,
    run_subcommand,
    write_manifest,
)


__all__ = [
    'ExperimentConfig',
    'Manifest',
    'compare_estimators',
    'parse_experiment_config',
    'read_experiment_config',
    'read_manifest',
    'run_experiment',
    'run_subcommand',
    'write_manifest',
]
