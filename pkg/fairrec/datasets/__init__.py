from .dataset import CostSpec, Dataset, DatasetSchema, Observation, ValidationReport
from .functions import load_dataset, read_schema, validate, write_dataset

__all__ = [
    'CostSpec',
    'Dataset',
    'DatasetSchema',
    'Observation',
    'ValidationReport',
    'load_dataset',
    'read_schema',
    'validate',
    'write_dataset',
]
