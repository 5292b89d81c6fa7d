from .spec import DGPCell, DGPSpec
from .functions import (
    EIGHT_CELL_PATH,
    eight_cell_spec,
    generate,
    oracle_constrained_optimum,
    oracle_randomized_optimum,
    oracle_takeup,
    oracle_value,
    population_dataset,
    random_dgp_spec,
    read_dgp_spec,
    write_dgp_spec,
)

__all__ = [
    'DGPCell',
    'DGPSpec',
    'EIGHT_CELL_PATH',
    'eight_cell_spec',
    'generate',
    'oracle_constrained_optimum',
    'oracle_randomized_optimum',
    'oracle_takeup',
    'oracle_value',
    'population_dataset',
    'random_dgp_spec',
    'read_dgp_spec',
    'write_dgp_spec',
]
