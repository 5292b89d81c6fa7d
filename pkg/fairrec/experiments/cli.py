"""Command line entry point: ``fairrec SUBCOMMAND --config PATH [options]``."""
import argparse
import logging
import sys
from typing import List, Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .config import read_experiment_config
from .functions import SUBCOMMANDS, run_experiment, run_subcommand
from ..exceptions import (
    ConfigError,
    EmptyDatasetError,
    InfeasibleError,
    ParseError,
    PyFairRecError,
    SchemaError,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

_VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, help='Experiment configuration file.')
    common.add_argument('--seed', type=int, default=None,
                        help='Overrides run.seed of the configuration.')
    common.add_argument('--out', default=None,
                        help='Output directory; overrides run.out of the configuration.')
    common.add_argument('--threads', type=int, default=None,
                        help='Upper bound on the threads of the numerical libraries.')
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='Log progress (-v) or every solver iteration (-vv).')

    parser = argparse.ArgumentParser(
        prog='fairrec',
        description='Fairness-constrained encouragement policy learning experiments.')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True
    for name in SUBCOMMANDS:
        commands.add_parser(name, parents=[common], help='Run the %s step.' % name)
    commands.add_parser('run', parents=[common],
                        help='Run the pipeline selected by solver.name.')
    return parser.parse_args(argv)


def exit_code(error: Exception) -> int:
    if isinstance(error, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(error, (ConfigError, SchemaError, ParseError, EmptyDatasetError)):
        return EXIT_CONFIG
    return EXIT_RUNTIME


def _run(args: argparse.Namespace) -> int:
    cfg = read_experiment_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    logger.info('%s', cfg)
    if args.command == 'run':
        manifest = run_experiment(cfg)
    else:
        manifest = run_subcommand(args.command, cfg)
    for name in manifest:
        print(manifest.path(name))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    logging.getLogger().setLevel(_VERBOSITY_LEVELS.get(args.verbose, logging.DEBUG))
    if args.threads is not None and args.threads < 1:
        logger.error('--threads must be positive, got %d', args.threads)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=args.threads):
            return _run(args)
    except (PyFairRecError, FloatingPointError, np.linalg.LinAlgError) as e:
        print('fairrec: error: %s' % e, file=sys.stderr)
        return exit_code(e)


if __name__ == '__main__':
    raise SystemExit(main())
