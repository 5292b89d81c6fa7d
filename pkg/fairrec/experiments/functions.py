from collections import OrderedDict
import logging
import os
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .config import ExperimentConfig
from ..datasets import Dataset, load_dataset, write_dataset
from ..dgp import DGPSpec, eight_cell_spec, generate, read_dgp_spec, write_dgp_spec
from ..estimators import cv_value, dm_value, dr_value, export_estimates, ipw_value
from ..exceptions import ConfigError, PyFairRecError
from ..nuisance import NuisanceBundle, OracleBundle, export_bundle, fit_nuisances
from ..policies import BasePolicy, ConstantPolicy, ThresholdPolicy, write_policy
from ..redfair import (
    ConstraintSystem,
    make_responder_parity,
    make_takeup_gap,
    make_treatment_parity,
    make_unconstrained,
    redfair,
    two_stage,
)
from ..robust import detect_overlap, export_bounds, solve_robust_threshold, value_bounds
from ..threshold import (
    GroupAwareIndex,
    feasible_epsilon_range,
    solve_threshold,
    solve_threshold_covariate_only,
    sweep,
)
from ..utils import FLOAT_FORMAT, atomic_write_text, md5_of_file


logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.txt'
# Points of the default penalty grid between 0 and the constrained optimum.
DEFAULT_GRID_POINTS = 21


class Manifest(object):
    """Files written by one run and their md5 hashes.

    Parameters
    ----------
    directory : str
        Output directory the names are relative to.
    entries : dict
        Mapping from file name to md5 hex digest.
    """

    def __init__(self, directory: str, entries: Dict[str, str]):
        self.directory = directory
        self.entries = OrderedDict(sorted(entries.items()))

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, name):
        return name in self.entries

    def __getitem__(self, name):
        return self.entries[name]

    def __len__(self):
        return len(self.entries)

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def verify(self) -> List[str]:
        """Names whose file is missing or no longer matches its hash."""
        stale = []
        for name, digest in self.entries.items():
            path = self.path(name)
            if not os.path.exists(path) or md5_of_file(path) != digest:
                stale.append(name)
        return stale

    def to_text(self) -> str:
        return ''.join('%s  %s\n' % (digest, name) for name, digest in self.entries.items())

    def __str__(self):
        header = "Run Manifest"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = [("Directory", self.directory)] + list(self.entries.items())
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body


def write_manifest(directory: str, names: List[str]) -> Manifest:
    """Hash the given outputs and write ``manifest.txt`` next to them."""
    manifest = Manifest(directory, {name: md5_of_file(os.path.join(directory, name))
                                    for name in names})
    atomic_write_text(os.path.join(directory, MANIFEST_NAME), manifest.to_text())
    logger.info('wrote %d outputs to %s', len(manifest), os.path.abspath(directory))
    return manifest


def read_manifest(directory: str) -> Manifest:
    entries = {}
    with open(os.path.join(directory, MANIFEST_NAME), encoding='utf8') as fh:
        for line in fh:
            if line.strip():
                digest, name = line.rstrip('\n').split('  ', 1)
                entries[name] = digest
    return Manifest(directory, entries)


# -- building blocks ------------------------------------------------------------------

def load_data(cfg: ExperimentConfig) -> Tuple[Dataset, Optional[DGPSpec]]:
    """The run's dataset, and the generating spec in simulate mode."""
    if cfg.mode == 'simulate':
        path = cfg.dgp_path()
        try:
            spec = eight_cell_spec() if path is None else read_dgp_spec(path)
        except OSError as e:
            raise cfg.error('data', 'dgp', 'cannot read dgp %s: %s' % (path, e.strerror))
        return generate(spec, cfg.n, cfg.seed), spec
    for key in ('csv', 'schema'):
        path = getattr(cfg, key)
        if not os.path.exists(path):
            raise cfg.error('data', key, 'no such file: %s' % path)
    return load_dataset(cfg.csv, cfg.schema), None


def two_groups(cfg: ExperimentConfig, ds: Dataset) -> Tuple[str, str]:
    groups = cfg.groups if cfg.groups is not None else ds.group_set
    if len(groups) != 2:
        raise cfg.error('solver', 'name', 'the %s solver needs exactly two groups, the data '
                        'has %s' % (cfg.solver, ', '.join(groups)))
    missing = [g for g in groups if g not in ds.group_set]
    if missing:
        raise cfg.error('constraint', 'groups', 'groups %s do not occur in the data'
                        % ', '.join(missing))
    return groups[0], groups[1]


def nuisances(cfg: ExperimentConfig, ds: Dataset, spec: Optional[DGPSpec],
              allow_no_overlap: bool = False) -> NuisanceBundle:
    """Oracle nuisances of the simulating spec, or models cross-fitted on ``ds``."""
    if cfg.oracle:
        return OracleBundle(spec, clip=cfg.oracle_clip())
    return fit_nuisances(ds, cfg.nuisance_config(allow_no_overlap))


def _required_eps(cfg: ExperimentConfig) -> float:
    if cfg.eps is None:
        raise cfg.error('constraint', 'eps', 'the %s constraint needs constraint.eps'
                        % cfg.constraint)
    return cfg.eps


def constraint_system(cfg: ExperimentConfig, ds: Dataset,
                      eta: NuisanceBundle) -> ConstraintSystem:
    groups = cfg.groups if cfg.groups is not None else ds.group_set
    if cfg.constraint == 'none':
        return make_unconstrained(eta)
    if cfg.constraint == 'takeup_gap':
        return make_takeup_gap(two_groups(cfg, ds), eta, _required_eps(cfg))
    if cfg.constraint == 'treatment_parity':
        return make_treatment_parity(groups, eta, _required_eps(cfg))
    return make_responder_parity(groups, eta, _required_eps(cfg))


def _unconstrained_threshold(ds: Dataset, eta: NuisanceBundle, cfg: ExperimentConfig,
                             groups: Tuple[str, str]) -> ThresholdPolicy:
    index = GroupAwareIndex(eta, cfg.cost, groups, ds.group_frequencies())
    return ThresholdPolicy(0.0, index, description=str(index))


def _out(out: str, name: str, outputs: List[str]) -> str:
    outputs.append(name)
    return os.path.join(out, name)


# -- subcommands ----------------------------------------------------------------------

def _simulate(cfg: ExperimentConfig, out: str) -> List[str]:
    if cfg.mode != 'simulate':
        raise cfg.error('data', 'mode', 'the simulate command needs data.mode = simulate')
    ds, spec = load_data(cfg)
    outputs = []
    write_dataset(ds, _out(out, 'data.csv', outputs), _out(out, 'schema.txt', outputs))
    write_dgp_spec(spec, _out(out, 'dgp.txt', outputs))
    return outputs


def _fit(cfg: ExperimentConfig, out: str) -> List[str]:
    ds, _ = load_data(cfg)
    outputs = []
    export_bundle(fit_nuisances(ds, cfg.nuisance_config()), _out(out, 'bundle.txt', outputs))
    return outputs


def _threshold_sweep(cfg: ExperimentConfig, out: str) -> List[str]:
    ds, spec = load_data(cfg)
    groups = two_groups(cfg, ds)
    eta = nuisances(cfg, ds, spec)
    outputs = []
    solution = None
    if cfg.eps is not None:
        solve = solve_threshold_covariate_only if cfg.solver == 'threshold_covariate' \
            else solve_threshold
        solution = solve(ds, eta, cfg.cost, cfg.eps, groups)
        write_policy(solution.policy, _out(out, 'policy.txt', outputs))
    grid = cfg.lambda_grid
    if grid is None:
        lam_end = solution.lam if solution is not None else \
            solve_threshold(ds, eta, cfg.cost, max(0.0, feasible_epsilon_range(
                ds, eta, groups)[0]), groups).lam
        grid = np.linspace(0.0, lam_end, DEFAULT_GRID_POINTS) if lam_end > 0 else [0.0]
    curve = sweep(ds, eta, cfg.cost, grid, groups, dr=True)
    curve.to_csv(_out(out, 'tradeoff_curve.csv', outputs))
    return outputs


def _write_saddle(result, out: str, outputs: List[str]):
    write_policy(result.Q, _out(out, 'policy.txt', outputs))
    result.trace_to_csv(_out(out, 'trace.csv', outputs))
    atomic_write_text(_out(out, 'result.txt', outputs), str(result) + '\n')


def _redfair(cfg: ExperimentConfig, out: str) -> List[str]:
    ds, spec = load_data(cfg)
    eta = nuisances(cfg, ds, spec)
    system = constraint_system(cfg, ds, eta)
    result = redfair(ds, system, eta, cfg.cost, cfg.redfair_params())
    outputs = []
    _write_saddle(result, out, outputs)
    return outputs


def _two_stage(cfg: ExperimentConfig, out: str) -> List[str]:
    ds, spec = load_data(cfg)
    # the oracle answers both halves; fitted nuisances are refit per half
    eta = OracleBundle(spec, clip=cfg.oracle_clip()) if cfg.oracle \
        else fit_nuisances(ds, cfg.nuisance_config())
    system = constraint_system(cfg, ds, eta)
    nuisance = eta if cfg.oracle else cfg.nuisance_config()
    result = two_stage(ds, system, nuisance, cfg.cost, cfg.redfair_params())
    outputs = []
    _write_saddle(result, out, outputs)
    result.first_stage.trace_to_csv(_out(out, 'first_stage_trace.csv', outputs))
    return outputs


def _robust_bounds(cfg: ExperimentConfig, out: str) -> List[str]:
    ds, spec = load_data(cfg)
    groups = two_groups(cfg, ds)
    eta = nuisances(cfg, ds, spec, allow_no_overlap=True)
    part = detect_overlap(ds, eta, cfg.overlap_threshold())
    uncertainty = cfg.uncertainty()
    mode = 'monotone' if uncertainty.monotone else uncertainty.mode
    eps = np.nan if cfg.eps is None else cfg.eps
    candidates = [('recommend none', ConstantPolicy(0)),
                  ('recommend all', ConstantPolicy(1)),
                  ('unconstrained threshold', _unconstrained_threshold(ds, eta, cfg, groups))]
    outputs = []
    if cfg.eps is not None:
        solution = solve_robust_threshold(ds, eta, uncertainty, part, cfg.cost, cfg.eps, groups)
        candidates.append(('robust threshold', solution.policy))
        write_policy(solution.policy, _out(out, 'policy.txt', outputs))
    records = []
    for name, policy in candidates:
        lower, upper = value_bounds(ds, policy, eta, uncertainty, part, cfg.cost)
        records.append((name, lower, upper, eps, mode))
    export_bounds(records, _out(out, 'bounds.csv', outputs))
    return outputs


def _fixed_policy(cfg: ExperimentConfig, ds: Dataset, eta: NuisanceBundle) -> BasePolicy:
    if len(ds.group_set) != 2 and cfg.groups is None:
        return ConstantPolicy(1)
    groups = two_groups(cfg, ds)
    if cfg.eps is None:
        return _unconstrained_threshold(ds, eta, cfg, groups)
    return solve_threshold(ds, eta, cfg.cost, cfg.eps, groups).policy


def _compare_estimators(cfg: ExperimentConfig, out: str) -> List[str]:
    ds, spec = load_data(cfg)
    eta = nuisances(cfg, ds, spec)
    policy = _fixed_policy(cfg, ds, eta)
    estimates = OrderedDict()
    for name, estimator in (('DM', dm_value), ('IPW', ipw_value), ('DR', dr_value),
                            ('CV', cv_value)):
        estimates[name] = estimator(ds, policy, eta, cfg.cost)
        for warning in estimates[name].warnings:
            logger.warning('%s: %s', name, warning)
    outputs = []
    write_policy(policy, _out(out, 'policy.txt', outputs))
    export_estimates(estimates, _out(out, 'estimates.csv', outputs))
    return outputs


def _feasible_range(cfg: ExperimentConfig, out: str) -> List[str]:
    ds, spec = load_data(cfg)
    a, b = two_groups(cfg, ds)
    low, high = feasible_epsilon_range(ds, nuisances(cfg, ds, spec), (a, b))
    frame = pd.DataFrame([(a, b, low, high)], columns=['group_a', 'group_b', 'eps_min',
                                                        'eps_max'])
    outputs = []
    atomic_write_text(_out(out, 'feasible_range.csv', outputs),
                      frame.to_csv(index=False, float_format=FLOAT_FORMAT))
    return outputs


SUBCOMMANDS = OrderedDict([
    ('simulate', _simulate),
    ('fit', _fit),
    ('threshold-sweep', _threshold_sweep),
    ('redfair', _redfair),
    ('two-stage', _two_stage),
    ('robust-bounds', _robust_bounds),
    ('compare-estimators', _compare_estimators),
    ('feasible-range', _feasible_range),
])

SOLVER_SUBCOMMANDS = {
    'threshold': 'threshold-sweep',
    'threshold_covariate': 'threshold-sweep',
    'redfair': 'redfair',
    'two_stage': 'two-stage',
    'robust': 'robust-bounds',
}


def run_subcommand(name: str, cfg: ExperimentConfig, out: Optional[str] = None) -> Manifest:
    """Run one pipeline step and write its outputs plus ``manifest.txt`` into ``out``.

    Parameters
    ----------
    name : str
        One of ``SUBCOMMANDS``.
    cfg : ExperimentConfig
    out : str, optional
        Output directory; defaults to ``cfg.out``.

    Returns
    -------
    Manifest
    """
    if name not in SUBCOMMANDS:
        raise PyFairRecError('unknown subcommand %r' % name)
    out = cfg.out if out is None else out
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        raise ConfigError('cannot create output directory %s: %s' % (out, e.strerror),
                          lineno=cfg.lineno('run', 'out'), path=cfg.path)
    logger.info('running %s into %s', name, os.path.abspath(out))
    return write_manifest(out, SUBCOMMANDS[name](cfg, out))


def run_experiment(cfg: ExperimentConfig, out: Optional[str] = None) -> Manifest:
    """Run the pipeline selected by the configured solver.

    The threshold solvers write ``tradeoff_curve.csv`` (and ``policy.txt`` at a given
    eps), the saddle-point solvers ``policy.txt`` and ``trace.csv``, the robust solver
    ``bounds.csv``. Every run ends with ``manifest.txt``.
    """
    return run_subcommand(SOLVER_SUBCOMMANDS[cfg.solver], cfg, out)


def compare_estimators(cfg: ExperimentConfig, out: Optional[str] = None) -> Manifest:
    """DM, IPW, DR and CV values with standard errors of one fixed policy.

    The policy is the group-aware threshold rule, at the configured eps when given
    and unconstrained otherwise; data with other than two groups uses recommend-all.
    """
    return run_subcommand('compare-estimators', cfg, out)
