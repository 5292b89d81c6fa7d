import configparser
import logging
import os
import re
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..datasets import CostSpec
from ..exceptions import ConfigError, DomainError
from ..nuisance import NuisanceConfig
from ..redfair import RedfairParams
from ..robust import UncertaintySet
from ..utils import str_to_bool


logger = logging.getLogger(__name__)

BUILTIN_DGPS = ('eight_cell',)
DATA_MODES = ('simulate', 'ingest')
CONSTRAINT_TYPES = ('takeup_gap', 'treatment_parity', 'responder_parity', 'none')
SOLVERS = ('threshold', 'threshold_covariate', 'redfair', 'two_stage', 'robust')

_SECTIONS = {
    'data': ('mode', 'dgp', 'n', 'csv', 'schema'),
    'cost': ('w_y', 'w_t', 'w_r'),
    'constraint': ('type', 'eps', 'lambda_grid', 'groups'),
    'solver': ('name', 'policy_class', 'kind', 'b', 'nu', 'omega', 'max_iter', 'alpha',
               'slack_scale', 'lp_step'),
    'nuisance': ('oracle', 'folds', 'reg', 'clip', 'max_iter', 'tol'),
    'robust': ('lower', 'upper', 'monotone', 'overlap_threshold'),
    'run': ('seed', 'out'),
}
_SECTION_LINE = re.compile(r'^\s*\[([^\]]+)\]')


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    """1-based line of every ``key = value`` entry, by (section, key)."""
    lines = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        match = _SECTION_LINE.match(line)
        if match:
            section = match.group(1).strip().lower()
            lines[(section, None)] = lineno
            continue
        stripped = line.strip()
        if section is None or not stripped or stripped[0] in '#;' or '=' not in stripped:
            continue
        key = stripped.split('=', 1)[0].strip().lower()
        lines.setdefault((section, key), lineno)
    return lines


class ExperimentConfig(object):
    """Parsed experiment configuration.

    Build instances with ``read_experiment_config`` or ``parse_experiment_config``;
    every getter reports errors with the line of the offending key.
    """

    def __init__(self, parser: configparser.RawConfigParser, lines: Dict, path: Optional[str]):
        self._parser = parser
        self._lines = lines
        self.path = path
        self.base_dir = os.path.dirname(os.path.abspath(path)) if path else os.getcwd()
        self._check_keys()

        self.mode = self._choice('data', 'mode', DATA_MODES, 'simulate')
        self.dgp = self._get('data', 'dgp')
        self.n = self._int('data', 'n', None)
        self.csv = self._path('data', 'csv')
        self.schema = self._path('data', 'schema')
        self.cost = CostSpec(self._float('cost', 'w_y', 1.0), self._float('cost', 'w_t', 0.0),
                             self._float('cost', 'w_r', 0.0))
        self.constraint = self._choice('constraint', 'type', CONSTRAINT_TYPES, 'takeup_gap')
        self.eps = self._float('constraint', 'eps', None)
        self.lambda_grid = self._float_list('constraint', 'lambda_grid')
        groups = self._get('constraint', 'groups')
        self.groups = [g.strip() for g in groups.split(',')] if groups else None
        self.solver = self._choice('solver', 'name', SOLVERS, 'threshold')
        self.oracle = self._bool('nuisance', 'oracle', False)
        self.seed = self._int('run', 'seed', 0)
        self.out = self._get('run', 'out') or 'fairrec-out'
        self._check_consistency()

    # -- raw access -----------------------------------------------------------------

    def lineno(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return self._lines.get((section, key), self._lines.get((section, None)))

    def error(self, section: str, key: Optional[str], message: str) -> ConfigError:
        return ConfigError(message, lineno=self.lineno(section, key), path=self.path)

    def _get(self, section: str, key: str) -> Optional[str]:
        if not self._parser.has_option(section, key):
            return None
        value = self._parser.get(section, key).strip()
        return value or None

    def _convert(self, section, key, default, convert, what):
        value = self._get(section, key)
        if value is None:
            return default
        try:
            return convert(value)
        except ValueError:
            raise self.error(section, key, '%s.%s must be %s, got %r'
                             % (section, key, what, value))

    def _float(self, section, key, default):
        value = self._convert(section, key, default, float, 'a number')
        if value is not None and not np.isfinite(value):
            raise self.error(section, key, '%s.%s must be finite' % (section, key))
        return value

    def _int(self, section, key, default):
        return self._convert(section, key, default, int, 'an integer')

    def _bool(self, section, key, default):
        return self._convert(section, key, default, str_to_bool, 'true or false')

    def _float_list(self, section, key) -> Optional[List[float]]:
        return self._convert(section, key, None,
                             lambda v: [float(x) for x in v.split(',') if x.strip()],
                             'a comma separated list of numbers')

    def _choice(self, section, key, choices, default):
        value = self._get(section, key)
        if value is None:
            return default
        if value not in choices:
            raise self.error(section, key, '%s.%s must be one of %s, got %r'
                             % (section, key, ', '.join(choices), value))
        return value

    def _path(self, section, key) -> Optional[str]:
        value = self._get(section, key)
        if value is None:
            return None
        return value if os.path.isabs(value) else os.path.join(self.base_dir, value)

    # -- validation -----------------------------------------------------------------

    def _check_keys(self):
        for section in self._parser.sections():
            if section not in _SECTIONS:
                raise self.error(section, None, 'unknown section [%s]' % section)
            for key in self._parser.options(section):
                if key not in _SECTIONS[section]:
                    raise self.error(section, key, 'unknown key %s in [%s]' % (key, section))

    def _check_consistency(self):
        if self.mode == 'simulate':
            if self.csv or self.schema:
                raise self.error('data', 'csv' if self.csv else 'schema',
                                 'simulate mode takes a dgp, not a csv/schema pair')
            if not self.dgp:
                raise self.error('data', 'mode', 'simulate mode needs data.dgp')
            if self.n is None or self.n < 1:
                raise self.error('data', 'n', 'simulate mode needs a positive data.n')
        else:
            if self.dgp:
                raise self.error('data', 'dgp', 'ingest mode reads csv and schema, not a dgp')
            if not (self.csv and self.schema):
                raise self.error('data', 'mode', 'ingest mode needs data.csv and data.schema')
            if self.oracle:
                raise self.error('nuisance', 'oracle', 'oracle nuisances need simulate mode')
        if self.solver in ('threshold', 'threshold_covariate', 'robust') \
                and self.constraint not in ('takeup_gap', 'none'):
            raise self.error('solver', 'name', 'the %s solver handles the takeup_gap '
                             'constraint only, not %s' % (self.solver, self.constraint))
        if self.groups is not None and self.solver in ('threshold', 'threshold_covariate',
                                                       'robust') and len(self.groups) != 2:
            raise self.error('constraint', 'groups', 'the %s solver needs exactly two groups'
                             % self.solver)
        if self.lambda_grid is not None and (
                not self.lambda_grid or np.any(np.diff(self.lambda_grid) <= 0)
                or min(self.lambda_grid) < 0):
            raise self.error('constraint', 'lambda_grid',
                             'lambda_grid must be nonnegative and strictly increasing')

    # -- typed settings --------------------------------------------------------------

    def dgp_path(self) -> Optional[str]:
        if self.dgp is None or self.dgp in BUILTIN_DGPS:
            return None
        return self.dgp if os.path.isabs(self.dgp) else os.path.join(self.base_dir, self.dgp)

    def nuisance_config(self, allow_no_overlap: bool = False) -> NuisanceConfig:
        try:
            return NuisanceConfig(folds=self._int('nuisance', 'folds', None),
                                  reg=self._float('nuisance', 'reg', None),
                                  max_iter=self._int('nuisance', 'max_iter', None),
                                  tol=self._float('nuisance', 'tol', None),
                                  clip=self._float('nuisance', 'clip', None),
                                  seed=self.seed,
                                  allow_no_overlap=allow_no_overlap)
        except (DomainError, ValueError) as e:
            raise self.error('nuisance', None, str(e))

    def oracle_clip(self) -> Optional[float]:
        return self._float('nuisance', 'clip', None)

    def redfair_params(self) -> RedfairParams:
        try:
            return RedfairParams(B=self._float('solver', 'b', None),
                                 nu=self._float('solver', 'nu', None),
                                 omega=self._float('solver', 'omega', None),
                                 max_iter=self._int('solver', 'max_iter', 100),
                                 alpha=self._float('solver', 'alpha', 0.5),
                                 slack_scale=self._float('solver', 'slack_scale', 1.0),
                                 seed=self.seed,
                                 policy_class=self._get('solver', 'policy_class') or 'tabular',
                                 kind=self._get('solver', 'kind') or 'DR',
                                 lp_step=self._bool('solver', 'lp_step', True))
        except (DomainError, ValueError) as e:
            raise self.error('solver', None, str(e))

    def uncertainty(self) -> UncertaintySet:
        try:
            return UncertaintySet(self._float('robust', 'lower', 0.0),
                                  self._float('robust', 'upper', 1.0),
                                  monotone=self._bool('robust', 'monotone', False))
        except (DomainError, ValueError) as e:
            raise self.error('robust', None, str(e))

    def overlap_threshold(self) -> Optional[float]:
        return self._float('robust', 'overlap_threshold', None)

    def __str__(self):
        header = "Experiment Configuration"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = [("Source", self.path or '<text>'),
                  ("Data", '%s (%s)' % (self.mode, self.dgp or self.csv)),
                  ("Cost", repr(self.cost)),
                  ("Constraint", '%s, eps=%s' % (self.constraint, self.eps)),
                  ("Solver", self.solver),
                  ("Seed", self.seed)]
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body


def parse_experiment_config(text: str, path: Optional[str] = None) -> ExperimentConfig:
    """Parse the text of a sectioned ``key = value`` experiment configuration."""
    parser = configparser.RawConfigParser(inline_comment_prefixes=('#', ';'))
    try:
        parser.read_string(text, source=path or '<config>')
    except configparser.Error as e:
        raise ConfigError(e.message.splitlines()[0] if hasattr(e, 'message') else str(e),
                          lineno=getattr(e, 'lineno', None), path=path)
    return ExperimentConfig(parser, _key_lines(text), path)


def read_experiment_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding='utf8') as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError('cannot read config: %s' % e.strerror, path=path)
    return parse_experiment_config(text, path)
