import os

import fairrec.experiments
from fairrec.exceptions import ConfigError
from fairrec.experiments import parse_experiment_config, read_experiment_config
from fairrec.testing import TestBase


SIMULATE = """\
[data]
mode = simulate
dgp = eight_cell
n = 100
"""


class ExperimentConfigTest(TestBase):

    def _assert_error(self, text, lineno, regex):
        with self.assertRaisesRegex(ConfigError, regex) as cm:
            parse_experiment_config(text)
        self.assertEqual(cm.exception.lineno, lineno)
        return cm.exception

    def test_defaults(self):
        cfg = parse_experiment_config(SIMULATE)
        self.assertEqual(cfg.mode, 'simulate')
        self.assertEqual(cfg.n, 100)
        self.assertEqual((cfg.cost.w_y, cfg.cost.w_t, cfg.cost.w_r), (1.0, 0.0, 0.0))
        self.assertEqual(cfg.constraint, 'takeup_gap')
        self.assertIsNone(cfg.eps)
        self.assertEqual(cfg.solver, 'threshold')
        self.assertFalse(cfg.oracle)
        self.assertEqual(cfg.seed, 0)
        self.assertEqual(cfg.out, 'fairrec-out')
        self.assertIsNone(cfg.dgp_path())

    def test_unknown_key(self):
        error = self._assert_error(SIMULATE + 'colour = red\n', 5, 'unknown key colour')
        self.assertEqual(str(error), '<config>:5: unknown key colour in [data]')

    def test_unknown_section(self):
        self._assert_error(SIMULATE + '\n[plots]\nwidth = 3\n', 6, r'unknown section \[plots\]')

    def test_bad_number(self):
        self._assert_error(SIMULATE + '[cost]\nw_y = lots\n', 6, 'cost.w_y must be a number')
        self._assert_error(SIMULATE.replace('n = 100', 'n = 1.5'), 4, 'data.n must be an integer')
        self._assert_error(SIMULATE + '[cost]\nw_t = nan\n', 6, 'must be finite')

    def test_bad_choice(self):
        self._assert_error(SIMULATE + '[solver]\nname = simplex\n', 6,
                           'solver.name must be one of')

    def test_mode_consistency(self):
        self._assert_error('[data]\nmode = simulate\nn = 10\n', 2, 'needs data.dgp')
        self._assert_error(SIMULATE.replace('n = 100', 'n = 0'), 4, 'positive data.n')
        self._assert_error('[data]\nmode = ingest\ncsv = x.csv\n', 2,
                           'needs data.csv and data.schema')
        self._assert_error('[data]\nmode = ingest\ncsv = x.csv\nschema = s.txt\n'
                           '[nuisance]\noracle = true\n', 6, 'need simulate mode')

    def test_solver_constraint_mismatch(self):
        self._assert_error(SIMULATE + '[constraint]\ntype = treatment_parity\n'
                           '[solver]\nname = robust\n', 8, 'takeup_gap constraint only')

    def test_lambda_grid(self):
        cfg = parse_experiment_config(SIMULATE + '[constraint]\nlambda_grid = 0, 0.5, 1\n')
        self.assertEqual(cfg.lambda_grid, [0.0, 0.5, 1.0])
        self._assert_error(SIMULATE + '[constraint]\nlambda_grid = 0, 1, 0.5\n', 6,
                           'strictly increasing')

    def test_groups(self):
        cfg = parse_experiment_config(SIMULATE + '[constraint]\ngroups = b, a\n')
        self.assertEqual(cfg.groups, ['b', 'a'])
        self._assert_error(SIMULATE + '[constraint]\ngroups = a, b, c\n', 6,
                           'exactly two groups')

    def test_nested_settings(self):
        cfg = parse_experiment_config(SIMULATE + '[nuisance]\nfolds = 3\nclip = 0.05\n'
                                      '[solver]\nname = redfair\nb = 20\nkind = DM\n'
                                      '[robust]\nlower = 0.1\nupper = 0.9\nmonotone = true\n')
        nuisance = cfg.nuisance_config()
        self.assertEqual((nuisance.folds, nuisance.clip), (3, 0.05))
        params = cfg.redfair_params()
        self.assertEqual((params.B, params.kind, params.max_iter), (20.0, 'DM', 100))
        uncertainty = cfg.uncertainty()
        self.assertTrue(uncertainty.monotone)

    def test_invalid_nested_settings(self):
        cfg = parse_experiment_config(SIMULATE + '[nuisance]\nclip = 0.7\n')
        with self.assertRaisesRegex(ConfigError, 'clip') as cm:
            cfg.nuisance_config()
        self.assertEqual(cm.exception.lineno, 5)
        cfg = parse_experiment_config(SIMULATE + '[solver]\nalpha = 2\n')
        with self.assertRaisesRegex(ConfigError, 'alpha'):
            cfg.redfair_params()

    def test_relative_paths(self):
        with open('exp.cfg', 'w') as fh:
            fh.write('[data]\nmode = ingest\ncsv = data/x.csv\nschema = /abs/s.txt\n')
        cfg = read_experiment_config('exp.cfg')
        self.assertEqual(cfg.csv, os.path.join(os.getcwd(), 'data', 'x.csv'))
        self.assertEqual(cfg.schema, '/abs/s.txt')
        self.assertIn('Experiment Configuration', str(cfg))

    def test_missing_file(self):
        with self.assertRaisesRegex(ConfigError, 'cannot read config'):
            read_experiment_config('absent.cfg')

    def test_shipped_configs_parse(self):
        directory = os.path.join(os.path.dirname(fairrec.experiments.__file__), 'configs')
        names = sorted(os.listdir(directory))
        self.assertIn('eight_cell_threshold.cfg', names)
        for name in names:
            cfg = read_experiment_config(os.path.join(directory, name))
            self.assertEqual(cfg.mode, 'simulate')
