import os

import numpy as np
import pandas as pd

import fairrec.experiments
from fairrec.datasets import load_dataset
from fairrec.exceptions import ConfigError, InfeasibleError, SchemaError
from fairrec.experiments import (
    parse_experiment_config,
    read_experiment_config,
    read_manifest,
    run_experiment,
    run_subcommand,
)
from fairrec.nuisance import import_bundle
from fairrec.policies import read_policy
from fairrec.testing import TestBase


ORACLE_THRESHOLD = """\
[data]
mode = simulate
dgp = eight_cell
n = 2000

[constraint]
type = takeup_gap
eps = %s

[nuisance]
oracle = true

[run]
seed = 3
"""


class PipelineTest(TestBase):

    def test_threshold_sweep(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD % '0.05')
        manifest = run_experiment(cfg, 'out')
        self.assertEqual(sorted(manifest), ['policy.txt', 'tradeoff_curve.csv'])
        curve = pd.read_csv(manifest.path('tradeoff_curve.csv'))
        self.assertEqual(list(curve.columns), ['lambda', 'value', 'value_se', 'takeup_a',
                                               'takeup_b', 'disparity', 'dr_value',
                                               'dr_value_se'])
        self.assertEqual(len(curve), 21)
        self.assertEqual(curve['lambda'].iloc[0], 0.0)
        self.assertLessEqual(curve['disparity'].iloc[-1], 0.05 + 1e-9)
        self.assertTrue(np.all(np.diff(curve['disparity']) <= 1e-12))
        with open(manifest.path('policy.txt')) as fh:
            self.assertIn('kind = threshold', fh.read())

    def test_explicit_grid(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD.replace('eps = %s', 'lambda_grid = 0, 1'))
        manifest = run_experiment(cfg, 'out')
        self.assertNotIn('policy.txt', manifest)
        curve = pd.read_csv(manifest.path('tradeoff_curve.csv'))
        self.assertEqual(curve['lambda'].tolist(), [0.0, 1.0])

    def test_infeasible_bound(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD % '-0.9')
        with self.assertRaises(InfeasibleError):
            run_experiment(cfg, 'out')

    def test_byte_identical_reruns(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD % '0.05')
        first = run_experiment(cfg, 'first')
        second = run_experiment(cfg, 'second')
        self.assertEqual(first.entries, second.entries)
        with open(first.path('tradeoff_curve.csv'), 'rb') as fh:
            first_bytes = fh.read()
        with open(second.path('tradeoff_curve.csv'), 'rb') as fh:
            self.assertEqual(fh.read(), first_bytes)

    def test_redfair_outputs(self):
        cfg = parse_experiment_config(
            ORACLE_THRESHOLD.replace('takeup_gap', 'treatment_parity') % '0.05'
            + '\n[solver]\nname = redfair\nkind = DM\nmax_iter = 30\n')
        manifest = run_experiment(cfg, 'out')
        self.assertEqual(sorted(manifest), ['policy.txt', 'result.txt', 'trace.csv'])
        trace = pd.read_csv(manifest.path('trace.csv'))
        self.assertEqual(list(trace.columns[:5]),
                         ['iter', 'lambda_0', 'lambda_1', 'lambda_2', 'lambda_3'])
        policy = read_policy(manifest.path('policy.txt'))
        self.assertEqual(policy.kind, 'randomized')

    def test_two_stage_outputs(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD % '0.05'
                                      + '\n[solver]\nname = two_stage\nkind = DM\n'
                                        'max_iter = 30\n')
        manifest = run_experiment(cfg, 'out')
        self.assertIn('first_stage_trace.csv', manifest)
        with open(manifest.path('result.txt')) as fh:
            self.assertIn('Slice width', fh.read())

    def test_robust_bounds(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD.replace('eps = %s\n', '')
                                      + '\n[solver]\nname = robust\n')
        manifest = run_experiment(cfg, 'out')
        bounds = pd.read_csv(manifest.path('bounds.csv'))
        self.assertEqual(list(bounds.columns), ['policy', 'lower', 'upper', 'eps', 'mode'])
        self.assertEqual(bounds['policy'].tolist(), ['recommend none', 'recommend all',
                                                     'unconstrained threshold'])
        self.assertTrue(np.all(bounds['lower'] <= bounds['upper'] + 1e-12))

    def test_compare_estimators(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD % '0.05')
        manifest = fairrec.experiments.compare_estimators(cfg, 'out')
        estimates = pd.read_csv(manifest.path('estimates.csv'))
        self.assertEqual(estimates['estimator'].tolist(), ['DM', 'IPW', 'DR', 'CV'])
        self.assertTrue(np.all(estimates['se'] > 0))
        self.assertTrue(np.all(estimates['n'] == 2000))

    def test_feasible_range(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD % '0.05')
        manifest = run_subcommand('feasible-range', cfg, 'out')
        frame = pd.read_csv(manifest.path('feasible_range.csv'))
        self.assertEqual(frame[['group_a', 'group_b']].values.tolist(), [['a', 'b']])
        self.assertLess(frame['eps_min'][0], 0.05)
        self.assertGreater(frame['eps_max'][0], 0.05)

    def test_simulate_then_fit(self):
        cfg = parse_experiment_config('[data]\nmode = simulate\ndgp = eight_cell\nn = 400\n')
        simulated = run_subcommand('simulate', cfg, 'sim')
        self.assertEqual(sorted(simulated), ['data.csv', 'dgp.txt', 'schema.txt'])
        ds = load_dataset(simulated.path('data.csv'), simulated.path('schema.txt'))
        self.assertEqual(ds.n, 400)

        with open('ingest.cfg', 'w') as fh:
            fh.write('[data]\nmode = ingest\ncsv = sim/data.csv\nschema = sim/schema.txt\n'
                     '[nuisance]\nfolds = 2\n')
        fitted = run_subcommand('fit', read_experiment_config('ingest.cfg'), 'fit')
        bundle = import_bundle(fitted.path('bundle.txt'))
        self.assertEqual(bundle.predict(ds).e1.shape, (400,))

    def test_simulate_needs_simulate_mode(self):
        with open('ingest.cfg', 'w') as fh:
            fh.write('[data]\nmode = ingest\ncsv = %s\nschema = %s\n'
                     % (self.static_file('small.csv'), self.static_file('small_schema.txt')))
        with self.assertRaisesRegex(ConfigError, 'simulate command'):
            run_subcommand('simulate', read_experiment_config('ingest.cfg'), 'out')

    def test_missing_column(self):
        with open('ingest.cfg', 'w') as fh:
            fh.write('[data]\nmode = ingest\ncsv = %s\nschema = %s\n'
                     % (self.static_file('missing_column.csv'),
                        self.static_file('small_schema.txt')))
        with self.assertRaises(SchemaError):
            run_subcommand('fit', read_experiment_config('ingest.cfg'), 'out')

    def test_missing_csv(self):
        with open('ingest.cfg', 'w') as fh:
            fh.write('[data]\nmode = ingest\ncsv = absent.csv\nschema = %s\n'
                     % self.static_file('small_schema.txt'))
        with self.assertRaisesRegex(ConfigError, 'no such file') as cm:
            run_subcommand('fit', read_experiment_config('ingest.cfg'), 'out')
        self.assertEqual(cm.exception.lineno, 3)


class ManifestTest(TestBase):

    def test_verify_and_read(self):
        cfg = parse_experiment_config(ORACLE_THRESHOLD % '0.05')
        manifest = run_experiment(cfg, 'out')
        self.assertEqual(manifest.verify(), [])
        self.assertEqual(read_manifest('out').entries, manifest.entries)
        with open(manifest.path('policy.txt'), 'a') as fh:
            fh.write('# edited\n')
        self.assertEqual(manifest.verify(), ['policy.txt'])
        os.remove(manifest.path('tradeoff_curve.csv'))
        self.assertEqual(manifest.verify(), ['policy.txt', 'tradeoff_curve.csv'])
        self.assertIn('Run Manifest', str(manifest))


class ShippedConfigTest(TestBase):

    def test_eight_cell_threshold(self):
        path = os.path.join(os.path.dirname(fairrec.experiments.__file__), 'configs',
                            'eight_cell_threshold.cfg')
        manifest = run_experiment(read_experiment_config(path), 'out')
        self.assertEqual(sorted(manifest), ['policy.txt', 'tradeoff_curve.csv'])
        curve = pd.read_csv(manifest.path('tradeoff_curve.csv'))
        self.assertGreater(curve['disparity'].iloc[0], 0.0)
        self.assertLessEqual(curve['disparity'].iloc[-1], 1e-9)
        self.assertGreaterEqual(curve['value'].iloc[0], curve['value'].iloc[-1])
