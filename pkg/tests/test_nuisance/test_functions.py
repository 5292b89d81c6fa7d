import os

import numpy as np

from fairrec.datasets import Dataset
from fairrec.dgp import eight_cell_spec, generate
from fairrec.exceptions import DomainError, NoOverlapError
from fairrec.nuisance import (
    NuisanceConfig,
    OracleBundle,
    export_bundle,
    fit_nuisances,
    import_bundle,
)
from fairrec.testing import TestBase, cell_spec, single_cell_spec


class NuisanceConfigTest(TestBase):

    def test_defaults_come_from_config(self):
        import fairrec.config
        fairrec.config.n_folds = 3
        self.assertEqual(NuisanceConfig().folds, 3)
        self.assertEqual(NuisanceConfig().clip, 0.01)

    def test_clip_range(self):
        with self.assertRaisesRegex(DomainError, r'\(0, 0.5\)'):
            NuisanceConfig(clip=0.0)


class OracleBundleTest(TestBase):

    def test_clipping(self):
        spec = single_cell_spec(e1=0.001)
        ds = spec.cell_dataset()
        self.assertAlmostEqual(OracleBundle(spec, clip=0.01).predict(ds).e1[0], 0.01)
        self.assertAlmostEqual(OracleBundle(spec, clip=0.0).predict(ds).e1[0], 0.001)

    def test_marginal_takeup(self):
        spec = single_cell_spec(e1=0.4, p11=0.9, p10=0.2)
        pred = OracleBundle(spec, clip=0.0).predict(spec.cell_dataset())
        self.assertAlmostEqual(pred.p1[0], 0.4 * 0.9 + 0.6 * 0.2)
        self.assertAlmostEqual(pred.lift[0], 0.7)
        np.testing.assert_allclose(pred.takeup(np.array([1])), [0.9])
        np.testing.assert_allclose(pred.e(np.array([0])), [0.6])

    def test_group_override(self):
        spec = eight_cell_spec()
        eta = OracleBundle(spec, clip=0.0)
        ds = Dataset([[0.0]], ['a'], [0], [0], [0.0], group_set=['a', 'b'])
        self.assertAlmostEqual(eta.predict(ds).p11[0], 0.8)
        self.assertAlmostEqual(eta.predict(ds, group='b').p11[0], 0.6)

    def test_group_probabilities(self):
        spec = eight_cell_spec()
        eta = OracleBundle(spec, clip=0.0)
        probabilities = eta.group_probabilities(spec.cell_dataset())
        np.testing.assert_allclose(probabilities[0], [0.6, 0.4])
        np.testing.assert_allclose(probabilities.sum(axis=1), np.ones(8))

    def test_unknown_group(self):
        eta = OracleBundle(single_cell_spec(a='a'), clip=0.0)
        ds = Dataset([[0.0]], ['z'], [0], [0], [0.0])
        with self.assertRaisesRegex(DomainError, 'unknown to the nuisance bundle'):
            eta.predict(ds)


class FitNuisancesTest(TestBase):

    def test_calibration(self):
        spec = cell_spec([(float(x), a, 0.125, 0.5, 0.7, 0.2, 0.6, 0.4)
                          for x in range(4) for a in ('a', 'b')])
        ds = generate(spec, 50000, seed=0)
        eta = fit_nuisances(ds, NuisanceConfig(folds=2, seed=0))
        pred = eta.predict(ds)
        self.assertLess(np.max(np.abs(pred.e1 - 0.5)), 0.02)
        self.assertLess(np.max(np.abs(pred.p11 - 0.7)), 0.03)

    def test_cross_fitting_independence(self):
        spec = cell_spec([(float(x), 'a', 0.25, 0.5, 0.6, 0.3, 1.0 + x, 0.5 * x)
                          for x in range(4)], outcome_kind='gaussian', sigma=1.0)
        ds = generate(spec, 400, seed=2)
        cfg = NuisanceConfig(folds=2, seed=5)
        before = fit_nuisances(ds, cfg)
        own_fold = np.flatnonzero(before.fold_assignment == 0)
        y = ds.y.copy()
        y[own_fold] = np.random.default_rng(0).permutation(y[own_fold])
        shuffled = Dataset(ds.X, ds.groups, ds.r, ds.t, y, group_set=ds.group_set)
        after = fit_nuisances(shuffled, cfg)
        np.testing.assert_array_equal(after.fold_assignment, before.fold_assignment)
        np.testing.assert_allclose(after.predict(shuffled).mu1[own_fold],
                                   before.predict(ds).mu1[own_fold], rtol=0, atol=1e-12)
        self.assertFalse(np.allclose(after.predict(shuffled).mu1, before.predict(ds).mu1))

    def test_empty_stratum(self):
        ds = Dataset(np.arange(8.0).reshape(-1, 1), ['a'] * 4 + ['b'] * 4,
                     [0, 1, 0, 1, 1, 1, 1, 1], [0, 1, 1, 0, 1, 0, 1, 1],
                     [0, 1, 1, 0, 1, 0, 0, 1])
        with self.assertRaises(NoOverlapError) as context:
            fit_nuisances(ds, NuisanceConfig(folds=1))
        self.assertEqual(context.exception.stratum, (0, 'b'))
        eta = fit_nuisances(ds, NuisanceConfig(folds=1, allow_no_overlap=True, reg=1e-2))
        self.assertEqual(eta.predict(ds).p10.shape, (8,))

    def test_export_then_import(self):
        ds = generate(eight_cell_spec(), 2000, seed=3)
        eta = fit_nuisances(ds, NuisanceConfig(folds=3, seed=1))
        export_bundle(eta, 'bundle.txt')
        self.assertTrue(os.path.exists('bundle.txt'))
        restored = import_bundle('bundle.txt')
        for name in ('e1', 'p11', 'p10', 'mu1', 'mu0', 'p1'):
            np.testing.assert_allclose(getattr(restored.predict(ds), name),
                                       getattr(eta.predict(ds), name), rtol=0, atol=1e-15)
        fresh = generate(eight_cell_spec(), 50, seed=4)
        np.testing.assert_allclose(restored.predict(fresh).mu1, eta.predict(fresh).mu1,
                                   rtol=0, atol=1e-15)

    def test_oracle_bundle_is_not_exportable(self):
        with self.assertRaises(DomainError):
            export_bundle(OracleBundle(eight_cell_spec()), 'bundle.txt')
