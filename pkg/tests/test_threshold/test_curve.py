import numpy as np
import pandas as pd

from fairrec.datasets import CostSpec
from fairrec.dgp import eight_cell_spec, generate, random_dgp_spec
from fairrec.exceptions import DomainError
from fairrec.testing import TestBase, oracle
from fairrec.threshold import TradeoffCurve, TradeoffPoint, sweep


class SweepTest(TestBase):

    def setUp(self):
        super(SweepTest, self).setUp()
        self.spec = eight_cell_spec()
        self.ds = generate(self.spec, 2000, seed=0)
        self.eta = oracle(self.spec, clip=0.01)
        self.cost = CostSpec()

    def test_disparity_decreases(self):
        curve = sweep(self.ds, self.eta, self.cost, np.linspace(0.0, 1.0, 21))
        self.assertEqual(len(curve), 21)
        self.assertTrue(np.all(np.diff(curve.column('disparity')) <= 1e-12))
        self.assertTrue(np.all(curve.column('value') <= curve[0].value + 1e-12))
        np.testing.assert_allclose(curve.column('disparity'),
                                   curve.column('takeup_a') - curve.column('takeup_b'))

    def test_random_dgps(self):
        for seed in range(10):
            spec = random_dgp_spec(6, seed=seed)
            ds = generate(spec, 1000, seed=seed)
            eta = oracle(spec, clip=0.01)
            if len(set(ds.groups)) < 2:
                continue
            curve = sweep(ds, eta, self.cost, np.linspace(0.0, 2.0, 11))
            self.assertTrue(np.all(np.diff(curve.column('disparity')) <= 1e-12),
                            msg='seed %d' % seed)

    def test_csv(self):
        curve = sweep(self.ds, self.eta, self.cost, [0.0, 0.1, 0.2], dr=True)
        self.assertTrue(curve.has_dr)
        curve.to_csv('curve.csv')
        frame = pd.read_csv('curve.csv')
        self.assertEqual(list(frame.columns),
                         ['lambda', 'value', 'value_se', 'takeup_a', 'takeup_b', 'disparity',
                          'dr_value', 'dr_value_se'])
        np.testing.assert_allclose(frame['lambda'], [0.0, 0.1, 0.2])
        plain = sweep(self.ds, self.eta, self.cost, [0.0, 0.1])
        self.assertFalse(plain.has_dr)
        self.assertTrue(plain.to_csv().startswith('lambda,value,value_se,takeup_a,takeup_b,'
                                                  'disparity\n'))

    def test_grid_checks(self):
        with self.assertRaisesRegex(DomainError, 'empty'):
            sweep(self.ds, self.eta, self.cost, [])
        with self.assertRaisesRegex(DomainError, 'strictly increasing'):
            sweep(self.ds, self.eta, self.cost, [0.2, 0.1])


class TradeoffCurveTest(TestBase):

    def test_points_must_increase(self):
        points = [TradeoffPoint(0.5, 1.0, 0.1, 0.5, 0.4, 0.1),
                  TradeoffPoint(0.5, 0.9, 0.1, 0.4, 0.4, 0.0)]
        with self.assertRaises(DomainError):
            TradeoffCurve(points, ('a', 'b'))
        with self.assertRaises(DomainError):
            TradeoffCurve([], ('a', 'b'))

    def test_str(self):
        curve = TradeoffCurve([TradeoffPoint(0.0, 1.0, 0.1, 0.5, 0.4, 0.1),
                               TradeoffPoint(0.5, 0.9, 0.1, 0.4, 0.4, 0.0)], ('a', 'b'))
        text = str(curve)
        self.assertIn('Groups.......: a, b', text)
        self.assertIn('Penalty range: [0, 0.5]', text)
