import numpy as np

from fairrec.estimators import PseudoOutcome, ValueEstimate
from fairrec.exceptions import DomainError
from fairrec.testing import TestBase


class ValueEstimateTest(TestBase):

    def test_point_and_standard_error(self):
        estimate = ValueEstimate([1.0, 2.0, 3.0, 4.0], name='DM')
        self.assertEqual(estimate.point, 2.5)
        self.assertEqual(estimate.n, 4)
        self.assertAlmostEqual(estimate.standard_error, np.std([1, 2, 3, 4], ddof=1) / 2)
        self.assertAlmostEqual(estimate.variance, np.var([1, 2, 3, 4], ddof=1))
        self.assertEqual(float(estimate), 2.5)

    def test_single_observation(self):
        estimate = ValueEstimate([0.3])
        self.assertEqual(estimate.point, 0.3)
        self.assertTrue(np.isnan(estimate.standard_error))

    def test_no_observations(self):
        with self.assertRaisesRegex(DomainError, 'zero observations'):
            ValueEstimate([])

    def test_scores_must_be_finite(self):
        with self.assertRaises(DomainError):
            ValueEstimate([1.0, np.inf])

    def test_str(self):
        estimate = ValueEstimate([1.0, 3.0], name='CV', warnings=['treatment overlap'])
        text = str(estimate)
        self.assertTrue(text.startswith('Value Estimate\n' + '=' * len('Value Estimate')))
        self.assertIn('Estimator.....: CV', text)
        self.assertIn('Warning.......: treatment overlap', text)


class PseudoOutcomeTest(TestBase):

    def test_unknown_kind(self):
        with self.assertRaisesRegex(DomainError, 'DM, IPW, DR'):
            PseudoOutcome('AIPW', [0.0])

    def test_length(self):
        self.assertEqual(len(PseudoOutcome('DR', [0.0, 1.0, 2.0])), 3)
