import numpy as np

from fairrec.exceptions import DomainError
from fairrec.robust import OverlapPartition, UncertaintySet
from fairrec.testing import TestBase


class UncertaintySetTest(TestBase):

    def test_broadcasting(self):
        lower, upper = UncertaintySet([0.1, 0.2], 0.9).bounds(3)
        np.testing.assert_array_equal(lower, [[0.1, 0.2]] * 3)
        np.testing.assert_array_equal(upper, np.full((3, 2), 0.9))

    def test_monotone(self):
        fitted = np.array([[0.3, 0.5], [0.0, 0.95]])
        lower, upper = UncertaintySet(0.1, 0.9, monotone=True).bounds(2, fitted)
        np.testing.assert_allclose(lower, [[0.3, 0.5], [0.1, 0.9]])
        np.testing.assert_allclose(upper, np.full((2, 2), 0.9))
        with self.assertRaisesRegex(DomainError, 'fitted responsivities'):
            UncertaintySet(0.1, 0.9, monotone=True).bounds(2)

    def test_invalid(self):
        with self.assertRaises(DomainError):
            UncertaintySet(0.6, 0.4)
        with self.assertRaises(DomainError):
            UncertaintySet(-0.1, 0.4)
        with self.assertRaises(DomainError):
            UncertaintySet([0.1, 0.2], 0.4, mode='constant')
        with self.assertRaises(DomainError):
            UncertaintySet(0.0, 1.0, mode='lipschitz')
        with self.assertRaises(DomainError):
            UncertaintySet(0.0, 1.0, mode='hull')
        with self.assertRaisesRegex(DomainError, 'do not fit 3 rows'):
            UncertaintySet(np.zeros((2, 2)), 1.0).bounds(3)

    def test_widened(self):
        widened = UncertaintySet(0.2, 0.7, mode='constant').widened(0.3)
        lower, upper = widened.bounds(1)
        np.testing.assert_allclose(lower, [[0.0, 0.0]])
        np.testing.assert_allclose(upper, [[1.0, 1.0]])
        self.assertEqual(widened.mode, 'interval')

    def test_pointwise_constant(self):
        self.assertTrue(UncertaintySet([0.0, 0.1], 1.0).is_pointwise_constant)
        self.assertFalse(UncertaintySet(np.zeros((4, 2)), 1.0).is_pointwise_constant)


class OverlapPartitionTest(TestBase):

    def test_sets(self):
        part = OverlapPartition([[False, False], [True, False], [False, True]])
        np.testing.assert_array_equal(part.ov, [True, False, False])
        np.testing.assert_array_equal(part.nov_r(1), [False, False, True])
        self.assertFalse(part.is_empty)
        self.assertTrue(OverlapPartition.full_overlap(3).is_empty)
        self.assertIn('No overlap, r=0: 1', str(part))

    def test_shape(self):
        with self.assertRaises(DomainError):
            OverlapPartition([True, False])
