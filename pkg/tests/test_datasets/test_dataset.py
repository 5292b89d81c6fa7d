import numpy as np

from fairrec.datasets import CostSpec, Dataset
from fairrec.exceptions import DomainError
from fairrec.testing import TestBase


class DatasetTest(TestBase):

    def setUp(self):
        super(DatasetTest, self).setUp()
        self.ds = Dataset([[0.0], [1.0], [2.0], [3.0]], ['b', 'a', 'b', 'a'],
                          [0, 1, 1, 0], [0, 1, 0, 0], [0.5, 1.0, 0.0, 2.0])

    def test_group_encoding_is_sorted(self):
        self.assertEqual(self.ds.group_set, ['a', 'b'])
        np.testing.assert_array_equal(self.ds.group_codes, [1, 0, 1, 0])
        np.testing.assert_array_equal(self.ds.groups, ['b', 'a', 'b', 'a'])

    def test_arrays_are_read_only(self):
        with self.assertRaises(ValueError):
            self.ds.r[0] = 1

    def test_group_frequencies(self):
        self.assertEqual(dict(self.ds.group_frequencies()), {'a': 0.5, 'b': 0.5})

    def test_declared_group_set_may_have_empty_groups(self):
        ds = Dataset([[0.0]], ['a'], [1], [1], [1.0], group_set=['a', 'b', 'c'])
        self.assertEqual(ds.group_frequencies()['c'], 0.0)
        self.assertEqual(ds.group_index('c'), 2)

    def test_unknown_group_rejected(self):
        with self.assertRaisesRegex(DomainError, 'not in the group set'):
            Dataset([[0.0]], ['z'], [1], [1], [1.0], group_set=['a'])

    def test_non_binary_recommendation_rejected(self):
        with self.assertRaisesRegex(DomainError, r'\{0, 1\}'):
            Dataset([[0.0]], ['a'], [2], [1], [1.0])

    def test_column_lengths_checked(self):
        with self.assertRaisesRegex(DomainError, 'Column t has 1 rows'):
            Dataset([[0.0], [1.0]], ['a', 'a'], [0, 1], [1], [1.0, 0.0])

    def test_cells(self):
        ds = Dataset([[1.0], [0.0], [1.0], [0.0]], ['a', 'a', 'a', 'b'],
                     [0, 0, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0])
        cells, index = ds.cells()
        self.assertEqual(cells, [((0.0,), 'a'), ((0.0,), 'b'), ((1.0,), 'a')])
        np.testing.assert_array_equal(index, [2, 0, 2, 1])

    def test_subset_keeps_group_set(self):
        sub = self.ds.subset([1, 3])
        self.assertEqual(sub.group_set, ['a', 'b'])
        self.assertEqual(sub.n, 2)
        np.testing.assert_array_equal(sub.y, [1.0, 2.0])

    def test_fingerprint(self):
        same = Dataset(self.ds.X, self.ds.groups, self.ds.r, self.ds.t, self.ds.y)
        self.assertEqual(same.fingerprint(), self.ds.fingerprint())
        self.assertEqual(same, self.ds)
        other = self.ds.subset([0, 1, 2])
        self.assertNotEqual(other.fingerprint(), self.ds.fingerprint())

    def test_is_binary_outcome(self):
        self.assertFalse(self.ds.is_binary_outcome())
        self.assertTrue(self.ds.subset([1, 2]).is_binary_outcome())

    def test_observation(self):
        row = self.ds.observation(1)
        self.assertEqual((row.a, row.r, row.t, row.y), ('a', 1, 1, 1.0))

    def test_str(self):
        text = str(self.ds)
        self.assertTrue(text.startswith('Encouragement Dataset\n' + '=' * 21))
        self.assertIn('Rows........: 4', text)


class CostSpecTest(TestBase):

    def test_utility(self):
        cost = CostSpec(w_y=-2.0, w_t=-1.0, w_r=0.5)
        self.assertEqual(cost.utility(1, 1, 1), -2.5)
        self.assertEqual(cost.utility(0, 0, 0), 0.0)

    def test_treatment_effect(self):
        cost = CostSpec(w_y=2.0, w_t=-1.0)
        np.testing.assert_allclose(cost.treatment_effect(np.array([0.7]), np.array([0.4])),
                                   [2.0 * 0.3 - 1.0])

    def test_weights_must_be_finite(self):
        with self.assertRaises(DomainError):
            CostSpec(w_y=np.inf)
