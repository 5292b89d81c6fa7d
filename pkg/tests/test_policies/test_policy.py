import numpy as np

from fairrec.datasets import Dataset
from fairrec.exceptions import DomainError
from fairrec.policies import (
    ConstantPolicy,
    LinearIndexPolicy,
    RandomizedPolicy,
    TabularPolicy,
    ThresholdPolicy,
    as_randomized,
    linear_features,
    mixture,
    read_policy,
    write_policy,
)
from fairrec.testing import TestBase


class PolicyTest(TestBase):

    def setUp(self):
        super(PolicyTest, self).setUp()
        self.ds = Dataset([[0.0], [1.0], [2.0], [1.0]], ['a', 'b', 'a', 'a'], [0, 0, 0, 0],
                          [0, 0, 0, 0], [0, 0, 0, 0])

    def test_constant(self):
        np.testing.assert_array_equal(ConstantPolicy(1).propensity(self.ds), np.ones(4))
        with self.assertRaises(DomainError):
            ConstantPolicy(2)

    def test_threshold_ties_do_not_recommend(self):
        policy = ThresholdPolicy(0.5, lambda ds, lam: ds.X[:, 0] - 2 * lam)
        np.testing.assert_array_equal(policy.propensity(self.ds), [0, 0, 1, 0])
        self.assertTrue(np.all(policy.decisions(self.ds) == [False, False, True, False]))

    def test_linear_features(self):
        features = linear_features(self.ds, ['a', 'b'])
        np.testing.assert_array_equal(features[:, 1], [0, 1, 0, 0])
        # a declared group order other than the dataset's is honoured
        features = linear_features(self.ds, ['b', 'a'])
        np.testing.assert_array_equal(features[:, 1], [1, 0, 1, 1])

    def test_linear_index(self):
        policy = LinearIndexPolicy([-1.5, 1.0, 1.0], ['a', 'b'])
        np.testing.assert_array_equal(policy.propensity(self.ds), [0, 1, 1, 0])
        with self.assertRaisesRegex(DomainError, 'data gives 3 features'):
            LinearIndexPolicy([0.0, 1.0], ['a', 'b']).propensity(self.ds)

    def test_tabular_default(self):
        policy = TabularPolicy({((1.0,), 'a'): 1}, default=0)
        np.testing.assert_array_equal(policy.propensity(self.ds), [0, 0, 0, 1])

    def test_tabular_from_cells(self):
        cells, _ = self.ds.cells()
        policy = TabularPolicy.from_cells(self.ds, [1] * len(cells))
        np.testing.assert_array_equal(policy.propensity(self.ds), np.ones(4))

    def test_mixture_is_linear(self):
        policy = mixture([ConstantPolicy(1), ConstantPolicy(0)])
        np.testing.assert_allclose(policy.propensity(self.ds), np.full(4, 0.5))
        self.assertFalse(policy.is_deterministic)

    def test_randomized_flattens_and_drops_zero_weights(self):
        inner = RandomizedPolicy([(0.5, ConstantPolicy(1)), (0.5, ConstantPolicy(0))])
        outer = RandomizedPolicy([(0.5, inner), (0.5, ConstantPolicy(1)),
                                  (0.0, ConstantPolicy(0))])
        self.assertEqual(len(outer.components), 3)
        np.testing.assert_allclose(outer.weights, [0.25, 0.25, 0.5])
        np.testing.assert_allclose(outer.propensity(self.ds), np.full(4, 0.75))

    def test_randomized_weights_checked(self):
        with self.assertRaisesRegex(DomainError, 'sum to'):
            RandomizedPolicy([(0.5, ConstantPolicy(1))])
        with self.assertRaisesRegex(DomainError, 'nonnegative'):
            RandomizedPolicy([(1.5, ConstantPolicy(1)), (-0.5, ConstantPolicy(0))])

    def test_as_randomized(self):
        policy = as_randomized(ConstantPolicy(1))
        self.assertTrue(policy.is_deterministic)
        self.assertIs(as_randomized(policy), policy)

    def test_write_then_read(self):
        policies = [
            ConstantPolicy(1),
            LinearIndexPolicy([0.1, -1.0 / 3.0, 2.0], ['a', 'b']),
            TabularPolicy({((0.0,), 'a'): 1, ((1.0,), 'b'): 0, ((2.0,), 'a'): 1}, default=1),
        ]
        for k, policy in enumerate(policies):
            write_policy(policy, 'policy%d.txt' % k)
            self.assertEqual(read_policy('policy%d.txt' % k), policy)

        mixed = RandomizedPolicy([(1.0 / 3.0, policies[0]), (2.0 / 3.0, policies[2])])
        write_policy(mixed, 'mixed.txt')
        restored = read_policy('mixed.txt')
        np.testing.assert_allclose(restored.weights, mixed.weights)
        np.testing.assert_allclose(restored.propensity(self.ds), mixed.propensity(self.ds))

    def test_threshold_policy_is_not_readable(self):
        write_policy(ThresholdPolicy(0.0, lambda ds, lam: ds.X[:, 0], 'x'), 'policy.txt')
        with self.assertRaisesRegex(DomainError, 'cannot be read back'):
            read_policy('policy.txt')

    def test_str(self):
        text = str(ConstantPolicy(1))
        self.assertTrue(text.startswith('Constant Policy\n' + '=' * 15))
        self.assertIn('r: 1', text)
