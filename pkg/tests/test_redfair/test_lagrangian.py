import numpy as np

from fairrec.datasets import CostSpec
from fairrec.dgp import eight_cell_spec, population_dataset
from fairrec.exceptions import DomainError
from fairrec.policies import ConstantPolicy, LinearIndexPolicy, TabularPolicy
from fairrec.redfair import (
    best_response_lambda,
    best_response_policy,
    lagrangian_weights,
    make_treatment_parity,
    make_unconstrained,
)
from fairrec.testing import TestBase, cell_spec, oracle, rows, two_group_spec
from fairrec.threshold import solve_threshold


class LagrangianWeightsTest(TestBase):

    def setUp(self):
        super(LagrangianWeightsTest, self).setUp()
        # Utility lift 0.5 * 0.6 = 0.3 in group a and 0.3 * 0.6 in group b.
        self.eta = oracle(two_group_spec(lift_a=0.5, mu1=0.9, mu0=0.3))
        self.ds = rows([[0.0], [0.0]], ['a', 'b'], [1, 0], [1, 0], [1.0, 0.0])
        self.system = make_treatment_parity(['a', 'b'], self.eta, 0.05)

    def test_no_multipliers(self):
        weights, labels = lagrangian_weights(self.ds, self.eta, np.zeros(4), self.system,
                                             kind='DM')
        np.testing.assert_allclose(weights, [0.3, 0.18])
        np.testing.assert_array_equal(labels, [1, 1])

    def test_hand_computed(self):
        # Row a,+ penalizes h_a - h_all: group a pays 0.2 * 0.5 / 0.5, everyone gets
        # back 0.2 * lift.
        weights, labels = lagrangian_weights(self.ds, self.eta, [0.2, 0.0, 0.0, 0.0],
                                             self.system, kind='DM')
        np.testing.assert_allclose(weights, [0.3 - 0.2 + 0.1, 0.18 + 0.06])
        np.testing.assert_array_equal(labels, [1, 1])

    def test_sign_flip(self):
        weights, labels = lagrangian_weights(self.ds, self.eta, [2.0, 0.0, 0.0, 0.0],
                                             self.system, kind='DM')
        np.testing.assert_allclose(weights, [0.7, 0.78])
        np.testing.assert_array_equal(labels, [-1, 1])


class BestResponsePolicyTest(TestBase):

    def setUp(self):
        super(BestResponsePolicyTest, self).setUp()
        self.spec = eight_cell_spec()
        self.ds = population_dataset(self.spec, 20)
        self.eta = oracle(self.spec)

    def test_matches_unconstrained_threshold(self):
        cost = CostSpec(1.0, -0.1, 0.0)
        policy = best_response_policy(np.zeros(0), self.ds, self.eta,
                                      make_unconstrained(self.eta), kind='DM', cost=cost)
        self.assertIsInstance(policy, TabularPolicy)
        threshold = solve_threshold(self.ds, self.eta, cost, 1.0).policy
        np.testing.assert_array_equal(policy.propensity(self.ds),
                                      threshold.propensity(self.ds))

    def test_everyone_gains(self):
        policy = best_response_policy(np.zeros(0), self.ds, self.eta,
                                      make_unconstrained(self.eta), kind='DM')
        self.assertEqual(policy, ConstantPolicy(1))

    def test_linear_index_class(self):
        spec = cell_spec([(float(x), 'a', 0.25, 0.5, 0.7, 0.2,
                           0.3 if x < 2 else 0.8, 0.6 if x < 2 else 0.3) for x in range(4)])
        ds = population_dataset(spec, 40)
        eta = oracle(spec)
        policy = best_response_policy(np.zeros(0), ds, eta, make_unconstrained(eta),
                                      policy_class='linear_index', kind='DM')
        self.assertIsInstance(policy, LinearIndexPolicy)
        np.testing.assert_array_equal(policy.propensity(ds), (ds.X[:, 0] >= 2).astype(float))

    def test_unknown_class(self):
        with self.assertRaises(DomainError):
            best_response_policy(np.zeros(0), self.ds, self.eta, make_unconstrained(self.eta),
                                 policy_class='forest')


class BestResponseLambdaTest(TestBase):

    def test_all_slack(self):
        np.testing.assert_array_equal(best_response_lambda([0.1, 0.2], [0.3, 0.3], 2.0),
                                      [0.0, 0.0])

    def test_most_violated_row(self):
        np.testing.assert_array_equal(best_response_lambda([0.1, 0.3], [0.0, 0.0], 2.0),
                                      [0.0, 2.0])

    def test_tie_goes_to_first_row(self):
        np.testing.assert_array_equal(best_response_lambda([0.2, 0.2], [0.0, 0.0], 5.0),
                                      [5.0, 0.0])

    def test_no_rows(self):
        self.assertEqual(len(best_response_lambda([], [], 1.0)), 0)
