import itertools

import numpy as np

from fairrec.datasets import CostSpec
from fairrec.dgp import eight_cell_spec, generate, oracle_constrained_optimum, oracle_takeup, \
    oracle_randomized_optimum, oracle_value, population_dataset, random_dgp_spec
from fairrec.exceptions import DomainError, InfeasibleError
from fairrec.policies import RandomizedPolicy, TabularPolicy, ThresholdPolicy
from fairrec.testing import TestBase, cell_spec, oracle, rows, two_group_spec
from fairrec.threshold import (
    breakpoint_mixture,
    dual_objective,
    feasible_epsilon_range,
    lagrangian_L,
    solve_index,
    solve_threshold,
    solve_threshold_covariate_only,
)


def recommends_where_positive(test, ds, eta, cost, solution):
    freq = ds.group_frequencies()
    index = np.array([lagrangian_L(solution.lam, ds.X[i], ds.groups[i], eta, cost,
                                   group_freq=freq) for i in range(ds.n)])
    np.testing.assert_array_equal(solution.policy.propensity(ds), (index > 0).astype(float))


class LagrangianTest(TestBase):

    def test_hand_computed(self):
        spec = two_group_spec(lift_a=0.5, p10_a=0.3, lift_b=0.3, p10_b=0.1, mu1=1.0, mu0=0.0)
        eta = oracle(spec)
        cost = CostSpec(1.0, 0.0, 0.0)
        # the penalty lowers the index of the group whose take-up is bounded above
        self.assertAlmostEqual(lagrangian_L(0.2, [0.0], 'a', eta, cost), 0.5 * (1.0 - 0.4))
        self.assertAlmostEqual(lagrangian_L(0.2, [0.0], 'b', eta, cost), 0.3 * (1.0 + 0.4))

    def test_recommendation_weight(self):
        spec = two_group_spec(lift_a=0.5, mu1=1.0, mu0=0.0)
        cost = CostSpec(1.0, 0.0, -0.1)
        self.assertAlmostEqual(lagrangian_L(0.0, [0.0], 'a', oracle(spec), cost), 0.5 - 0.1)

    def test_group_frequencies(self):
        spec = two_group_spec(lift_a=0.5, mu1=1.0, mu0=0.0)
        value = lagrangian_L(0.2, [0.0], 'a', oracle(spec), CostSpec(1.0, 0.0, 0.0),
                             group_freq={'a': 0.25, 'b': 0.75})
        self.assertAlmostEqual(value, 0.5 * (1.0 - 0.8))

    def test_zero_penalty(self):
        spec = two_group_spec(lift_a=0.5, mu1=0.7, mu0=0.4)
        cost = CostSpec(1.0, 0.1, 0.0)
        self.assertAlmostEqual(lagrangian_L(0.0, 0.0, 'a', oracle(spec), cost),
                               0.5 * (0.3 + 0.1))

    def test_unknown_group(self):
        with self.assertRaises(DomainError):
            lagrangian_L(0.1, [0.0], 'c', oracle(two_group_spec()), CostSpec())


class TwoRowProgramTest(TestBase):
    """One row per group with lifts 0.5 and 0.3 and baseline take-up 0.2 and 0.1."""

    def setUp(self):
        super(TwoRowProgramTest, self).setUp()
        self.spec = two_group_spec(lift_a=0.5, p10_a=0.2, lift_b=0.3, p10_b=0.1,
                                   mu1=0.7, mu0=0.4)
        self.eta = oracle(self.spec)
        self.ds = rows([[0.0], [0.0]], ['a', 'b'], [0, 1], [0, 1], [0.0, 1.0])
        self.cost = CostSpec(1.0, 0.0, 0.0)

    def test_feasible_range(self):
        low, high = feasible_epsilon_range(self.ds, self.eta)
        self.assertAlmostEqual(high, 0.6)
        self.assertAlmostEqual(low, -0.2)

    def test_loose_bound_needs_no_penalty(self):
        for eps in (0.3, 0.6, 1.0):
            lam, policy = solve_threshold(self.ds, self.eta, self.cost, eps)
            self.assertEqual(lam, 0.0)
            np.testing.assert_array_equal(policy.propensity(self.ds), [1.0, 1.0])

    def test_binding_bound(self):
        solution = solve_threshold(self.ds, self.eta, self.cost, 0.1)
        # Group a drops out once the penalty exceeds its utility lift 0.5 * 0.3.
        self.assertAlmostEqual(solution.lam, 0.15, delta=1e-6)
        np.testing.assert_array_equal(solution.policy.propensity(self.ds), [0.0, 1.0])
        self.assertAlmostEqual(solution.disparity, -0.2)
        self.assertAlmostEqual(solution.value, 0.49)
        self.assertAlmostEqual(solution.dual_slope, 0.3)
        self.assertIsInstance(solution.policy, ThresholdPolicy)

    def test_recommends_where_index_positive(self):
        for eps in (0.1, 0.3):
            solution = solve_threshold(self.ds, self.eta, self.cost, eps)
            recommends_where_positive(self, self.ds, self.eta, self.cost, solution)

    def test_randomized_bound(self):
        solution = solve_threshold(self.ds, self.eta, self.cost, 0.1, randomize=True)
        self.assertIsInstance(solution.policy, RandomizedPolicy)
        np.testing.assert_allclose(solution.policy.propensity(self.ds), [0.6, 1.0])
        self.assertAlmostEqual(solution.disparity, 0.1)
        self.assertAlmostEqual(solution.value, 0.535)
        self.assertAlmostEqual(solution.lam, 0.15, delta=1e-6)
        # no duality gap once the breakpoint row may be randomized
        self.assertAlmostEqual(dual_objective(self.ds, self.eta, self.cost, 0.1, 0.15),
                               solution.value)

    def test_randomize_loose_bound(self):
        solution = solve_threshold(self.ds, self.eta, self.cost, 0.3, randomize=True)
        self.assertEqual(solution.lam, 0.0)
        self.assertIsInstance(solution.policy, ThresholdPolicy)

    def test_infeasible(self):
        with self.assertRaises(InfeasibleError) as context:
            solve_threshold(self.ds, self.eta, self.cost, -0.3)
        low, high = context.exception.feasible_range
        self.assertAlmostEqual(low, -0.2)
        self.assertAlmostEqual(high, 0.6)
        self.assertIn('feasible range', str(context.exception))

    def test_weak_duality(self):
        solution = solve_threshold(self.ds, self.eta, self.cost, 0.1)
        for lam in np.linspace(0.0, 2.0, 41):
            self.assertGreaterEqual(dual_objective(self.ds, self.eta, self.cost, 0.1, lam),
                                    solution.value - 1e-12)

    def test_negative_penalty(self):
        with self.assertRaises(DomainError):
            dual_objective(self.ds, self.eta, self.cost, 0.1, -1.0)

    def test_symmetric_groups(self):
        spec = two_group_spec(lift_a=0.4, p10_a=0.2, lift_b=0.4, p10_b=0.2)
        lam, policy = solve_threshold(self.ds, oracle(spec), self.cost, 0.0)
        self.assertEqual(lam, 0.0)
        np.testing.assert_array_equal(policy.propensity(self.ds), [1.0, 1.0])

    def test_three_groups(self):
        spec = cell_spec([(0.0, g, 1 / 3.0, 0.5, 0.6, 0.2, 0.7, 0.4) for g in 'abc'])
        ds = rows([[0.0]] * 3, ['a', 'b', 'c'], [0, 1, 0], [0, 1, 1], [0.0, 1.0, 1.0])
        with self.assertRaisesRegex(DomainError, 'exactly two groups'):
            solve_threshold(ds, oracle(spec), self.cost, 0.0)
        solution = solve_threshold(ds, oracle(spec), self.cost, 0.0, groups=('a', 'c'))
        self.assertLessEqual(solution.disparity, 1e-12)


class SolveIndexTest(TestBase):

    def test_zero_slope_rows_keep_their_sign(self):
        base = np.array([1.0, -1.0, 0.5])
        slope = np.array([0.0, 0.0, 1.0])
        lam = solve_index(base, slope, 0.0, 0.0)
        self.assertGreaterEqual(lam, 0.5)
        self.assertLess(lam, 0.5 + 1e-6)

    def test_infeasible_range(self):
        with self.assertRaises(InfeasibleError) as context:
            solve_index(np.array([1.0]), np.array([1.0]), 0.5, 0.0)
        self.assertEqual(context.exception.feasible_range, (0.5, 1.5))

    def test_breakpoint_mixture(self):
        # index of row a vanishes at 0.15; row b is recommended at every penalty
        base, slope = np.array([0.15, 0.09]), np.array([1.0, -0.6])
        lam_out, lam_in, weight = breakpoint_mixture(base, slope, 0.1, 0.1)
        self.assertAlmostEqual(lam_out, 0.15, delta=1e-6)
        self.assertAlmostEqual(lam_in, 0.15, delta=1e-6)
        self.assertLess(lam_in, lam_out)
        self.assertAlmostEqual(weight, 0.6)
        self.assertIsNone(breakpoint_mixture(base, slope, 0.1, 0.3))


class EightCellTest(TestBase):

    def setUp(self):
        super(EightCellTest, self).setUp()
        self.spec = eight_cell_spec()
        # Cell masses times 20 are integral, so row frequencies equal the masses.
        self.ds = population_dataset(self.spec, 20)
        self.eta = oracle(self.spec)
        self.cost = CostSpec()

    def test_matches_enumeration(self):
        solution = solve_threshold(self.ds, self.eta, self.cost, 0.05)
        _, optimum = oracle_constrained_optimum(self.spec, self.cost, 0.05)
        self.assertAlmostEqual(solution.value, optimum, delta=1e-6)
        self.assertLessEqual(solution.disparity, 0.05 + 1e-9)
        gap = oracle_takeup(self.spec, solution.policy, 'a') \
            - oracle_takeup(self.spec, solution.policy, 'b')
        self.assertAlmostEqual(gap, solution.disparity)

    def test_unconstrained(self):
        solution = solve_threshold(self.ds, self.eta, self.cost, np.inf)
        _, optimum = oracle_constrained_optimum(self.spec, self.cost, np.inf)
        self.assertEqual(solution.lam, 0.0)
        self.assertAlmostEqual(solution.value, optimum)

    def test_dual_is_convex(self):
        grid = np.linspace(0.0, 0.5, 51)
        duals = np.array([dual_objective(self.ds, self.eta, self.cost, 0.05, lam)
                          for lam in grid])
        self.assertTrue(np.all(np.diff(duals, 2) >= -1e-12))

    def test_recommends_where_index_positive(self):
        for eps in (0.0, 0.05, 0.2):
            solution = solve_threshold(self.ds, self.eta, self.cost, eps)
            recommends_where_positive(self, self.ds, self.eta, self.cost, solution)

    def test_covariate_only(self):
        solution = solve_threshold_covariate_only(self.ds, self.eta, self.cost, 0.15)
        self.assertGreater(solution.lam, 0.0)
        # x = 1 lowers the gap and x = 3 barely raises it; x = 0 and x = 2 do not fit
        self.assertAlmostEqual(solution.disparity, 0.10)
        propensity = solution.policy.propensity(self.ds)
        for x, expected in ((0, 0.0), (1, 1.0), (2, 0.0), (3, 1.0)):
            np.testing.assert_array_equal(propensity[self.ds.X[:, 0] == x], expected)
        group_aware = solve_threshold(self.ds, self.eta, self.cost, 0.15)
        self.assertLessEqual(solution.value, group_aware.value + 1e-12)

    def test_covariate_only_infeasible(self):
        # without the group the smallest gap is 0.11 - 0.02, the largest 0.11 + 0.15
        with self.assertRaises(InfeasibleError) as context:
            solve_threshold_covariate_only(self.ds, self.eta, self.cost, 0.05)
        low, high = context.exception.feasible_range
        self.assertAlmostEqual(low, 0.09)
        self.assertAlmostEqual(high, 0.26)

    def test_sampled_data(self):
        ds = generate(self.spec, 5000, seed=3)
        low, high = feasible_epsilon_range(ds, self.eta)
        solution = solve_threshold(ds, self.eta, self.cost, 0.0)
        self.assertLessEqual(solution.disparity, 1e-9)
        self.assertLess(low, 0.0)
        self.assertGreater(high, 0.0)


class CovariateOnlyTest(TestBase):

    def test_covariate_reveals_group(self):
        spec = cell_spec([(0.0, 'a', 0.25, 0.5, 0.8, 0.3, 0.7, 0.4),
                          (2.0, 'a', 0.25, 0.5, 0.6, 0.2, 0.9, 0.3),
                          (1.0, 'b', 0.25, 0.5, 0.5, 0.1, 0.6, 0.4),
                          (3.0, 'b', 0.25, 0.5, 0.4, 0.1, 0.7, 0.35)])
        ds, eta, cost = population_dataset(spec, 4), oracle(spec), CostSpec()
        covariate_only = solve_threshold_covariate_only(ds, eta, cost, 0.1)
        group_aware = solve_threshold(ds, eta, cost, 0.1)
        self.assertGreater(group_aware.lam, 0.0)
        self.assertEqual(covariate_only.lam, group_aware.lam)
        np.testing.assert_array_equal(covariate_only.policy.propensity(ds),
                                      group_aware.policy.propensity(ds))
        self.assertAlmostEqual(covariate_only.value, group_aware.value)

    def test_opposite_signs_share_a_covariate(self):
        # at x = 0 recommending helps group a and hurts group b
        spec = cell_spec([(0.0, 'a', 0.3, 0.5, 0.8, 0.3, 0.7, 0.4),
                          (0.0, 'b', 0.2, 0.5, 0.6, 0.2, 0.3, 0.5),
                          (1.0, 'a', 0.2, 0.5, 0.6, 0.2, 0.6, 0.5),
                          (1.0, 'b', 0.3, 0.5, 0.5, 0.1, 0.6, 0.4)])
        ds, eta, cost = population_dataset(spec, 10), oracle(spec), CostSpec()
        covariate_only = solve_threshold_covariate_only(ds, eta, cost, np.inf)
        group_aware = solve_threshold(ds, eta, cost, np.inf)
        self.assertEqual(covariate_only.lam, 0.0)
        # E[lift tau | x = 0] = 0.6 * 0.15 - 0.4 * 0.08 > 0
        np.testing.assert_array_equal(covariate_only.policy.propensity(ds), np.ones(ds.n))
        at_zero = ds.X[:, 0] == 0.0
        np.testing.assert_array_equal(group_aware.policy.propensity(ds)[at_zero],
                                      (ds.groups[at_zero] == 'a').astype(float))
        self.assertAlmostEqual(group_aware.value - covariate_only.value, 0.2 * 0.08)
        best = max(oracle_value(spec, TabularPolicy({((float(x),), g): r[int(x)]
                                                     for x in (0, 1) for g in 'ab'}), cost)
                   for r in itertools.product((0, 1), repeat=2))
        self.assertAlmostEqual(covariate_only.value, best)


class RandomProcessesTest(TestBase):
    """Ten random eight-cell processes, five bounds inside each feasible range."""

    def instances(self):
        for seed in range(10):
            spec = random_dgp_spec(8, seed)
            # masses are multiples of 1/100, so row frequencies equal the masses
            ds = population_dataset(spec, 100)
            eta = oracle(spec)
            low, high = feasible_epsilon_range(ds, eta)
            for q in (0.1, 0.3, 0.5, 0.7, 0.9):
                yield spec, ds, eta, low + q * (high - low)

    def test_feasible_range_matches_enumeration(self):
        for seed in range(10):
            spec = random_dgp_spec(8, seed)
            low, high = feasible_epsilon_range(population_dataset(spec, 100), oracle(spec))
            with self.assertRaises(InfeasibleError) as context:
                oracle_constrained_optimum(spec, CostSpec(), -np.inf)
            enumerated_low, enumerated_high = context.exception.feasible_range
            self.assertAlmostEqual(low, enumerated_low, delta=1e-12)
            self.assertAlmostEqual(high, enumerated_high, delta=1e-12)

    def test_optima(self):
        cost = CostSpec()
        for spec, ds, eta, eps in self.instances():
            deterministic = solve_threshold(ds, eta, cost, eps)
            randomized = solve_threshold(ds, eta, cost, eps, randomize=True)
            _, enumerated = oracle_constrained_optimum(spec, cost, eps)
            _, relaxed = oracle_randomized_optimum(spec, cost, eps)
            self.assertLessEqual(deterministic.disparity, eps + 1e-9)
            self.assertLessEqual(randomized.disparity, eps + 1e-9)
            # a threshold rule is one deterministic policy, the mixture reaches the LP
            self.assertLessEqual(deterministic.value, enumerated + 1e-9)
            self.assertAlmostEqual(randomized.value, relaxed, delta=1e-6)
            self.assertGreaterEqual(randomized.value, enumerated - 1e-9)
            self.assertAlmostEqual(oracle_value(spec, randomized.policy, cost),
                                   randomized.value)

    def test_recommends_where_index_positive(self):
        cost = CostSpec()
        for _, ds, eta, eps in self.instances():
            recommends_where_positive(self, ds, eta, cost, solve_threshold(ds, eta, cost, eps))
