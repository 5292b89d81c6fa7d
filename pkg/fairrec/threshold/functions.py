import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ..datasets import CostSpec, Dataset
from ..estimators import disparity, dm_takeup, dm_value, dr_value, group_contrast_weights
from ..exceptions import DomainError, InfeasibleError
from ..nuisance import NuisanceBundle
from ..policies import BasePolicy, RandomizedPolicy, ThresholdPolicy
from .curve import TradeoffCurve, TradeoffPoint


logger = logging.getLogger(__name__)

BRACKET_CAP = 1e6
GOLDEN_TOL = 1e-9
FEASIBILITY_TOL = 1e-12
_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def _two_groups(group_set: Sequence[str], groups: Optional[Sequence[str]]) -> Tuple[str, str]:
    if groups is None:
        groups = group_set
    if len(groups) != 2:
        raise DomainError('the threshold solver handles exactly two groups, got %r; use '
                          'fairrec.redfair for more' % (list(groups),))
    a, b = groups
    return a, b


class GroupAwareIndex(object):
    """Per-row index ``base - λ slope`` of the take-up-gap Lagrangian.

    ``base = (p_{1|1} - p_{1|0}) τ_u + w_r`` is the utility lift of recommending,
    ``slope = (p_{1|1} - p_{1|0}) w`` with ``w = 1/p(a)`` on group a, ``-1/p(b)`` on
    group b and zero elsewhere. Group frequencies are fixed at construction so the
    index can be evaluated on new data.
    """

    def __init__(self, eta: NuisanceBundle, cost: CostSpec, groups: Tuple[str, str],
                 group_freq):
        self.eta = eta
        self.cost = cost
        self.groups = tuple(groups)
        self.group_weight = {groups[0]: 1.0 / group_freq[groups[0]],
                             groups[1]: -1.0 / group_freq[groups[1]]}

    def _row_weights(self, ds: Dataset) -> np.ndarray:
        return np.array([self.group_weight.get(g, 0.0) for g in ds.groups], dtype=float)

    def terms(self, ds: Dataset) -> Tuple[np.ndarray, np.ndarray]:
        pred = self.eta.predict(ds)
        base = pred.lift * self.cost.treatment_effect(pred.mu1, pred.mu0) + self.cost.w_r
        return base, pred.lift * self._row_weights(ds)

    def __call__(self, ds: Dataset, lam: float) -> np.ndarray:
        base, slope = self.terms(ds)
        return base - lam * slope

    def __str__(self):
        return 'lift*tau_u + w_r - lambda*lift*(1{A=%s}/%.6g - 1{A=%s}/%.6g)' % (
            self.groups[0], 1 / self.group_weight[self.groups[0]],
            self.groups[1], -1 / self.group_weight[self.groups[1]])


class CovariateOnlyIndex(GroupAwareIndex):
    """Group-aware index averaged over p(a | x), so the rule depends on x only.

    Every row is scored under each group's nuisance models at its own covariates.
    """

    def terms(self, ds: Dataset) -> Tuple[np.ndarray, np.ndarray]:
        membership = self.eta.group_probabilities(ds)
        base = np.zeros(ds.n)
        slope = np.zeros(ds.n)
        for j, g in enumerate(self.eta.group_set):
            pred = self.eta.predict(ds, group=g)
            prob = membership[:, j]
            base += prob * (pred.lift * self.cost.treatment_effect(pred.mu1, pred.mu0)
                            + self.cost.w_r)
            slope += prob * pred.lift * self.group_weight.get(g, 0.0)
        return base, slope

    def __str__(self):
        return 'E[%s | x]' % super(CovariateOnlyIndex, self).__str__()


class ThresholdSolution(object):
    """Solved penalty and threshold policy; unpacks as ``(lam, policy)``.

    Parameters
    ----------
    lam : float
        Penalty on the take-up gap at the optimum.
    policy : ThresholdPolicy or RandomizedPolicy
    value : float
        Estimated value of ``policy``.
    disparity : float
        Estimated take-up gap of ``policy``.
    eps : float
        Constraint level.
    """

    def __init__(self, lam: float, policy: BasePolicy, value: float,
                 disparity: float, eps: float):
        self.lam = lam
        self.policy = policy
        self.value = value
        self.disparity = disparity
        self.eps = eps

    @property
    def dual_slope(self) -> float:
        """Right derivative of the dual at ``lam``: ``eps`` minus the disparity."""
        return self.eps - self.disparity

    def __iter__(self):
        return iter((self.lam, self.policy))

    def __repr__(self):
        return 'ThresholdSolution(lam=%r, value=%r, disparity=%r, eps=%r)' % (
            self.lam, self.value, self.disparity, self.eps)


def feasible_range_from_terms(slope: np.ndarray, delta0: float) -> Tuple[float, float]:
    return (float(delta0 + np.mean(np.minimum(slope, 0.0))),
            float(delta0 + np.mean(np.maximum(slope, 0.0))))


def _breakpoints(base: np.ndarray, slope: np.ndarray) -> np.ndarray:
    """Positive penalties ``base/slope`` at which a row's decision flips."""
    with np.errstate(divide='ignore', invalid='ignore'):
        breakpoints = np.where(slope != 0, base / slope, np.nan)
    return np.unique(breakpoints[np.isfinite(breakpoints) & (breakpoints > 0)])


def _offset(b: float) -> float:
    return 1e-9 * max(1.0, b)


def _dual_minimizer(base: np.ndarray, slope: np.ndarray, delta0: float, eps: float) -> float:
    """Golden-section minimizer of ``mean((base - λ slope)_+) + λ (eps - delta0)``.

    The bracket doubles from [0, 1] until the rule at its right end meets the gap.
    """
    def gap(lam):
        return delta0 + np.mean(slope * ((base - lam * slope) > 0))

    def dual(lam):
        return np.mean(np.maximum(base - lam * slope, 0.0)) + lam * (eps - delta0)

    lo, hi = 0.0, 1.0
    while gap(hi) > eps + FEASIBILITY_TOL and hi < BRACKET_CAP:
        lo, hi = hi, 2.0 * hi
    logger.debug('dual bracket [%g, %g]', lo, hi)

    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = dual(c), dual(d)
    while hi - lo > GOLDEN_TOL:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = dual(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = dual(d)
    return 0.5 * (lo + hi)


def _near(breakpoints: np.ndarray, lam: float) -> np.ndarray:
    return breakpoints[np.abs(breakpoints - lam) <= 1e-6 * max(1.0, lam)]


def solve_index(base: np.ndarray, slope: np.ndarray, delta0: float, eps: float) -> float:
    """Penalty of the best threshold rule ``1{base - λ slope > 0}`` meeting the gap.

    The gap of the rule at λ is ``delta0 + mean(slope 1{base - λ slope > 0})``. The
    penalty minimizes the dual ``mean((base - λ slope)_+) + λ (eps - delta0)`` over
    λ >= 0 by golden-section search, then moves onto the nearest feasible side of a
    breakpoint ``base/slope`` where the rule changes.

    Raises
    ------
    InfeasibleError
        If no rule, thresholded or not, meets the gap.
    """
    base = np.asarray(base, dtype=float)
    slope = np.asarray(slope, dtype=float)

    def gap(lam):
        return delta0 + np.mean(slope * ((base - lam * slope) > 0))

    def value(lam):
        return np.mean(base * ((base - lam * slope) > 0))

    if gap(0.0) <= eps + FEASIBILITY_TOL:
        return 0.0
    feasible_range = feasible_range_from_terms(slope, delta0)
    if eps < feasible_range[0] - FEASIBILITY_TOL:
        raise InfeasibleError('no policy has a take-up gap of at most %g' % eps,
                              feasible_range=feasible_range)

    lam_hat = _dual_minimizer(base, slope, delta0, eps)
    breakpoints = _breakpoints(base, slope)
    candidates = [lam_hat] + [b + s * _offset(b) for b in _near(breakpoints, lam_hat)
                              for s in (-1, 1)]
    candidates = [c for c in candidates if c >= 0]
    feasible = [c for c in candidates if gap(c) <= eps + FEASIBILITY_TOL]
    if feasible:
        best = max(value(c) for c in feasible)
        return float(min(c for c in feasible if value(c) >= best))
    for b in breakpoints[breakpoints > lam_hat]:
        if gap(b + _offset(b)) <= eps + FEASIBILITY_TOL:
            return float(b + _offset(b))
    raise InfeasibleError('no threshold policy has a take-up gap of at most %g' % eps,
                          feasible_range=feasible_range)


def breakpoint_mixture(base: np.ndarray, slope: np.ndarray, delta0: float, eps: float
                       ) -> Optional[Tuple[float, float, float]]:
    """Two threshold rules around the dual breakpoint and the weight that mixes them.

    Rules on either side of the breakpoint differ only on the rows whose index
    vanishes there. Recommending those rows with the probability that makes the
    gap equal ``eps`` attains the optimum over randomized rules.

    Returns
    -------
    (lam_out, lam_in, weight) or None
        ``weight`` is the probability of the rule at ``lam_in``, the one
        recommending the tied rows with positive slope. None when the solution
        needs no randomization.
    """
    base = np.asarray(base, dtype=float)
    slope = np.asarray(slope, dtype=float)

    def gap(lam):
        return delta0 + np.mean(slope * ((base - lam * slope) > 0))

    if gap(0.0) <= eps + FEASIBILITY_TOL:
        return None
    near = _near(_breakpoints(base, slope), _dual_minimizer(base, slope, delta0, eps))
    if len(near) == 0:
        return None
    lam_out = float(near.max() + _offset(near.max()))
    lam_in = float(max(near.min() - _offset(near.min()), 0.0))
    gap_out, gap_in = gap(lam_out), gap(lam_in)
    if gap_out > eps + FEASIBILITY_TOL or gap_in <= gap_out:
        return None
    weight = float(np.clip((eps - gap_out) / (gap_in - gap_out), 0.0, 1.0))
    return lam_out, lam_in, weight


def _baseline_gap(ds: Dataset, eta: NuisanceBundle, a: str, b: str) -> float:
    """Take-up gap when nobody is recommended."""
    return float(np.mean(eta.predict(ds).p10 * group_contrast_weights(ds, a, b)))


def lagrangian_L(lam: float, x, a: str, eta: NuisanceBundle, cost: CostSpec,
                 groups: Optional[Sequence[str]] = None, group_freq=None) -> float:
    """Pointwise Lagrangian index of the take-up-gap program at one (x, a).

    ``L = lift(x, a) {τ(x, a) - λ w(a)} + w_r`` with ``τ = w_y (μ_1 - μ_0) + w_t``,
    ``w = 1/p(a)`` on the first group and ``-1/p(b)`` on the second. This is the
    index ``solve_threshold`` thresholds, so its policy recommends exactly where
    ``L > 0``. The baseline gap ``E[p_{1|0} | a] - E[p_{1|0} | b]`` does not depend
    on the policy and enters the dual as a constant instead.

    Parameters
    ----------
    lam : float
    x : array-like
        Covariates of the point.
    a : str
        Group of the point, one of the two constrained groups.
    eta : NuisanceBundle
    cost : CostSpec
    groups : sequence of str, optional
        The groups (a, b); defaults to the bundle's two groups.
    group_freq : mapping, optional
        Group frequencies p(a). Defaults to the bundle's; pass
        ``ds.group_frequencies()`` to reproduce the index of a solve on ``ds``.
    """
    g_a, g_b = _two_groups(eta.group_set, groups)
    if a not in (g_a, g_b):
        raise DomainError('group %r is neither %r nor %r' % (a, g_a, g_b))
    if group_freq is None:
        group_freq = eta.group_freq
    x = np.atleast_1d(np.asarray(x, dtype=float))
    row = Dataset([x], [a], [0], [0], [0.0], group_set=eta.group_set)
    return float(GroupAwareIndex(eta, cost, (g_a, g_b), group_freq)(row, lam)[0])


def _terms(ds, eta, cost, groups, covariate_only):
    a, b = _two_groups(ds.group_set, groups)
    freq = ds.group_frequencies()
    index_cls = CovariateOnlyIndex if covariate_only else GroupAwareIndex
    index = index_cls(eta, cost, (a, b), freq)
    base, slope = index.terms(ds)
    return index, base, slope, _baseline_gap(ds, eta, a, b)


def dual_objective(ds: Dataset, eta: NuisanceBundle, cost: CostSpec, eps: float,
                   lam: float, groups: Optional[Sequence[str]] = None) -> float:
    """Empirical dual ``mean(m_0) + mean((base - λ slope)_+) + λ (eps - gap_0)``.

    Bounds the value of every policy with take-up gap at most ``eps`` from above.
    """
    if lam < 0:
        raise DomainError('the penalty must be nonnegative, got %g' % lam)
    _, base, slope, delta0 = _terms(ds, eta, cost, groups, covariate_only=False)
    pred = eta.predict(ds)
    m0 = cost.w_y * pred.mu0 + pred.p10 * cost.treatment_effect(pred.mu1, pred.mu0)
    return float(np.mean(m0) + np.mean(np.maximum(base - lam * slope, 0.0))
                 + lam * (eps - delta0))


def _solve(ds, eta, cost, eps, groups, covariate_only, randomize) -> ThresholdSolution:
    index, base, slope, delta0 = _terms(ds, eta, cost, groups, covariate_only)
    lam = solve_index(base, slope, delta0, eps)
    policy = ThresholdPolicy(lam, index, description=str(index))  # type: BasePolicy
    mixture = breakpoint_mixture(base, slope, delta0, eps) if randomize else None
    if mixture is not None:
        lam_out, lam_in, weight = mixture
        logger.debug('randomizing between lambda=%.9g and %.9g with weight %.6g',
                     lam_out, lam_in, weight)
        lam = lam_out
        policy = RandomizedPolicy([
            (1.0 - weight, ThresholdPolicy(lam_out, index, description=str(index))),
            (weight, ThresholdPolicy(lam_in, index, description=str(index))),
        ])
        if policy.is_deterministic:
            policy = policy.components[0][1]
    a, b = index.groups
    solution = ThresholdSolution(lam, policy, dm_value(ds, policy, eta, cost).point,
                                 disparity(ds, policy, eta, a, b).point, eps)
    logger.info('threshold solution at eps=%g: lambda=%.9g, value=%.6g, disparity=%.6g',
                eps, lam, solution.value, solution.disparity)
    return solution


def solve_threshold(ds: Dataset, eta: NuisanceBundle, cost: CostSpec, eps: float,
                    groups: Optional[Sequence[str]] = None,
                    randomize: bool = False) -> ThresholdSolution:
    """Best group-aware threshold policy with take-up gap ``E[T|a] - E[T|b] <= eps``.

    Parameters
    ----------
    ds : Dataset
        Rows over which value and gap are averaged.
    eta : NuisanceBundle
    cost : CostSpec
    eps : float
    groups : sequence of str, optional
        The groups (a, b); defaults to the dataset's two groups.
    randomize : bool
        Mix the two threshold rules around the dual breakpoint so that the gap
        equals ``eps``. The mixture attains the optimum over randomized policies,
        which a deterministic rule can miss when the breakpoint rows carry mass.

    Returns
    -------
    ThresholdSolution
        Unpacks as ``(lam, policy)``. The policy is a ``ThresholdPolicy``, or a
        ``RandomizedPolicy`` of two when ``randomize`` needed both.
    """
    return _solve(ds, eta, cost, eps, groups, False, randomize)


def solve_threshold_covariate_only(ds: Dataset, eta: NuisanceBundle, cost: CostSpec,
                                   eps: float, groups: Optional[Sequence[str]] = None,
                                   randomize: bool = False) -> ThresholdSolution:
    """As ``solve_threshold`` for rules that may not look at the group.

    The index is averaged over the group-membership probabilities p(a | x).
    """
    return _solve(ds, eta, cost, eps, groups, True, randomize)


def feasible_epsilon_range(ds: Dataset, eta: NuisanceBundle,
                           groups: Optional[Sequence[str]] = None) -> Tuple[float, float]:
    """Smallest and largest take-up gap any policy attains.

    The largest recommends group-a rows with positive lift and group-b rows with
    negative lift; the smallest does the reverse.
    """
    _, _, slope, delta0 = _terms(ds, eta, CostSpec(), groups, covariate_only=False)
    return feasible_range_from_terms(slope, delta0)


def sweep(ds: Dataset, eta: NuisanceBundle, cost: CostSpec, lam_grid,
          groups: Optional[Sequence[str]] = None, dr: bool = False) -> TradeoffCurve:
    """Evaluate the group-aware threshold policy at every penalty of ``lam_grid``.

    Parameters
    ----------
    lam_grid : array-like
        Nonempty, strictly increasing, nonnegative penalties.
    dr : bool
        Also compute the doubly-robust value.

    Returns
    -------
    TradeoffCurve
    """
    lam_grid = np.asarray(lam_grid, dtype=float).reshape(-1)
    if len(lam_grid) == 0:
        raise DomainError('the penalty grid is empty')
    if np.any(np.diff(lam_grid) <= 0):
        raise DomainError('the penalty grid must be strictly increasing')
    index, _, _, _ = _terms(ds, eta, cost, groups, covariate_only=False)
    a, b = index.groups
    points = []
    for lam in lam_grid:
        policy = ThresholdPolicy(lam, index, description=str(index))
        value = dm_value(ds, policy, eta, cost)
        takeup_a = dm_takeup(ds, policy, eta, a).point
        takeup_b = dm_takeup(ds, policy, eta, b).point
        extra = {}
        if dr:
            robust = dr_value(ds, policy, eta, cost)
            extra = {'dr_value': robust.point, 'dr_value_se': robust.standard_error}
        points.append(TradeoffPoint(float(lam), value.point, value.standard_error,
                                    takeup_a, takeup_b, takeup_a - takeup_b, **extra))
        logger.debug('lambda=%g value=%.6g disparity=%.6g', lam, value.point,
                     takeup_a - takeup_b)
    return TradeoffCurve(points, (a, b))
