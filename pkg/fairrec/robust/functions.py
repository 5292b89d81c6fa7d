import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import fairrec.config as config
from ..datasets import CostSpec, Dataset
from ..estimators import group_contrast_weights
from ..exceptions import DomainError, InfeasibleError, UnsupportedModeError
from ..nuisance import NuisanceBundle, NuisancePredictions
from ..policies import BasePolicy, ThresholdPolicy
from ..threshold.functions import (
    ThresholdSolution,
    feasible_range_from_terms,
    solve_index,
    _two_groups,
)
from ..utils import FLOAT_FORMAT, atomic_write_text
from .uncertainty import OverlapPartition, UncertaintySet


logger = logging.getLogger(__name__)


def detect_overlap(ds: Dataset, eta: NuisanceBundle,
                   threshold: Optional[float] = None) -> OverlapPartition:
    """Flag rows lacking recommendation overlap.

    Row i lacks overlap for r when its predicted ``e_r`` is at most ``threshold`` (a
    positive threshold only) or when no row of its group received r.

    Parameters
    ----------
    threshold : float, optional
        Defaults to ``fairrec.config.overlap_threshold``.
    """
    threshold = config.overlap_threshold if threshold is None else threshold
    if threshold < 0:
        raise DomainError('overlap threshold must be nonnegative, got %g' % threshold)
    pred = eta.predict(ds)
    nov = np.zeros((ds.n, 2), dtype=bool)
    for r in (0, 1):
        if threshold > 0:
            nov[:, r] = pred.e(r) <= threshold
        for a in ds.group_set:
            rows = ds.group_mask(a)
            if rows.any() and not np.any(rows & (ds.r == r)):
                nov[rows, r] = True
    part = OverlapPartition(nov)
    if not part.is_empty:
        logger.warning('%d of %d rows lack recommendation overlap', int((~part.ov).sum()),
                       ds.n)
    return part


def _check_partition(ds: Dataset, part: OverlapPartition):
    if part.n != ds.n:
        raise DomainError('overlap partition has %d rows, dataset has %d' % (part.n, ds.n))


def _fitted(pred: NuisancePredictions) -> np.ndarray:
    return np.column_stack([pred.p10, pred.p11])


def _replace(fitted: np.ndarray, part: OverlapPartition, q: np.ndarray) -> np.ndarray:
    """Responsivities with ``q`` on rows lacking overlap, shape (n, 2)."""
    return np.where(part.nov, q, fitted)


def _value_terms(pred: NuisancePredictions, cost: CostSpec, responsivity: np.ndarray):
    tau_u = cost.treatment_effect(pred.mu1, pred.mu0)
    m0 = cost.w_y * pred.mu0 + responsivity[:, 0] * tau_u
    m1 = cost.w_y * pred.mu0 + cost.w_r + responsivity[:, 1] * tau_u
    return m0, m1, tau_u


def plugin_value(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle, q,
                 part: OverlapPartition, cost: CostSpec) -> float:
    """Regression value of ``policy`` with responsivities ``q`` where overlap fails.

    ``q`` is a scalar, a per-r pair or an (n, 2) array.
    """
    _check_partition(ds, part)
    pred = eta.predict(ds)
    q = np.broadcast_to(np.asarray(q, dtype=float), (ds.n, 2)) \
        if np.ndim(q) < 2 else np.asarray(q, dtype=float)
    m0, m1, _ = _value_terms(pred, cost, _replace(_fitted(pred), part, q))
    pi1 = policy.propensity(ds)
    return float(np.mean((1 - pi1) * m0 + pi1 * m1))


def _check_mode(uncertainty: UncertaintySet):
    if uncertainty.mode == 'lipschitz':
        raise UnsupportedModeError('Lipschitz uncertainty sets are not supported by the '
                                   'robust bounds; use interval or constant bounds')


def value_bounds(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
                 uncertainty: UncertaintySet, part: OverlapPartition,
                 cost: CostSpec) -> Tuple[float, float]:
    """Smallest and largest value of ``policy`` over all responsivities in the set.

    The value is linear in each ``q_r(x, a)`` with coefficient ``π_r τ_u``, so each
    bound picks an endpoint row by row.
    """
    _check_mode(uncertainty)
    _check_partition(ds, part)
    pred = eta.predict(ds)
    fitted = _fitted(pred)
    lo, hi = uncertainty.bounds(ds.n, fitted)
    pi1 = policy.propensity(ds)
    tau_u = cost.treatment_effect(pred.mu1, pred.mu0)
    coefficient = np.column_stack([1 - pi1, pi1]) * tau_u[:, None]
    q_upper = np.where(coefficient >= 0, hi, lo)
    q_lower = np.where(coefficient >= 0, lo, hi)
    return (plugin_value(ds, policy, eta, q_lower, part, cost),
            plugin_value(ds, policy, eta, q_upper, part, cost))


def binary_constant_bound(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
                          lower: float, upper: float, part: OverlapPartition,
                          cost: CostSpec) -> Tuple[float, float]:
    """Value bounds for binary outcomes when every unidentified responsivity lies in
    the constant interval ``[lower, upper]``.

    Raises
    ------
    DomainError
        If the outcome is not binary or the bounds are out of order.
    """
    if not ds.is_binary_outcome():
        raise DomainError('constant bounds are derived for binary outcomes')
    return value_bounds(ds, policy, eta, UncertaintySet(lower, upper, mode='constant'),
                        part, cost)


def robust_lp_objective(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
                        uncertainty: UncertaintySet, part: OverlapPartition,
                        cost: CostSpec) -> float:
    """Worst-case value of ``policy``: the plug-in value at the interval midpoints
    minus ``mean(Σ_r π_r |τ_u| ΔB_r / 2)`` over rows lacking overlap for r.
    """
    _check_mode(uncertainty)
    _check_partition(ds, part)
    pred = eta.predict(ds)
    lo, hi = uncertainty.bounds(ds.n, _fitted(pred))
    mid = 0.5 * (lo + hi)
    width = hi - lo
    pi1 = policy.propensity(ds)
    tau_u = cost.treatment_effect(pred.mu1, pred.mu0)
    pi = np.column_stack([1 - pi1, pi1])
    penalty = 0.5 * np.sum(pi * width * part.nov, axis=1) * np.abs(tau_u)
    return plugin_value(ds, policy, eta, mid, part, cost) - float(np.mean(penalty))


def _constraint_terms(ds: Dataset, eta: NuisanceBundle, uncertainty: UncertaintySet,
                      part: OverlapPartition, a: str, b: str):
    """Worst-case take-up gap as ``delta0 + mean(π_1 slope)``.

    Group-a rows take the upper bound and group-b rows the lower bound.
    """
    pred = eta.predict(ds)
    fitted = _fitted(pred)
    lo, hi = uncertainty.bounds(ds.n, fitted)
    in_a = ds.group_mask(a)[:, None]
    adversarial = np.where(in_a, hi, lo)
    responsivity = _replace(fitted, part, adversarial)
    weights = group_contrast_weights(ds, a, b)
    slope = (responsivity[:, 1] - responsivity[:, 0]) * weights
    return slope, float(np.mean(responsivity[:, 0] * weights))


def robust_disparity(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
                     uncertainty: UncertaintySet, part: OverlapPartition,
                     groups: Optional[Sequence[str]] = None) -> float:
    """Largest take-up gap ``E[T|a] - E[T|b]`` of ``policy`` over the set."""
    _check_mode(uncertainty)
    _check_partition(ds, part)
    a, b = _two_groups(ds.group_set, groups)
    slope, delta0 = _constraint_terms(ds, eta, uncertainty, part, a, b)
    return float(delta0 + np.mean(policy.propensity(ds) * slope))


def robust_feasible_range(ds: Dataset, eta: NuisanceBundle, uncertainty: UncertaintySet,
                          part: OverlapPartition,
                          groups: Optional[Sequence[str]] = None) -> Tuple[float, float]:
    """Range of worst-case take-up gaps over deterministic policies."""
    _check_mode(uncertainty)
    _check_partition(ds, part)
    a, b = _two_groups(ds.group_set, groups)
    slope, delta0 = _constraint_terms(ds, eta, uncertainty, part, a, b)
    return feasible_range_from_terms(slope, delta0)


class RobustIndex(object):
    """Robust Lagrangian index ``base - λ slope``.

    ``base`` is the worst-case utility lift of recommending and ``slope`` the
    worst-case take-up lift weighted by the group contrast. On the training rows the
    stored overlap partition is used; other data is screened with ``detect_overlap``,
    which needs bounds that do not depend on the row.
    """

    def __init__(self, eta: NuisanceBundle, cost: CostSpec, uncertainty: UncertaintySet,
                 groups: Tuple[str, str], group_freq, training: Dataset,
                 part: OverlapPartition, threshold: Optional[float] = None):
        self.eta = eta
        self.cost = cost
        self.uncertainty = uncertainty
        self.groups = tuple(groups)
        self.group_freq = dict(group_freq)
        self.training_fingerprint = training.fingerprint()
        self.part = part
        self.threshold = threshold

    def _partition(self, ds: Dataset) -> OverlapPartition:
        if ds.n == self.part.n and ds.fingerprint() == self.training_fingerprint:
            return self.part
        if not self.uncertainty.is_pointwise_constant:
            raise DomainError('row-wise bounds only describe the training rows')
        return detect_overlap(ds, self.eta, self.threshold)

    def terms(self, ds: Dataset) -> Tuple[np.ndarray, np.ndarray]:
        part = self._partition(ds)
        pred = self.eta.predict(ds)
        fitted = _fitted(pred)
        lo, hi = self.uncertainty.bounds(ds.n, fitted)
        tau_u = self.cost.treatment_effect(pred.mu1, pred.mu0)
        worst = np.where((tau_u >= 0)[:, None], lo, hi)
        value_resp = _replace(fitted, part, worst)
        base = (value_resp[:, 1] - value_resp[:, 0]) * tau_u + self.cost.w_r

        a, b = self.groups
        labels = ds.groups
        in_a = (labels == a)[:, None]
        constraint_resp = _replace(fitted, part, np.where(in_a, hi, lo))
        weights = np.where(labels == a, 1.0 / self.group_freq[a],
                           np.where(labels == b, -1.0 / self.group_freq[b], 0.0))
        slope = (constraint_resp[:, 1] - constraint_resp[:, 0]) * weights
        return base, slope

    def __call__(self, ds: Dataset, lam: float) -> np.ndarray:
        base, slope = self.terms(ds)
        return base - lam * slope

    def __str__(self):
        return 'robust lift*tau_u + w_r - lambda*lift*(1{A=%s}/p - 1{A=%s}/p) over %r' % (
            self.groups[0], self.groups[1], self.uncertainty)


def solve_robust_threshold(ds: Dataset, eta: NuisanceBundle, uncertainty: UncertaintySet,
                           part: OverlapPartition, cost: CostSpec, eps: float,
                           groups: Optional[Sequence[str]] = None) -> ThresholdSolution:
    """Threshold policy maximizing the worst-case value subject to the worst-case
    take-up gap ``E[T|a] - E[T|b] <= eps``.

    The adversarial responsivities of the value and of the constraint are chosen
    separately, so the solution is conservative for both.

    Returns
    -------
    ThresholdSolution
        ``value`` is the worst-case value and ``disparity`` the worst-case gap.

    Raises
    ------
    UnsupportedModeError
        For Lipschitz uncertainty sets.
    InfeasibleError
        If no policy meets the gap for every responsivity in the set.
    """
    _check_mode(uncertainty)
    _check_partition(ds, part)
    a, b = _two_groups(ds.group_set, groups)
    index = RobustIndex(eta, cost, uncertainty, (a, b), ds.group_frequencies(), ds, part)
    base, slope = index.terms(ds)
    _, delta0 = _constraint_terms(ds, eta, uncertainty, part, a, b)
    try:
        lam = solve_index(base, slope, delta0, eps)
    except InfeasibleError as e:
        raise InfeasibleError('no policy has a worst-case take-up gap of at most %g' % eps,
                              feasible_range=e.feasible_range)
    policy = ThresholdPolicy(lam, index, description=str(index))
    solution = ThresholdSolution(lam, policy,
                                 robust_lp_objective(ds, policy, eta, uncertainty, part, cost),
                                 robust_disparity(ds, policy, eta, uncertainty, part, (a, b)),
                                 eps)
    logger.info('robust threshold solution at eps=%g: lambda=%.9g, worst-case value=%.6g',
                eps, lam, solution.value)
    return solution


def export_bounds(records: Sequence[Tuple[str, float, float, float, str]],
                  output_path: str) -> None:
    """Write bounds as CSV rows ``policy,lower,upper,eps,mode``."""
    frame = pd.DataFrame(list(records), columns=['policy', 'lower', 'upper', 'eps', 'mode'])
    atomic_write_text(output_path, frame.to_csv(index=False, float_format=FLOAT_FORMAT))
