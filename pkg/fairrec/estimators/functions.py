import logging
from typing import Dict, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..datasets import CostSpec, Dataset, Observation
from ..exceptions import DomainError, MonotonicityViolationError
from ..nuisance import NuisanceBundle, NuisancePredictions
from ..policies import BasePolicy
from ..utils import FLOAT_FORMAT, atomic_write_text
from .estimate import PseudoOutcome, PSEUDO_OUTCOME_KINDS, ValueEstimate


logger = logging.getLogger(__name__)

# Share of rows at the clip boundary above which an estimate carries an overlap flag.
OVERLAP_WARNING_SHARE = 0.05


def _boundary_share(values: np.ndarray, clip: float) -> float:
    if clip <= 0:
        return 0.0
    tol = 1e-12
    return float(np.mean((values <= clip + tol) | (values >= 1 - clip - tol)))


def _overlap_warnings(values: np.ndarray, clip: float, what: str):
    share = _boundary_share(values, clip)
    if share > OVERLAP_WARNING_SHARE:
        message = '%s overlap: %.1f%% of rows at the clip boundary %g' % (
            what, 100 * share, clip)
        logger.warning(message)
        return [message]
    return []


def _utility_terms(pred: NuisancePredictions, cost: CostSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Regression utility ``m_r`` of recommending r, for r = 0 and r = 1."""
    tau_u = cost.treatment_effect(pred.mu1, pred.mu0)
    base = cost.w_y * pred.mu0
    return base + pred.p10 * tau_u, base + cost.w_r + pred.p11 * tau_u


def _observed_utility(ds: Dataset, cost: CostSpec) -> np.ndarray:
    return cost.utility(ds.r, ds.t, ds.y)


def dm_value(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
             cost: CostSpec) -> ValueEstimate:
    """Direct-method (regression adjustment) policy value.

    The score of a row is ``Σ_r π_r Σ_t p_{t|r} (w_y μ_t + w_t t + w_r r)``.
    """
    pred = eta.predict(ds)
    pi1 = policy.propensity(ds)
    m0, m1 = _utility_terms(pred, cost)
    return ValueEstimate((1 - pi1) * m0 + pi1 * m1, name='DM')


def ipw_value(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
              cost: CostSpec) -> ValueEstimate:
    """Inverse-propensity-weighted value ``Σ_r π_r 1{R=r} u / e_r``."""
    pred = eta.predict(ds)
    pi1 = policy.propensity(ds)
    u = _observed_utility(ds, cost)
    weight = np.where(ds.r == 1, pi1, 1 - pi1) / pred.e(ds.r)
    return ValueEstimate(weight * u, name='IPW',
                         warnings=_overlap_warnings(pred.e1, eta.clip, 'recommendation'))


def dr_value(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
             cost: CostSpec) -> ValueEstimate:
    """Doubly-robust policy value.

    The score of a row is ``Σ_r π_r [m_r + 1{R=r} (u - m_r) / e_r]`` where ``m_r`` is
    the regression utility of recommending r. It is unbiased when either the
    recommendation propensities or the outcome and take-up regressions are correct.
    """
    pred = eta.predict(ds)
    pi1 = policy.propensity(ds)
    m0, m1 = _utility_terms(pred, cost)
    u = _observed_utility(ds, cost)
    m_observed = np.where(ds.r == 1, m1, m0)
    pi_observed = np.where(ds.r == 1, pi1, 1 - pi1)
    scores = (1 - pi1) * m0 + pi1 * m1 + pi_observed * (u - m_observed) / pred.e(ds.r)
    return ValueEstimate(scores, name='DR',
                         warnings=_overlap_warnings(pred.e1, eta.clip, 'recommendation'))


def cv_value(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
             cost: CostSpec) -> ValueEstimate:
    """Control-variate value needing treatment overlap only.

    The score of a row is ``Σ_{r,t} π_r p_{t|r} [ũ_rt + 1{T=t} (u_rt(y) - ũ_rt) / p_t]``
    where ``ũ_rt`` uses ``μ_t`` in place of the outcome. The recommendation
    propensity never enters.
    """
    pred = eta.predict(ds)
    pi1 = policy.propensity(ds)
    m0, m1 = _utility_terms(pred, cost)
    # Only the observed t has a nonzero residual; the r terms share it.
    residual = cost.w_y * (ds.y - pred.mu(ds.t)) / pred.p(ds.t)
    takeup_observed = (1 - pi1) * np.where(ds.t == 1, pred.p10, 1 - pred.p10) \
        + pi1 * np.where(ds.t == 1, pred.p11, 1 - pred.p11)
    scores = (1 - pi1) * m0 + pi1 * m1 + takeup_observed * residual
    return ValueEstimate(scores, name='CV',
                         warnings=_overlap_warnings(pred.p1, eta.clip, 'treatment'))


def _group_rows(ds: Dataset, group: str) -> np.ndarray:
    rows = ds.group_mask(group)
    if not rows.any():
        raise DomainError('group %r has no rows in the dataset' % group)
    return rows


def _takeup_scores(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
                   doubly_robust: bool) -> Tuple[np.ndarray, NuisancePredictions]:
    pred = eta.predict(ds)
    pi1 = policy.propensity(ds)
    scores = pred.p10 + pi1 * pred.lift
    if doubly_robust:
        pi_observed = np.where(ds.r == 1, pi1, 1 - pi1)
        scores = scores + pi_observed * (ds.t - pred.takeup(ds.r)) / pred.e(ds.r)
    return scores, pred


def dm_takeup(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
              group: str) -> ValueEstimate:
    """Plug-in take-up ``E[T(π) | A=group] = mean_a[p_{1|0} + π_1 (p_{1|1} - p_{1|0})]``."""
    rows = _group_rows(ds, group)
    scores, _ = _takeup_scores(ds, policy, eta, doubly_robust=False)
    return ValueEstimate(scores[rows], name='DM takeup %s' % group)


def dr_takeup(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
              group: str) -> ValueEstimate:
    """Doubly-robust take-up ``E[T(π) | A=group]``, scored on the rows of that group."""
    rows = _group_rows(ds, group)
    scores, pred = _takeup_scores(ds, policy, eta, doubly_robust=True)
    return ValueEstimate(scores[rows], name='DR takeup %s' % group,
                         warnings=_overlap_warnings(pred.e1[rows], eta.clip,
                                                    'recommendation'))


def group_contrast_weights(ds: Dataset, a: str, b: str) -> np.ndarray:
    """``1{A=a} / p̂(a) - 1{A=b} / p̂(b)`` with empirical group frequencies.

    The mean of ``s * w`` over the dataset is the difference of the group means of s.
    """
    in_a = _group_rows(ds, a)
    in_b = _group_rows(ds, b)
    return in_a / in_a.mean() - in_b / in_b.mean()


def disparity(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle, a: str, b: str,
              doubly_robust: bool = False) -> ValueEstimate:
    """Take-up gap ``E[T(π) | A=a] - E[T(π) | A=b]``.

    The per-observation scores are the take-up scores reweighted by
    ``group_contrast_weights`` so the standard error covers both groups.
    """
    scores, _ = _takeup_scores(ds, policy, eta, doubly_robust=doubly_robust)
    name = '%s disparity %s-%s' % ('DR' if doubly_robust else 'DM', a, b)
    return ValueEstimate(scores * group_contrast_weights(ds, a, b), name=name)


def pseudo_outcomes(ds: Dataset, eta: NuisanceBundle, kind: str,
                    cost: CostSpec = None) -> PseudoOutcome:
    """Pseudo-outcomes for the classification reduction.

    Each kind has conditional mean ``E[u | R=1, x, a] - E[u | R=0, x, a]``:

    * DM: ``(p_{1|1} - p_{1|0}) τ_u + w_r`` with ``τ_u = w_y (μ_1 - μ_0) + w_t``
    * IPW: ``(2R - 1) u / e_R``
    * DR: ``ψ_DM + (2R - 1) (u - m_R) / e_R``
    """
    if kind not in PSEUDO_OUTCOME_KINDS:
        raise DomainError('pseudo-outcome kind must be one of %s, got %r'
                          % (', '.join(PSEUDO_OUTCOME_KINDS), kind))
    cost = CostSpec() if cost is None else cost
    pred = eta.predict(ds)
    m0, m1 = _utility_terms(pred, cost)
    psi_dm = m1 - m0
    if kind == 'DM':
        return PseudoOutcome(kind, psi_dm)
    u = _observed_utility(ds, cost)
    sign = 2 * ds.r - 1
    if kind == 'IPW':
        return PseudoOutcome(kind, sign * u / pred.e(ds.r))
    m_observed = np.where(ds.r == 1, m1, m0)
    return PseudoOutcome(kind, psi_dm + sign * (u - m_observed) / pred.e(ds.r))


def pseudo_outcome(row: Observation, eta: NuisanceBundle, kind: str,
                   cost: CostSpec = None) -> float:
    """Pseudo-outcome of a single observation; see ``pseudo_outcomes``."""
    ds = Dataset([row.x], [row.a], [row.r], [row.t], [row.y], group_set=eta.group_set)
    return float(pseudo_outcomes(ds, eta, kind, cost).values[0])


def value_decomposition(ds: Dataset, eta: NuisanceBundle, cost: CostSpec,
                        kind: str = 'DR') -> Tuple[np.ndarray, np.ndarray]:
    """Split an estimator's scores into a policy-free part and a pseudo-outcome.

    For every policy, the estimator of ``kind`` scores row i as
    ``baseline_i + π_1(x_i, a_i) ψ_i``.

    Returns
    -------
    (baseline, psi) : tuple of np.ndarray
    """
    psi = pseudo_outcomes(ds, eta, kind, cost).values
    pred = eta.predict(ds)
    m0, _ = _utility_terms(pred, cost)
    if kind == 'DM':
        return m0, psi
    u = _observed_utility(ds, cost)
    untreated = (1 - ds.r) / (1 - pred.e1)
    if kind == 'IPW':
        return untreated * u, psi
    return m0 + untreated * (u - m0), psi


def responder_takeup(ds: Dataset, policy: BasePolicy, eta: NuisanceBundle,
                     group: str) -> ValueEstimate:
    """Take-up among responders, ``E[T(π) | Y(1) > Y(0), A=group]``.

    Under monotonicity the ratio of ``mean_a[Σ_r π_r p_{1|r} (μ_1 - μ_0)]`` to
    ``mean_a[μ_1 - μ_0]``. The scores are the linearization of the ratio, so their
    mean is the ratio and their spread gives a delta-method standard error.

    Raises
    ------
    DomainError
        If the outcome is not binary.
    MonotonicityViolationError
        If ``mean_a[μ_1 - μ_0]`` is not positive.
    """
    if not ds.is_binary_outcome():
        raise DomainError('responder take-up needs a binary outcome')
    rows = _group_rows(ds, group)
    pred = eta.predict(ds)
    pi1 = policy.propensity(ds)
    effect = (pred.mu1 - pred.mu0)[rows]
    numerator = ((pred.p10 + pi1 * pred.lift)[rows]) * effect
    denominator = float(np.mean(effect))
    if denominator <= 0:
        raise MonotonicityViolationError(
            'mean treatment effect in group %s is %g; responders are not identified'
            % (group, denominator))
    point = float(np.mean(numerator)) / denominator
    scores = point + (numerator - point * effect) / denominator
    return ValueEstimate(scores, name='responder takeup %s' % group)


def export_estimates(estimates: Union[Dict[str, ValueEstimate],
                                      Sequence[Tuple[str, ValueEstimate]]],
                     output_path: str) -> None:
    """Write estimates as CSV rows ``estimator,point,se,n``."""
    items = estimates.items() if isinstance(estimates, dict) else estimates
    frame = pd.DataFrame([(name, e.point, e.standard_error, e.n) for name, e in items],
                         columns=['estimator', 'point', 'se', 'n'])
    atomic_write_text(output_path,
                      frame.to_csv(index=False, float_format=FLOAT_FORMAT))
