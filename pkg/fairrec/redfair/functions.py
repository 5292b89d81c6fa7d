from collections import OrderedDict
import logging
from typing import Optional, Tuple, Union

import numpy as np
from sklearn.utils import check_random_state

from ..datasets import CostSpec, Dataset
from ..estimators import value_decomposition
from ..estimators.estimate import PSEUDO_OUTCOME_KINDS
from ..exceptions import DomainError
from ..nuisance import NuisanceBundle, NuisanceConfig, fit_nuisances
from .constraints import ConstraintSystem, augment, inflate_bound, value_moment
from .lagrangian import Lagrangian, POLICY_CLASSES
from .result import SaddleResult, TwoStageResult


logger = logging.getLogger(__name__)

LOG_ARGUMENT_FLOOR = 1e-12


class RedfairParams(object):
    """Settings of the saddle-point loop.

    Unset ``nu`` defaults to ``n^(-alpha)``, unset ``B`` to ``10 / nu`` and unset
    ``omega`` to ``1 / (2 ξ² n^(2 alpha))`` with ξ the largest constraint residual of
    the first best response.

    Parameters
    ----------
    B : float, optional
        Bound on the l1 norm of the multipliers.
    nu : float, optional
        Target saddle gap.
    omega : float, optional
        Step size of the multiplier updates.
    max_iter : int
    alpha : float
        Rate exponent of the sampled slacks and defaults, in (0, 1/2].
    slack_scale : float
        Multiplier of the sampled slack ``Σ_j |M_kj| n_j^(-alpha)``.
    seed : int
        Seed of the two-stage sample split.
    policy_class : str
        'tabular' or 'linear_index'.
    kind : str
        Pseudo-outcome of the value: 'DM', 'IPW' or 'DR'.
    lp_step : bool
        Also solve the game restricted to the policies found so far.
    """

    def __init__(self, B: Optional[float] = None, nu: Optional[float] = None,
                 omega: Optional[float] = None, max_iter: int = 100, alpha: float = 0.5,
                 slack_scale: float = 1.0, seed: int = 0, policy_class: str = 'tabular',
                 kind: str = 'DR', lp_step: bool = True):
        for name, value in (('B', B), ('nu', nu), ('omega', omega)):
            if value is not None and not value > 0:
                raise DomainError('%s must be positive, got %r' % (name, value))
        if max_iter < 1:
            raise DomainError('max_iter must be at least 1, got %r' % max_iter)
        if not 0 < alpha <= 0.5:
            raise DomainError('alpha must lie in (0, 0.5], got %r' % alpha)
        if slack_scale < 0:
            raise DomainError('slack_scale must be nonnegative, got %r' % slack_scale)
        if policy_class not in POLICY_CLASSES:
            raise DomainError('policy class must be one of %s, got %r'
                              % (', '.join(POLICY_CLASSES), policy_class))
        if kind not in PSEUDO_OUTCOME_KINDS:
            raise DomainError('kind must be one of %s, got %r'
                              % (', '.join(PSEUDO_OUTCOME_KINDS), kind))
        self.B = B
        self.nu = nu
        self.omega = omega
        self.max_iter = int(max_iter)
        self.alpha = float(alpha)
        self.slack_scale = float(slack_scale)
        self.seed = int(seed)
        self.policy_class = policy_class
        self.kind = kind
        self.lp_step = bool(lp_step)

    def resolve(self, n: int) -> Tuple[float, float]:
        """(nu, B) for a sample of size n."""
        nu = self.nu if self.nu is not None else float(n) ** -self.alpha
        B = self.B if self.B is not None else 10.0 / nu
        return nu, B

    def __repr__(self):
        return ('RedfairParams(B=%r, nu=%r, omega=%r, max_iter=%d, alpha=%r, '
                'slack_scale=%r, seed=%d, policy_class=%r, kind=%r, lp_step=%r)'
                % (self.B, self.nu, self.omega, self.max_iter, self.alpha, self.slack_scale,
                   self.seed, self.policy_class, self.kind, self.lp_step))


def multipliers(theta: np.ndarray, B: float) -> np.ndarray:
    """``B exp(θ) / (1 + Σ exp(θ))``, computed without overflow."""
    theta = np.asarray(theta, dtype=float)
    shift = max(0.0, float(np.max(theta))) if len(theta) else 0.0
    scaled = np.exp(theta - shift)
    return B * scaled / (np.exp(-shift) + scaled.sum())


def _trace_record(t: int, lam: np.ndarray, gap: float, value: float, violation: np.ndarray):
    record = OrderedDict([('iter', t)])
    record.update(('lambda_%d' % k, float(v)) for k, v in enumerate(lam))
    record['gap'] = gap
    record['value'] = value
    record.update(('violation_%d' % k, float(v)) for k, v in enumerate(violation))
    return record


def redfair(ds: Dataset, system: ConstraintSystem, eta: NuisanceBundle, cost: CostSpec,
            params: Optional[RedfairParams] = None) -> SaddleResult:
    """Approximately optimal randomized policy under ``M h(π) <= d + slack``.

    The multipliers follow multiplicative-weights updates, the policy player
    best-responds, and the running averages are the candidate saddle point. With
    ``lp_step`` the game restricted to the policies found so far is also solved as a
    linear program, and the candidate with the smaller gap is kept. The loop stops
    once the gap is at most ``nu``.

    Returns
    -------
    SaddleResult
        ``converged`` is False when the iteration budget ran out first.
    """
    params = RedfairParams() if params is None else params
    nu, B = params.resolve(ds.n)
    table = system.evaluate(ds, eta)
    bound = system.d + system.sampled_slack(table, params.alpha, params.slack_scale)
    lagr = Lagrangian(ds, eta, system, cost, bound, B, params.policy_class, params.kind)
    K = system.K

    if K == 0:
        key = lagr.best_response(np.zeros(0))
        weights = OrderedDict([(key, 1.0)])
        value, gamma = lagr.evaluate(weights)
        trace = [_trace_record(0, np.zeros(0), 0.0, value, np.zeros(0))]
        return SaddleResult(lagr.mixture(weights), np.zeros(0), 0.0, 1, trace, True, value,
                            gamma, bound, nu, B, weights, lagr)

    theta = np.zeros(K)
    lam_sum = np.zeros(K)
    counts = OrderedDict()  # type: OrderedDict
    omega = params.omega
    best = None
    trace = []
    converged = False
    t = 0
    for t in range(params.max_iter):
        lam = multipliers(theta, B)
        lam_sum += lam
        lam_avg = lam_sum / (t + 1)
        key = lagr.best_response(lam)
        counts[key] = counts.get(key, 0) + 1
        weights = OrderedDict((k, c / (t + 1)) for k, c in counts.items())
        result = lagr.eval_gap(weights, lam_avg)
        candidate = (result.gap(), weights, lam_avg, result)
        if params.lp_step and t > 0:
            lp_weights, lp_lam, lp_result = lagr.solve_linprog()
            if lp_result.gap() < candidate[0]:
                candidate = (lp_result.gap(), lp_weights, lp_lam, lp_result)
        if best is None or candidate[0] <= best[0]:
            best = candidate

        gap, _, _, result = candidate
        trace.append(_trace_record(t, lam, gap, result.value, result.gamma - bound))
        logger.debug('iteration %d: gap=%.6g value=%.6g max violation=%.6g policies=%d',
                     t, gap, result.value, float(np.max(result.gamma - bound)),
                     len(lagr.policies))
        if gap <= nu:
            converged = True
            break

        residual = lagr.gammas[key] - bound
        if omega is None:
            xi = float(np.max(np.abs(residual)))
            xi = xi if xi > 0 else 1.0
            omega = 1.0 / (2.0 * xi ** 2 * float(ds.n) ** (2 * params.alpha))
            logger.debug('step size %.6g from residual scale %.6g', omega, xi)
        theta += np.log(np.maximum(1.0 + omega * residual, LOG_ARGUMENT_FLOOR))

    gap, weights, lam, result = best
    if not converged:
        logger.warning('saddle loop stopped after %d iterations with gap %.6g > %.6g',
                       t + 1, gap, nu)
    logger.info('redfair: %d iterations, gap %.6g, value %.6g, %d best responses',
                t + 1, gap, result.value, lagr.n_best_responses)
    return SaddleResult(lagr.mixture(weights), lam, gap, t + 1, trace, converged,
                        result.value, result.gamma, bound, nu, B, weights, lagr)


def saddle_gap(result: SaddleResult) -> float:
    """Recompute the saddle gap of a result on the game it was solved on."""
    return result.lagrangian.eval_gap(result.weights, result.lam).gap()


def _stage_nuisances(nuisance: Union[NuisanceBundle, NuisanceConfig, None],
                     first: Dataset, second: Dataset
                     ) -> Tuple[NuisanceBundle, NuisanceBundle]:
    if isinstance(nuisance, NuisanceBundle):
        return nuisance, nuisance
    return fit_nuisances(first, nuisance), fit_nuisances(second, nuisance)


def two_stage(ds: Dataset, system: ConstraintSystem,
              nuisance: Union[NuisanceBundle, NuisanceConfig, None], cost: CostSpec,
              params: Optional[RedfairParams] = None) -> TwoStageResult:
    """Two-stage refinement that localizes the policy search around a pilot solution.

    The data is split in half. The first half yields a pilot ``Q̂1`` by ``redfair``. On
    the second half the bounds are inflated by the moment variances under ``Q̂1``,
    and the search is restricted to policies whose value is within ``eps_n`` of
    ``Q̂1`` and whose binding constraints move by at most ``eps_n``.

    Parameters
    ----------
    nuisance : NuisanceBundle or NuisanceConfig
        A bundle is used for both halves; a configuration is fitted on each half.

    Returns
    -------
    TwoStageResult
        Falls back to ``Q̂1`` when the second stage violates its constraints by more
        than ``(1 + 2 nu) / B``.
    """
    params = RedfairParams() if params is None else params
    if ds.n < 4:
        raise DomainError('two-stage refinement needs at least 4 rows, got %d' % ds.n)
    order = check_random_state(params.seed).permutation(ds.n)
    half = ds.n // 2
    first = ds.subset(np.sort(order[:half]))
    second = ds.subset(np.sort(order[half:]))
    eta1, eta2 = _stage_nuisances(nuisance, first, second)

    stage1 = redfair(first, system.with_eta(eta1), eta1, cost, params)
    system2 = system.with_eta(eta2)
    table = system2.evaluate(second, eta2)
    pi1 = stage1.Q.propensity(second)
    sigma2 = np.var(table.moment_scores(pi1), axis=1, ddof=1) if system.J else np.zeros(0)
    d_hat = inflate_bound(system.d, system.M, sigma2, ds.n, params.alpha) if system.K \
        else np.zeros(0)

    baseline, psi = value_decomposition(second, eta2, cost, params.kind)
    value_scores = baseline + pi1 * psi
    eps_n = 2.0 * float(np.std(value_scores, ddof=1)) * float(ds.n) ** -params.alpha
    pilot_value = float(np.mean(value_scores))
    h1 = table.moments(pi1)
    gamma1 = system.M @ h1
    binding = [k for k in range(system.K) if gamma1[k] >= d_hat[k] - eps_n]
    logger.info('two-stage: %d of %d rows binding, slice width %.6g', len(binding),
                system.K, eps_n)

    rows = [('slice %s' % system.row_names[k], np.r_[system.M[k], 0.0],
             eps_n + float(system.M[k] @ h1)) for k in binding]
    value_row = np.zeros(system.J + 1)
    value_row[-1] = 1.0
    rows.append(('value slice', value_row, eps_n - pilot_value))
    augmented = augment(system2, rows, [value_moment(cost, params.kind)], d_hat)

    stage2 = redfair(second, augmented, eta2, cost, params)
    fallback = stage2.max_violation > (1.0 + 2.0 * stage2.nu) / stage2.B
    if fallback:
        logger.warning('second stage violates its constraints by %.6g; keeping the '
                       'first-stage policy', stage2.max_violation)
    return TwoStageResult(stage1 if fallback else stage2, stage1, binding, sigma2, d_hat,
                          eps_n, fallback, pilot_value)
