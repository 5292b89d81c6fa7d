import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..datasets import CostSpec, Dataset
from ..estimators import value_decomposition
from ..exceptions import DomainError, MonotonicityViolationError
from ..nuisance import NuisanceBundle


logger = logging.getLogger(__name__)


class Moment(object):
    """Conditional moment ``h_j(π) = E[π_1 G1 + G0 | event]``.

    Parameters
    ----------
    name : str
    event : callable
        ``event(ds)`` returns the boolean rows of the conditioning event. It must not
        depend on the policy.
    integrand : callable
        ``integrand(ds, eta)`` returns per-row arrays (G1, G0).
    """

    def __init__(self, name: str,
                 event: Callable[[Dataset], np.ndarray],
                 integrand: Callable[[Dataset, NuisanceBundle], Tuple[np.ndarray, np.ndarray]]):
        self.name = name
        self.event = event
        self.integrand = integrand

    def __repr__(self):
        return 'Moment(%r)' % self.name


class MomentTable(object):
    """Moments of one dataset, linear in the per-row recommendation probability.

    ``h(π) = h0 + coef @ π_1 / n``, where ``coef[j, i] = 1{i in event j} G1_i / p_j``.
    """

    def __init__(self, coef: np.ndarray, h0: np.ndarray, counts: np.ndarray,
                 masks: np.ndarray, g1: np.ndarray, g0: np.ndarray):
        self.coef = coef
        self.h0 = h0
        self.counts = counts
        self.masks = masks
        self.g1 = g1
        self.g0 = g0

    @property
    def n(self) -> int:
        return self.coef.shape[1]

    @property
    def probabilities(self) -> np.ndarray:
        """Empirical event probabilities p_j."""
        return self.counts / self.n

    def moments(self, pi1: np.ndarray) -> np.ndarray:
        return self.h0 + self.coef @ pi1 / self.n

    def moment_scores(self, pi1: np.ndarray) -> np.ndarray:
        """Per-row ``1{event} g_j / p_j``, shape (J, n); row means are the moments."""
        return self.masks * (pi1[None, :] * self.g1 + self.g0) / self.probabilities[:, None]


class ConstraintSystem(object):
    """Linear constraints ``M h(π) <= d`` over conditional moments.

    Parameters
    ----------
    moments : list of Moment
        The J moments.
    M : array-like, shape (K, J)
    d : array-like, shape (K,)
    eta : NuisanceBundle
        Nuisances the moment integrands are evaluated with.
    slack : array-like, optional
        Fixed per-row slack. When absent, ``redfair`` uses
        ``slack_scale * Σ_j |M_kj| n_j^(-alpha)``.
    row_names : list of str, optional
    """

    def __init__(self, moments: Sequence[Moment], M, d, eta: NuisanceBundle,
                 slack=None, row_names: Optional[Sequence[str]] = None):
        self.moments = list(moments)
        M = np.asarray(M, dtype=float)
        if M.size == 0:
            M = M.reshape(0, len(self.moments))
        d = np.asarray(d, dtype=float).reshape(-1)
        if M.ndim != 2 or M.shape[1] != len(self.moments):
            raise DomainError('M has shape %s for %d moments' % (M.shape, len(self.moments)))
        if len(d) != M.shape[0]:
            raise DomainError('d has %d entries for %d constraint rows' % (len(d), M.shape[0]))
        if slack is not None:
            slack = np.asarray(slack, dtype=float).reshape(-1)
            if len(slack) != M.shape[0] or np.any(slack < 0):
                raise DomainError('slack needs one nonnegative entry per constraint row')
        self.M = M
        self.d = d
        self.eta = eta
        self.slack = slack
        self.row_names = list(row_names) if row_names is not None else \
            ['c%d' % k for k in range(M.shape[0])]

    @property
    def K(self) -> int:
        return self.M.shape[0]

    @property
    def J(self) -> int:
        return self.M.shape[1]

    def with_eta(self, eta: NuisanceBundle) -> 'ConstraintSystem':
        return ConstraintSystem(self.moments, self.M, self.d, eta, self.slack, self.row_names)

    def evaluate(self, ds: Dataset, eta: Optional[NuisanceBundle] = None) -> MomentTable:
        """Moment table of ``ds``.

        Raises
        ------
        DomainError
            If an event matches no row.
        """
        eta = self.eta if eta is None else eta
        masks = np.zeros((self.J, ds.n))
        g1 = np.zeros((self.J, ds.n))
        g0 = np.zeros((self.J, ds.n))
        for j, moment in enumerate(self.moments):
            mask = np.asarray(moment.event(ds), dtype=bool)
            if not mask.any():
                raise DomainError('the event of moment %s matches no row' % moment.name)
            masks[j] = mask
            g1[j], g0[j] = moment.integrand(ds, eta)
        counts = masks.sum(axis=1)
        p = counts / ds.n
        coef = masks * g1 / p[:, None]
        h0 = np.mean(masks * g0, axis=1) / p
        return MomentTable(coef, h0, counts, masks, g1, g0)

    def sampled_slack(self, table: MomentTable, alpha: float, scale: float) -> np.ndarray:
        """``scale * Σ_j |M_kj| n_j^(-alpha)``, or the fixed slack when set."""
        if self.slack is not None:
            return self.slack
        return scale * np.abs(self.M) @ (table.counts ** -alpha)

    def __str__(self):
        header = "Constraint System"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = [("Moments", ', '.join(m.name for m in self.moments)),
                  ("Rows", self.K),
                  ("Bounds", ', '.join('%g' % v for v in self.d))]
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body


def _group_event(group: str):
    def event(ds):
        return ds.group_mask(group)
    return event


def _all_rows(ds):
    return np.ones(ds.n, dtype=bool)


def _takeup_integrand(ds, eta):
    pred = eta.predict(ds)
    return pred.lift, pred.p10


def _responder_integrand(rows_of):
    """Take-up weighted by the treatment effect, normalized over the event rows."""
    def integrand(ds, eta):
        if not ds.is_binary_outcome():
            raise DomainError('responder moments need a binary outcome')
        pred = eta.predict(ds)
        effect = pred.mu1 - pred.mu0
        rows = rows_of(ds)
        denominator = float(np.mean(effect[rows]))
        if denominator <= 0:
            raise MonotonicityViolationError(
                'mean treatment effect over the event is %g; responders are not '
                'identified' % denominator)
        return pred.lift * effect / denominator, pred.p10 * effect / denominator
    return integrand


def _parity_system(groups: Sequence[str], eta: NuisanceBundle, d: float,
                   integrand_for, min_groups: int) -> ConstraintSystem:
    groups = list(groups)
    if len(groups) < min_groups:
        raise DomainError('parity needs at least %d groups, got %r' % (min_groups, groups))
    moments = [Moment(a, _group_event(a), integrand_for(_group_event(a))) for a in groups]
    moments.append(Moment('all', _all_rows, integrand_for(_all_rows)))
    G = len(groups)
    M = np.zeros((2 * G, G + 1))
    names = []
    for i, a in enumerate(groups):
        M[2 * i, i], M[2 * i, G] = 1.0, -1.0
        M[2 * i + 1, i], M[2 * i + 1, G] = -1.0, 1.0
        names += ['%s,+' % a, '%s,-' % a]
    return ConstraintSystem(moments, M, np.full(2 * G, float(d)), eta, row_names=names)


def make_treatment_parity(groups: Sequence[str], eta: NuisanceBundle,
                          d: float) -> ConstraintSystem:
    """Every group's take-up within ``d`` of the overall take-up.

    Moments are ``E[T(π) | A=a]`` per group and ``E[T(π)]``; each group contributes
    the pair of rows ``±(h_a - h_all) <= d``.
    """
    return _parity_system(groups, eta, d, lambda rows_of: _takeup_integrand, min_groups=2)


def make_responder_parity(groups: Sequence[str], eta: NuisanceBundle,
                          d: float) -> ConstraintSystem:
    """Take-up among responders of every group within ``d`` of the overall rate."""
    return _parity_system(groups, eta, d, _responder_integrand, min_groups=1)


def make_takeup_gap(groups: Sequence[str], eta: NuisanceBundle, eps: float) -> ConstraintSystem:
    """The one-sided gap ``E[T(π) | A=a] - E[T(π) | A=b] <= eps`` as a single row."""
    groups = list(groups)
    if len(groups) != 2:
        raise DomainError('the take-up gap is defined for two groups, got %r' % groups)
    moments = [Moment(a, _group_event(a), _takeup_integrand) for a in groups]
    return ConstraintSystem(moments, [[1.0, -1.0]], [eps], eta,
                            row_names=['%s-%s' % tuple(groups)])


def make_unconstrained(eta: NuisanceBundle) -> ConstraintSystem:
    """A system without constraint rows."""
    return ConstraintSystem([], np.zeros((0, 0)), [], eta)


def value_moment(cost: CostSpec, kind: str) -> Moment:
    """Moment whose value is minus the estimated policy value."""
    def integrand(ds, eta):
        baseline, psi = value_decomposition(ds, eta, cost, kind)
        return -psi, -baseline
    return Moment('value', _all_rows, integrand)


def inflate_bound(d, M, sigma2, n: int, alpha: float) -> np.ndarray:
    """``d + 2 Σ_j |M_kj| σ²_j n^(-alpha)``."""
    return np.asarray(d, dtype=float) \
        + 2.0 * np.abs(np.asarray(M, dtype=float)) @ np.asarray(sigma2, dtype=float) \
        * float(n) ** -alpha


def augment(system: ConstraintSystem, extra_rows: List[Tuple[str, np.ndarray, float]],
            extra_moments: Sequence[Moment], bound: np.ndarray) -> ConstraintSystem:
    """Block system with ``system``'s rows bounded by ``bound`` plus extra rows.

    Each extra row is (name, coefficients over the original and extra moments, bound).
    The slack of the result is zero.
    """
    moments = system.moments + list(extra_moments)
    J = len(moments)
    M = np.zeros((system.K + len(extra_rows), J))
    M[:system.K, :system.J] = system.M
    d = np.r_[np.asarray(bound, dtype=float), [b for _, _, b in extra_rows]]
    for k, (_, coefficients, _) in enumerate(extra_rows):
        M[system.K + k, :len(coefficients)] = coefficients
    names = system.row_names + [name for name, _, _ in extra_rows]
    return ConstraintSystem(moments, M, d, system.eta, slack=np.zeros(len(d)),
                            row_names=names)
