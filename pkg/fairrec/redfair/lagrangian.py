from collections import OrderedDict
import logging
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.optimize as opt

import fairrec.config as config
from ..datasets import CostSpec, Dataset
from ..estimators import value_decomposition
from ..exceptions import DomainError
from ..nuisance import NuisanceBundle, fit_logistic
from ..policies import (
    BasePolicy,
    ConstantPolicy,
    LinearIndexPolicy,
    RandomizedPolicy,
    TabularPolicy,
    linear_features,
)
from ..utils import md5_of_arrays
from .constraints import ConstraintSystem, MomentTable


logger = logging.getLogger(__name__)

POLICY_CLASSES = ('tabular', 'linear_index')


def lagrangian_weights(ds: Dataset, eta: NuisanceBundle, lam, system: ConstraintSystem,
                       kind: str = 'DR', cost: Optional[CostSpec] = None,
                       table: Optional[MomentTable] = None
                       ) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted-classification form of the Lagrangian at multipliers ``lam``.

    ``ψ̃ = ψ - Σ_j (Mᵀλ)_j 1{event j} G1_j / p_j``, where ψ is the pseudo-outcome of
    ``kind``. Recommending row i changes the Lagrangian by ``-ψ̃_i / n``.

    Returns
    -------
    (weights, labels)
        ``|ψ̃|`` and ``sign(ψ̃)`` with ``sign(0) = -1``.
    """
    cost = CostSpec() if cost is None else cost
    table = system.evaluate(ds, eta) if table is None else table
    _, psi = value_decomposition(ds, eta, cost, kind)
    psi_tilde = _adjusted(psi, table, system, lam)
    return np.abs(psi_tilde), np.where(psi_tilde > 0, 1, -1)


def _adjusted(psi: np.ndarray, table: MomentTable, system: ConstraintSystem,
              lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if system.K == 0:
        return psi
    return psi - (system.M.T @ lam) @ table.coef


def best_response_policy(lam, ds: Dataset, eta: NuisanceBundle, system: ConstraintSystem,
                         policy_class: str = 'tabular', kind: str = 'DR',
                         cost: Optional[CostSpec] = None,
                         table: Optional[MomentTable] = None,
                         psi: Optional[np.ndarray] = None) -> BasePolicy:
    """Deterministic policy minimizing the Lagrangian at ``lam``.

    The tabular class decides each (x, a) cell by the sign of its summed ψ̃. The
    linear-index class minimizes the ``|ψ̃|``-weighted logistic surrogate of the
    labels ``ψ̃ > 0``. When every label agrees a constant policy is returned.
    """
    if policy_class not in POLICY_CLASSES:
        raise DomainError('policy class must be one of %s, got %r'
                          % (', '.join(POLICY_CLASSES), policy_class))
    cost = CostSpec() if cost is None else cost
    table = system.evaluate(ds, eta) if table is None else table
    if psi is None:
        _, psi = value_decomposition(ds, eta, cost, kind)
    psi_tilde = _adjusted(psi, table, system, lam)
    labels = (psi_tilde > 0).astype(float)
    weights = np.abs(psi_tilde)
    active = weights > 0
    if not active.any() or np.all(labels[active] == labels[active][0]):
        return ConstantPolicy(int(labels[active][0]) if active.any() else 0)

    if policy_class == 'tabular':
        cells, inverse = ds.cells()
        totals = np.bincount(inverse, weights=psi_tilde, minlength=len(cells))
        return TabularPolicy.from_cells(ds, (totals > 0).astype(int))

    features = linear_features(ds, ds.group_set)
    model = fit_logistic(features, labels, weights=weights, reg=config.reg)
    if not model.converged:
        logger.warning('linear best response did not converge in %d iterations',
                       model.n_iter)
    return LinearIndexPolicy(model.weights, ds.group_set)


def best_response_lambda(gamma, bound, B: float) -> np.ndarray:
    """Zero when every constraint holds, else ``B`` on the most violated row.

    Ties go to the lowest row index.
    """
    violation = np.asarray(gamma, dtype=float) - np.asarray(bound, dtype=float)
    lam = np.zeros(len(violation))
    if len(violation) and violation.max() > 0:
        lam[int(np.argmax(violation))] = B
    return lam


class GapResult(object):
    """Lagrangian of a (Q, λ) pair with the best responses' Lagrangians around it."""

    def __init__(self, L: float, L_low: float, L_high: float, value: float,
                 gamma: np.ndarray):
        self.L = L
        self.L_low = L_low
        self.L_high = L_high
        self.value = value
        self.gamma = gamma

    def gap(self) -> float:
        return max(self.L - self.L_low, self.L_high - self.L)


class Lagrangian(object):
    """``L(Q, λ) = -V(Q) + λᵀ(M h(Q) - bound)`` on one dataset.

    Every best response is cached by the md5 of its recommendation vector, with its
    value and constraint moments, so mixtures are evaluated by linearity.
    """

    def __init__(self, ds: Dataset, eta: NuisanceBundle, system: ConstraintSystem,
                 cost: CostSpec, bound: np.ndarray, B: float,
                 policy_class: str = 'tabular', kind: str = 'DR'):
        self.ds = ds
        self.eta = eta
        self.system = system
        self.cost = cost
        self.bound = np.asarray(bound, dtype=float)
        self.B = float(B)
        self.policy_class = policy_class
        self.kind = kind
        self.table = system.evaluate(ds, eta)
        self.baseline, self.psi = value_decomposition(ds, eta, cost, kind)
        self.policies = OrderedDict()  # type: Dict[str, BasePolicy]
        self.values = OrderedDict()  # type: Dict[str, float]
        self.gammas = OrderedDict()  # type: Dict[str, np.ndarray]
        self.n_best_responses = 0
        self.last_linprog_n_policies = 0
        self.last_linprog_result = None

    def value_of(self, pi1: np.ndarray) -> float:
        return float(np.mean(self.baseline) + np.mean(pi1 * self.psi))

    def gamma_of(self, pi1: np.ndarray) -> np.ndarray:
        return self.system.M @ self.table.moments(pi1)

    def add_policy(self, policy: BasePolicy) -> str:
        pi1 = policy.propensity(self.ds)
        key = md5_of_arrays([pi1])
        if key not in self.policies:
            self.policies[key] = policy
            self.values[key] = self.value_of(pi1)
            self.gammas[key] = self.gamma_of(pi1)
        return key

    def best_response(self, lam) -> str:
        self.n_best_responses += 1
        policy = best_response_policy(lam, self.ds, self.eta, self.system,
                                      self.policy_class, self.kind, self.cost,
                                      table=self.table, psi=self.psi)
        return self.add_policy(policy)

    def evaluate(self, weights: Dict[str, float]) -> Tuple[float, np.ndarray]:
        """Value and constraint vector of the mixture ``weights``."""
        value = sum(w * self.values[key] for key, w in weights.items())
        gamma = sum(w * self.gammas[key] for key, w in weights.items())
        return float(value), np.asarray(gamma, dtype=float).reshape(self.system.K)

    def lagrangian(self, value: float, gamma: np.ndarray, lam) -> float:
        return -value + float(np.dot(lam, gamma - self.bound))

    def lagrangian_high(self, value: float, gamma: np.ndarray) -> float:
        """Lagrangian under the multipliers' best response."""
        worst = float(np.max(gamma - self.bound)) if len(gamma) else 0.0
        return -value + self.B * max(0.0, worst)

    def eval_gap(self, weights: Dict[str, float], lam) -> GapResult:
        value, gamma = self.evaluate(weights)
        L = self.lagrangian(value, gamma, lam)
        key = self.best_response(lam)
        L_low = min(L, self.lagrangian(self.values[key], self.gammas[key], lam))
        return GapResult(L, L_low, self.lagrangian_high(value, gamma), value, gamma)

    def solve_linprog(self) -> Tuple[Dict[str, float], np.ndarray, GapResult]:
        """Saddle point of the game restricted to the cached policies."""
        keys = list(self.policies)
        n_policies = len(keys)
        if self.last_linprog_n_policies == n_policies:
            return self.last_linprog_result
        K = self.system.K
        c = np.r_[[-self.values[k] for k in keys], self.B]
        violations = np.column_stack([self.gammas[k] - self.bound for k in keys])
        A_ub = np.hstack([violations, -np.ones((K, 1))])
        b_ub = np.zeros(K)
        A_eq = np.r_[np.ones(n_policies), 0.0].reshape(1, -1)
        b_eq = np.ones(1)
        primal = opt.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                             bounds=[(0, None)] * (n_policies + 1), method='highs')
        dual_c = np.r_[b_ub, -b_eq]
        dual_A_ub = np.hstack([-A_ub.T, A_eq.T])
        dual_bounds = [(0, None)] * K + [(None, None)]
        dual = opt.linprog(dual_c, A_ub=dual_A_ub, b_ub=c, bounds=dual_bounds,
                           method='highs')
        if primal.status != 0 or dual.status != 0:
            raise DomainError('restricted saddle-point LP failed: %s / %s'
                              % (primal.message, dual.message))
        weights = _clean_weights(dict(zip(keys, primal.x[:-1])))
        lam = np.clip(dual.x[:-1], 0.0, None)
        self.last_linprog_n_policies = n_policies
        self.last_linprog_result = (weights, lam, self.eval_gap(weights, lam))
        return self.last_linprog_result

    def mixture(self, weights: Dict[str, float]) -> RandomizedPolicy:
        return RandomizedPolicy([(w, self.policies[key]) for key, w in weights.items()])


def _clean_weights(weights: Dict[str, float]) -> Dict[str, float]:
    """Drop tiny and negative LP weights and renormalize."""
    cleaned = OrderedDict((k, max(0.0, float(w))) for k, w in weights.items())
    cleaned = OrderedDict((k, w) for k, w in cleaned.items() if w > 1e-12)
    total = sum(cleaned.values())
    return OrderedDict((k, w / total) for k, w in cleaned.items())
