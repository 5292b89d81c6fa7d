from abc import ABC, abstractmethod
from collections import OrderedDict
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

import fairrec.config as config
from ..datasets import Dataset
from ..exceptions import DomainError
from .models import LinearModel


logger = logging.getLogger(__name__)

# Nuisance functions answered per group, in export order.
NUISANCE_NAMES = ('e1', 'p11', 'p10', 'mu1', 'mu0', 'p1')
PROBABILITY_NAMES = ('e1', 'p11', 'p10', 'p1')

_CACHE_SIZE = 8


class NuisanceConfig(object):
    """Settings of ``fit_nuisances``.

    Unset numerical options take the values of ``fairrec.config`` at call time.

    Parameters
    ----------
    folds : int, optional
        Cross-fitting folds. ``1`` fits in-sample.
    reg : float, optional
        L2 regularization of every model.
    max_iter : int, optional
        Optimizer iteration budget.
    tol : float, optional
        Gradient-norm tolerance.
    clip : float, optional
        Probability predictions are clipped to ``[clip, 1 - clip]``.
    seed : int
        Seed of the fold assignment.
    allow_no_overlap : bool
        Fit constant stand-ins for empty strata instead of raising ``NoOverlapError``.
        Used by callers that route those strata to the robust bounds.
    """

    def __init__(self, folds: Optional[int] = None, reg: Optional[float] = None,
                 max_iter: Optional[int] = None, tol: Optional[float] = None,
                 clip: Optional[float] = None, seed: int = 0,
                 allow_no_overlap: bool = False):
        self.folds = config.n_folds if folds is None else int(folds)
        self.reg = config.reg if reg is None else float(reg)
        self.max_iter = config.max_iter if max_iter is None else int(max_iter)
        self.tol = config.tol if tol is None else float(tol)
        self.clip = config.clip if clip is None else float(clip)
        self.seed = int(seed)
        self.allow_no_overlap = bool(allow_no_overlap)
        if self.folds < 1:
            raise DomainError('folds must be at least 1, got %d' % self.folds)
        if self.reg < 0:
            raise DomainError('reg must be nonnegative, got %g' % self.reg)
        if self.max_iter < 1 or self.tol <= 0:
            raise DomainError('max_iter must be positive and tol must be positive')
        if not 0 < self.clip < 0.5:
            raise DomainError('clip must lie in (0, 0.5), got %g' % self.clip)

    def __repr__(self):
        return ('NuisanceConfig(folds=%d, reg=%g, max_iter=%d, tol=%g, clip=%g, seed=%d, '
                'allow_no_overlap=%r)' % (self.folds, self.reg, self.max_iter, self.tol,
                                          self.clip, self.seed, self.allow_no_overlap))


class NuisancePredictions(object):
    """Nuisance values for every row of one dataset.

    Probability arrays are already clipped. ``p_{0|r}`` is ``1 - p_{1|r}`` throughout.
    """

    def __init__(self, e1, p11, p10, mu1, mu0, p1, clip: float):
        self.e1 = np.asarray(e1, dtype=float)
        self.p11 = np.asarray(p11, dtype=float)
        self.p10 = np.asarray(p10, dtype=float)
        self.mu1 = np.asarray(mu1, dtype=float)
        self.mu0 = np.asarray(mu0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.clip = clip

    @property
    def n(self) -> int:
        return len(self.e1)

    @property
    def lift(self) -> np.ndarray:
        """Take-up gained by recommending, ``p_{1|1} - p_{1|0}``."""
        return self.p11 - self.p10

    def e(self, r) -> np.ndarray:
        """P(R=r | x, a); ``r`` may be a scalar or a per-row array."""
        r = np.asarray(r)
        return np.where(r == 1, self.e1, 1.0 - self.e1)

    def takeup(self, r) -> np.ndarray:
        """P(T=1 | R=r, x, a)."""
        r = np.asarray(r)
        return np.where(r == 1, self.p11, self.p10)

    def p(self, t) -> np.ndarray:
        """Marginal P(T=t | x, a)."""
        t = np.asarray(t)
        return np.where(t == 1, self.p1, 1.0 - self.p1)

    def mu(self, t) -> np.ndarray:
        t = np.asarray(t)
        return np.where(t == 1, self.mu1, self.mu0)

    def clip_fraction(self) -> float:
        """Share of rows with a propensity at the clip boundary."""
        if self.clip <= 0:
            return 0.0
        tol = 1e-12
        at_bound = np.zeros(self.n, dtype=bool)
        for values in (self.e1, self.p1):
            at_bound |= (values <= self.clip + tol) | (values >= 1 - self.clip - tol)
        return float(at_bound.mean())


class NuisanceBundle(ABC):
    """Per-group nuisance functions with clipped probability outputs.

    Parameters
    ----------
    group_set : list of str
        Groups the bundle can answer for.
    group_freq : dict
        p(A), summing to one.
    clip : float
        Probability predictions are clipped to ``[clip, 1 - clip]``.
    """

    def __init__(self, group_set: Sequence[str], group_freq: Dict[str, float], clip: float):
        if not 0 <= clip < 0.5:
            raise DomainError('clip must lie in [0, 0.5), got %g' % clip)
        self.group_set = list(group_set)
        self.group_freq = OrderedDict((a, float(group_freq.get(a, 0.0)))
                                      for a in self.group_set)
        total = sum(self.group_freq.values())
        if abs(total - 1.0) > 1e-9:
            raise DomainError('group frequencies sum to %r, expected 1' % total)
        self.clip = float(clip)
        self._cache = OrderedDict()  # type: OrderedDict

    @classmethod
    def from_dgp(cls, spec, clip: Optional[float] = None) -> 'OracleBundle':
        """The exact nuisance functions of a DGP (the K=1 oracle mode)."""
        return OracleBundle(spec, clip=clip)

    @abstractmethod
    def _raw_predictions(self, ds: Dataset, group: Optional[str]) -> Dict[str, np.ndarray]:
        """Unclipped values of every name in ``NUISANCE_NAMES``."""
        pass

    @abstractmethod
    def _raw_group_probabilities(self, ds: Dataset) -> np.ndarray:
        """Unnormalized p(a | x) with one column per group of ``group_set``."""
        pass

    def _check_groups(self, ds: Dataset, group: Optional[str]):
        if group is not None and group not in self.group_set:
            raise DomainError('group %r is unknown to the nuisance bundle %r'
                              % (group, self.group_set))
        present = set(np.array(ds.group_set, dtype=object)[np.unique(ds.group_codes)])
        unknown = sorted(present - set(self.group_set))
        if group is None and unknown:
            raise DomainError('groups %r are unknown to the nuisance bundle %r'
                              % (unknown, self.group_set))

    def _clip(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.clip, 1.0 - self.clip)

    def predict(self, ds: Dataset, group: Optional[str] = None) -> NuisancePredictions:
        """Nuisance values for every row of ``ds``.

        Parameters
        ----------
        ds : Dataset
        group : str, optional
            Evaluate every row as if it belonged to this group.

        Returns
        -------
        NuisancePredictions
        """
        key = (ds.fingerprint(), tuple(ds.group_set), group)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        self._check_groups(ds, group)
        raw = self._raw_predictions(ds, group)
        values = {name: (self._clip(raw[name]) if name in PROBABILITY_NAMES else raw[name])
                  for name in NUISANCE_NAMES}
        predictions = NuisancePredictions(clip=self.clip, **values)
        self._cache[key] = predictions
        if len(self._cache) > _CACHE_SIZE:
            self._cache.popitem(last=False)
        return predictions

    def group_probabilities(self, ds: Dataset) -> np.ndarray:
        """p(a | x) for every row, one column per group of ``group_set``."""
        raw = np.clip(self._raw_group_probabilities(ds), 0.0, None)
        totals = raw.sum(axis=1, keepdims=True)
        marginal = np.array(list(self.group_freq.values()))
        empty = totals[:, 0] <= 0
        raw[empty] = marginal
        totals[empty] = 1.0
        return raw / totals


class OracleBundle(NuisanceBundle):
    """Nuisance functions read off a DGP specification.

    Rows whose (x, a) is not a cell of the DGP use the nearest cell of their group.
    ``clip`` defaults to ``fairrec.config.clip`` and may be zero.
    """

    def __init__(self, spec, clip: Optional[float] = None):
        clip = config.clip if clip is None else clip
        super(OracleBundle, self).__init__(spec.group_set, spec.group_masses(), clip)
        self.spec = spec

    def _raw_predictions(self, ds, group):
        cells = self.spec.cell_index(ds, group=group)
        spec = self.spec
        p1 = spec.e1 * spec.p11 + (1 - spec.e1) * spec.p10
        return {'e1': spec.e1[cells], 'p11': spec.p11[cells], 'p10': spec.p10[cells],
                'mu1': spec.mu1[cells], 'mu0': spec.mu0[cells], 'p1': p1[cells]}

    def _raw_group_probabilities(self, ds):
        spec = self.spec
        masses = spec.masses
        labels = spec.group_labels
        cell_x = spec.X
        out = np.zeros((ds.n, len(self.group_set)))
        unique_x, inverse = np.unique(ds.X, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        for k, x in enumerate(unique_x):
            row = np.zeros(len(self.group_set))
            matches = np.flatnonzero(np.all(cell_x == x, axis=1))
            for i in matches:
                row[self.group_set.index(labels[i])] += masses[i]
            out[inverse == k] = row
        return out

    def __repr__(self):
        return 'OracleBundle(cells=%d, clip=%g)' % (self.spec.n_cells, self.clip)


class FittedBundle(NuisanceBundle):
    """Linear and logistic nuisance models, one set per group and fold.

    ``models`` maps ``(name, group, fold)`` to a ``LinearModel``. The model of fold
    ``k`` was trained on every fold except ``k``; with a single fold it was trained
    on all rows. Rows of the training data (recognised by fingerprint) are
    predicted out-of-fold; other data uses the average over folds.

    Parameters
    ----------
    models : dict
    group_models : dict
        ``(group, fold)`` to a one-vs-rest logistic model of group membership.
    group_set : list of str
    group_freq : dict
    clip : float
    folds : int
    fold_of_row : np.ndarray
        Fold of every training row.
    training_fingerprint : str
    """

    def __init__(self, models: Dict, group_models: Dict, group_set: Sequence[str],
                 group_freq: Dict[str, float], clip: float, folds: int,
                 fold_of_row: np.ndarray, training_fingerprint: str):
        super(FittedBundle, self).__init__(group_set, group_freq, clip)
        self.models = models
        self.group_models = group_models
        self.folds = int(folds)
        self.fold_of_row = np.asarray(fold_of_row, dtype=int)
        self.training_fingerprint = training_fingerprint

    @property
    def fold_assignment(self) -> np.ndarray:
        return self.fold_of_row

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.models.values()) \
            and all(m.converged for m in self.group_models.values())

    def _is_training_data(self, ds: Dataset) -> bool:
        return self.folds > 1 and ds.n == len(self.fold_of_row) \
            and ds.fingerprint() == self.training_fingerprint

    def _apply(self, lookup, ds: Dataset, rows: np.ndarray) -> np.ndarray:
        """Predictions of ``lookup(fold)`` on ``rows``, out-of-fold where possible."""
        X = ds.X[rows]
        if self._is_training_data(ds):
            out = np.empty(len(rows))
            folds = self.fold_of_row[rows]
            for k in range(self.folds):
                in_fold = folds == k
                if np.any(in_fold):
                    out[in_fold] = lookup(k).predict(X[in_fold])
            return out
        return np.mean([lookup(k).predict(X) for k in range(self.folds)], axis=0)

    def _raw_predictions(self, ds, group):
        raw = {name: np.empty(ds.n) for name in NUISANCE_NAMES}
        labels = ds.groups
        for a in self.group_set:
            rows = np.arange(ds.n) if group == a else (
                np.zeros(0, dtype=int) if group is not None else np.flatnonzero(labels == a))
            if len(rows) == 0:
                continue
            for name in NUISANCE_NAMES:
                raw[name][rows] = self._apply(
                    lambda k, name=name, a=a: self.models[(name, a, k)], ds, rows)
        return raw

    def _raw_group_probabilities(self, ds):
        rows = np.arange(ds.n)
        columns = [self._apply(lambda k, a=a: self.group_models[(a, k)], ds, rows)
                   for a in self.group_set]
        return np.column_stack(columns)

    def __repr__(self):
        return 'FittedBundle(groups=%r, folds=%d, clip=%g)' % (
            self.group_set, self.folds, self.clip)
