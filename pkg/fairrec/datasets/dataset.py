from collections import namedtuple, OrderedDict
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DomainError
from ..utils import md5_of_arrays


logger = logging.getLogger(__name__)


Observation = namedtuple("Observation", ["x", "a", "r", "t", "y"])


class CostSpec(object):
    """Utility weights of a realization (r, t, y).

    The utility is ``u = w_y * y + w_t * t + w_r * r`` and is always maximized.
    Costs are expressed with negative weights.

    Parameters
    ----------
    w_y : float
        Weight per unit outcome.
    w_t : float
        Weight per unit treatment.
    w_r : float
        Weight per unit recommendation.
    """
    orientation = 'maximize'

    def __init__(self, w_y: float = 1.0, w_t: float = 0.0, w_r: float = 0.0):
        weights = np.array([w_y, w_t, w_r], dtype=float)
        if not np.all(np.isfinite(weights)):
            raise DomainError('Cost weights must be finite, got %r' % (weights.tolist(),))
        self.w_y = float(w_y)
        self.w_t = float(w_t)
        self.w_r = float(w_r)

    def utility(self, r, t, y):
        return self.w_y * np.asarray(y, dtype=float) \
            + self.w_t * np.asarray(t, dtype=float) \
            + self.w_r * np.asarray(r, dtype=float)

    def treatment_effect(self, mu1, mu0):
        """Utility gain of treating, ``w_y * (mu1 - mu0) + w_t``."""
        return self.w_y * (np.asarray(mu1) - np.asarray(mu0)) + self.w_t

    def __eq__(self, other):
        return isinstance(other, CostSpec) and \
            (self.w_y, self.w_t, self.w_r) == (other.w_y, other.w_t, other.w_r)

    def __repr__(self):
        return 'CostSpec(w_y=%r, w_t=%r, w_r=%r)' % (self.w_y, self.w_t, self.w_r)


class DatasetSchema(object):
    """Column roles of an encouragement dataset file.

    Parameters
    ----------
    group : str
        Name of the group column.
    r : str
        Name of the recommendation column.
    t : str
        Name of the treatment column.
    y : str
        Name of the outcome column.
    covariates : list of str
        Names of the covariate columns, in order.
    """

    def __init__(self, group: str, r: str, t: str, y: str, covariates: Sequence[str]):
        self.group = group
        self.r = r
        self.t = t
        self.y = y
        self.covariates = list(covariates)

    @property
    def columns(self) -> List[str]:
        return [self.group, self.r, self.t, self.y] + self.covariates

    def __eq__(self, other):
        return isinstance(other, DatasetSchema) and self.__dict__ == other.__dict__

    def __repr__(self):
        return 'DatasetSchema(group=%r, r=%r, t=%r, y=%r, covariates=%r)' % (
            self.group, self.r, self.t, self.y, self.covariates)


class Dataset(object):
    """Encouragement dataset: rows (x, a, r, t, y).

    The dataset is immutable after construction; all arrays are read-only.

    Parameters
    ----------
    X : array-like, shape (n, d)
        Real covariates.
    groups : sequence of str
        Group label of each row.
    r : array-like of {0, 1}
        Recommendation.
    t : array-like of {0, 1}
        Treatment.
    y : array-like
        Outcome.
    covariate_names : list of str, optional
        Defaults to ``x0, x1, ...``.
    group_set : list of str, optional
        Declared group labels. Defaults to the sorted distinct labels in ``groups``.
        A declared set may contain labels without rows.
    """

    def __init__(self, X, groups, r, t, y,
                 covariate_names: Optional[Sequence[str]] = None,
                 group_set: Optional[Sequence[str]] = None):
        X = np.array(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        n = X.shape[0]
        if n < 1:
            raise DomainError('A dataset needs at least one row')
        labels = np.array([str(g) for g in groups], dtype=object)
        r = np.array(r, dtype=int).reshape(-1)
        t = np.array(t, dtype=int).reshape(-1)
        y = np.array(y, dtype=float).reshape(-1)
        for name, column in (('groups', labels), ('r', r), ('t', t), ('y', y)):
            if len(column) != n:
                raise DomainError('Column %s has %d rows, expected %d' % (name, len(column), n))
        if not np.all(np.isfinite(X)):
            raise DomainError('Covariates must be finite')
        if not np.all(np.isfinite(y)):
            raise DomainError('Outcomes must be finite')
        if not np.all(np.isin(r, (0, 1))) or not np.all(np.isin(t, (0, 1))):
            raise DomainError('Recommendation and treatment must lie in {0, 1}')

        if group_set is None:
            group_set = sorted(set(labels.tolist()))
        group_set = [str(g) for g in group_set]
        if len(set(group_set)) != len(group_set):
            raise DomainError('Duplicate labels in group set %r' % group_set)
        index = {g: i for i, g in enumerate(group_set)}
        unknown = sorted(set(labels.tolist()) - set(index))
        if unknown:
            raise DomainError('Group labels %r are not in the group set %r' % (unknown, group_set))
        # An explicit group set may name groups without rows (evaluation grids,
        # single observations); inferred group sets are non-empty by construction.
        codes = np.array([index[g] for g in labels], dtype=int)

        if covariate_names is None:
            covariate_names = ['x%d' % j for j in range(X.shape[1])]
        covariate_names = list(covariate_names)
        if len(covariate_names) != X.shape[1]:
            raise DomainError('Got %d covariate names for %d columns'
                              % (len(covariate_names), X.shape[1]))

        for array in (X, codes, r, t, y):
            array.setflags(write=False)
        self.X = X
        self.group_codes = codes
        self.r = r
        self.t = t
        self.y = y
        self.group_set = group_set
        self.covariate_names = covariate_names
        self._fingerprint = None  # type: Optional[str]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def groups(self) -> np.ndarray:
        return np.array(self.group_set, dtype=object)[self.group_codes]

    def __len__(self):
        return self.n

    def __iter__(self):
        for i in range(self.n):
            yield self.observation(i)

    def observation(self, i: int) -> Observation:
        return Observation(self.X[i].copy(), self.group_set[self.group_codes[i]],
                           int(self.r[i]), int(self.t[i]), float(self.y[i]))

    def group_index(self, group: str) -> int:
        try:
            return self.group_set.index(group)
        except ValueError:
            raise DomainError('Group %r is not in the group set %r' % (group, self.group_set))

    def group_mask(self, group: str) -> np.ndarray:
        return self.group_codes == self.group_index(group)

    def group_frequencies(self) -> Dict[str, float]:
        counts = np.bincount(self.group_codes, minlength=len(self.group_set))
        return OrderedDict((g, counts[i] / self.n) for i, g in enumerate(self.group_set))

    def is_binary_outcome(self) -> bool:
        return bool(np.all(np.isin(self.y, (0.0, 1.0))))

    def cells(self) -> Tuple[List[Tuple[Tuple[float, ...], str]], np.ndarray]:
        """Distinct (x, a) cells and the cell index of every row.

        Cells are ordered lexicographically by covariates, then group code.
        """
        keys = np.column_stack([self.X, self.group_codes.astype(float)])
        unique, inverse = np.unique(keys, axis=0, return_inverse=True)
        cells = [(tuple(float(v) for v in row[:-1]), self.group_set[int(row[-1])])
                 for row in unique]
        return cells, np.asarray(inverse).reshape(-1)

    def subset(self, indices) -> 'Dataset':
        indices = np.asarray(indices)
        return Dataset(self.X[indices], self.groups[indices], self.r[indices],
                       self.t[indices], self.y[indices],
                       covariate_names=self.covariate_names, group_set=self.group_set)

    def fingerprint(self) -> str:
        """md5 checksum of the data, used to recognise a training set."""
        if self._fingerprint is None:
            self._fingerprint = md5_of_arrays(
                [self.X, self.group_codes, self.r, self.t, self.y])
        return self._fingerprint

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return False
        return (self.group_set == other.group_set
                and self.covariate_names == other.covariate_names
                and self.X.shape == other.X.shape
                and np.array_equal(self.X, other.X)
                and np.array_equal(self.group_codes, other.group_codes)
                and np.array_equal(self.r, other.r)
                and np.array_equal(self.t, other.t)
                and np.array_equal(self.y, other.y))

    def __str__(self):
        header = "Encouragement Dataset"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = {"Rows": self.n,
                  "Covariates": ', '.join(self.covariate_names),
                  "Groups": ', '.join(self.group_set),
                  "P(R=1)": '%.4f' % self.r.mean(),
                  "P(T=1)": '%.4f' % self.t.mean(),
                  "Mean outcome": '%.4f' % self.y.mean()}
        order = ["Rows", "Covariates", "Groups", "P(R=1)", "P(T=1)", "Mean outcome"]
        fields = [(key, fields[key]) for key in order if key in fields]

        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body


class ValidationReport(object):
    """Counts and overlap flags of a dataset.

    Parameters
    ----------
    group_counts : dict
        Rows per group.
    recommendation_rate : dict
        Empirical P(R=1 | A=a) per group with rows.
    cell_counts : dict
        Count per (r, t, a) cell.
    empty_strata : list of (int, str)
        (r, a) strata with no rows, candidate no-overlap regions.
    empty_groups : list of str
        Declared groups without rows.
    """

    def __init__(self, group_counts, recommendation_rate, cell_counts, empty_strata,
                 empty_groups=()):
        self.group_counts = group_counts
        self.recommendation_rate = recommendation_rate
        self.cell_counts = cell_counts
        self.empty_strata = empty_strata
        self.empty_groups = list(empty_groups)

    @property
    def flagged(self) -> bool:
        return len(self.empty_strata) > 0

    def takeup_given_recommendation(self) -> Dict[Tuple[int, str], float]:
        """Empirical P(T=1 | R=r, A=a); NaN for empty strata."""
        rates = OrderedDict()
        for (r, t, a) in self.cell_counts:
            if t != 1:
                continue
            total = self.cell_counts[(r, 0, a)] + self.cell_counts[(r, 1, a)]
            rates[(r, a)] = self.cell_counts[(r, 1, a)] / total if total else float('nan')
        return rates

    def __eq__(self, other):
        return isinstance(other, ValidationReport) and self.__dict__ == other.__dict__

    def __str__(self):
        header = "Validation Report"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        lines = []
        for a, count in self.group_counts.items():
            if a in self.empty_groups:
                lines.append('group %s: no rows' % a)
            else:
                lines.append('group %s: n=%d, P(R=1)=%.4f'
                             % (a, count, self.recommendation_rate[a]))
        for stratum in self.empty_strata:
            lines.append('empty stratum r=%d, a=%s' % stratum)
        return header + '\n'.join(lines)
