from abc import ABC, abstractmethod
from collections import OrderedDict
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..datasets import Dataset
from ..exceptions import DomainError
from ..utils import format_float


logger = logging.getLogger(__name__)

_WEIGHT_TOLERANCE = 1e-12


class BasePolicy(ABC):
    """A rule mapping each row (x, a) to a recommendation probability π_1(x, a)."""

    kind = None  # type: str

    @abstractmethod
    def propensity(self, ds: Dataset) -> np.ndarray:
        """Probability of recommending, one entry per row of ``ds``."""
        pass

    @abstractmethod
    def _parameters(self) -> List[Tuple[str, str]]:
        """(key, value) pairs describing the rule, in serialization order."""
        pass

    def decisions(self, ds: Dataset) -> np.ndarray:
        return self.propensity(ds) > 0.5

    def to_text(self) -> str:
        lines = ['[policy]', 'kind = %s' % self.kind]
        lines.extend('%s = %s' % pair for pair in self._parameters())
        return '\n'.join(lines) + '\n'

    def __str__(self):
        header = "%s Policy" % self.kind.replace('_', ' ').title()
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = self._parameters()
        if not fields:
            return header.rstrip('\n')
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value.replace('\n', ' '))
                         for name, value in fields)
        return header + body


class ConstantPolicy(BasePolicy):
    """Recommend with the same decision ``r`` everywhere."""

    kind = 'constant'

    def __init__(self, r: int):
        if r not in (0, 1):
            raise DomainError('A constant policy recommends 0 or 1, got %r' % r)
        self.r = int(r)

    def propensity(self, ds: Dataset) -> np.ndarray:
        return np.full(ds.n, float(self.r))

    def _parameters(self):
        return [('r', str(self.r))]

    def __eq__(self, other):
        return isinstance(other, ConstantPolicy) and self.r == other.r


class ThresholdPolicy(BasePolicy):
    """Deterministic rule ``π_1 = 1{index(λ) > 0}``; exact ties do not recommend.

    Parameters
    ----------
    lam : float
        Penalty at which the index is evaluated.
    index : callable
        ``index(ds, lam)`` returns the per-row index.
    description : str
        Human readable form of the index, used in serialization.
    """

    kind = 'threshold'

    def __init__(self, lam: float, index: Callable[[Dataset, float], np.ndarray],
                 description: str = ''):
        self.lam = float(lam)
        self.index = index
        self.description = description

    def scores(self, ds: Dataset) -> np.ndarray:
        return self.index(ds, self.lam)

    def propensity(self, ds: Dataset) -> np.ndarray:
        return (self.scores(ds) > 0).astype(float)

    def _parameters(self):
        return [('lambda', format_float(self.lam)), ('index', self.description)]


def linear_features(ds: Dataset, group_set: Sequence[str]) -> np.ndarray:
    """Covariates followed by indicators of every group except the first."""
    codes = np.array([list(group_set).index(g) for g in ds.groups]) \
        if list(ds.group_set) != list(group_set) else ds.group_codes
    indicators = (codes[:, None] == np.arange(1, len(group_set))[None, :]).astype(float)
    return np.hstack([ds.X, indicators])


class LinearIndexPolicy(BasePolicy):
    """Rule ``π_1 = 1{β_0 + φ(x, a)·β > 0}`` with φ from ``linear_features``."""

    kind = 'linear_index'

    def __init__(self, beta, group_set: Sequence[str]):
        beta = np.asarray(beta, dtype=float)
        if not np.all(np.isfinite(beta)):
            raise DomainError('Linear policy weights must be finite')
        self.beta = beta
        self.group_set = list(group_set)

    def scores(self, ds: Dataset) -> np.ndarray:
        features = linear_features(ds, self.group_set)
        if features.shape[1] + 1 != len(self.beta):
            raise DomainError('Policy has %d weights, data gives %d features'
                              % (len(self.beta), features.shape[1] + 1))
        return self.beta[0] + features @ self.beta[1:]

    def propensity(self, ds: Dataset) -> np.ndarray:
        return (self.scores(ds) > 0).astype(float)

    def _parameters(self):
        return [('groups', ','.join(self.group_set)),
                ('beta', ','.join(format_float(b) for b in self.beta))]

    def __eq__(self, other):
        return isinstance(other, LinearIndexPolicy) and self.group_set == other.group_set \
            and np.array_equal(self.beta, other.beta)


class TabularPolicy(BasePolicy):
    """One decision per (x, a) cell; cells not in the table get ``default``."""

    kind = 'tabular'

    def __init__(self, decisions: Dict[Tuple[Tuple[float, ...], str], int], default: int = 0):
        self.decisions_ = OrderedDict(
            ((tuple(float(v) for v in x), str(a)), int(r))
            for (x, a), r in sorted(decisions.items(), key=lambda item: (item[0][1], item[0][0])))
        if any(r not in (0, 1) for r in self.decisions_.values()):
            raise DomainError('Tabular decisions must be 0 or 1')
        self.default = int(default)

    @classmethod
    def from_cells(cls, ds: Dataset, cell_decisions) -> 'TabularPolicy':
        """Build from ``ds.cells()`` order and a decision per cell."""
        cells, _ = ds.cells()
        return cls({cell: int(r) for cell, r in zip(cells, cell_decisions)})

    def propensity(self, ds: Dataset) -> np.ndarray:
        cells, inverse = ds.cells()
        per_cell = np.array([self.decisions_.get(cell, self.default) for cell in cells],
                            dtype=float)
        return per_cell[inverse]

    def _parameters(self):
        rows = ['%s|%s|%d' % (';'.join(format_float(v) for v in x), a, r)
                for (x, a), r in self.decisions_.items()]
        return [('default', str(self.default)), ('cells', '\n    ' + '\n    '.join(rows))]

    def __eq__(self, other):
        return isinstance(other, TabularPolicy) and self.decisions_ == other.decisions_ \
            and self.default == other.default


class RandomizedPolicy(BasePolicy):
    """Finite mixture of deterministic policies.

    Parameters
    ----------
    components : list of (float, BasePolicy)
        Weights must be nonnegative and sum to one within 1e-12 (they are then
        renormalized exactly). Nested mixtures are flattened.
    """

    kind = 'randomized'

    def __init__(self, components: Sequence[Tuple[float, BasePolicy]]):
        flat = []  # type: List[Tuple[float, BasePolicy]]
        for weight, policy in components:
            if isinstance(policy, RandomizedPolicy):
                flat.extend((weight * w, p) for w, p in policy.components)
            else:
                flat.append((float(weight), policy))
        if not flat:
            raise DomainError('A randomized policy needs at least one component')
        weights = np.array([w for w, _ in flat])
        if np.any(weights < 0):
            raise DomainError('Mixture weights must be nonnegative')
        if abs(weights.sum() - 1.0) > _WEIGHT_TOLERANCE:
            raise DomainError('Mixture weights sum to %r, not 1' % weights.sum())
        weights = weights / weights.sum()
        self.components = [(float(w), p) for w, (_, p) in zip(weights, flat) if w > 0]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def is_deterministic(self) -> bool:
        return len(self.components) == 1

    def propensity(self, ds: Dataset) -> np.ndarray:
        total = np.zeros(ds.n)
        for weight, policy in self.components:
            total += weight * policy.propensity(ds)
        return total

    def _parameters(self):
        return [('components', str(len(self.components)))]

    def to_text(self) -> str:
        lines = ['[policy]', 'kind = %s' % self.kind, 'components = %d' % len(self.components)]
        for k, (weight, policy) in enumerate(self.components):
            lines.append('')
            lines.append('[component %d]' % k)
            lines.append('weight = %s' % format_float(weight))
            lines.append('kind = %s' % policy.kind)
            lines.extend('%s = %s' % pair for pair in policy._parameters())
        return '\n'.join(lines) + '\n'


def as_randomized(policy: BasePolicy) -> RandomizedPolicy:
    if isinstance(policy, RandomizedPolicy):
        return policy
    return RandomizedPolicy([(1.0, policy)])


def mixture(policies: Sequence[BasePolicy], weights: Optional[Sequence[float]] = None
            ) -> RandomizedPolicy:
    if weights is None:
        weights = np.full(len(policies), 1.0 / len(policies))
    return RandomizedPolicy(list(zip(weights, policies)))
