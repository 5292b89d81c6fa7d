import logging
from typing import List, Optional

import numpy as np

from ..exceptions import DomainError


logger = logging.getLogger(__name__)

PSEUDO_OUTCOME_KINDS = ('DM', 'IPW', 'DR')


class ValueEstimate(object):
    """Sample mean of per-observation scores with its i.i.d. standard error.

    Parameters
    ----------
    scores : array-like
        Per-observation scores; the point estimate is their mean.
    name : str, optional
        Estimator that produced the scores.
    warnings : list of str, optional
        Overlap and clipping flags raised while scoring.
    """

    def __init__(self, scores, name: Optional[str] = None,
                 warnings: Optional[List[str]] = None):
        scores = np.asarray(scores, dtype=float).reshape(-1)
        if len(scores) == 0:
            raise DomainError('cannot estimate from zero observations')
        if not np.all(np.isfinite(scores)):
            raise DomainError('per-observation scores must be finite')
        self.scores = scores
        self.name = name
        self.warnings = list(warnings or [])

    @property
    def n(self) -> int:
        return len(self.scores)

    @property
    def point(self) -> float:
        return float(np.mean(self.scores))

    @property
    def standard_error(self) -> float:
        if self.n < 2:
            return float('nan')
        return float(np.std(self.scores, ddof=1) / np.sqrt(self.n))

    @property
    def variance(self) -> float:
        """Sample variance of the scores."""
        if self.n < 2:
            return float('nan')
        return float(np.var(self.scores, ddof=1))

    def __float__(self):
        return self.point

    def __str__(self):
        header = "Value Estimate"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = [("Estimator", self.name or 'unnamed'),
                  ("Point", '%.6g' % self.point),
                  ("Standard error", '%.6g' % self.standard_error),
                  ("Observations", self.n)]
        fields += [("Warning", w) for w in self.warnings]
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body

    def __repr__(self):
        return 'ValueEstimate(name=%r, point=%r, standard_error=%r, n=%d)' % (
            self.name, self.point, self.standard_error, self.n)


class PseudoOutcome(object):
    """Per-observation pseudo-outcomes of one kind (DM, IPW or DR).

    The conditional mean of every kind is the utility lift of recommending,
    ``E[u | R=1, x, a] - E[u | R=0, x, a]``.
    """

    def __init__(self, kind: str, values):
        if kind not in PSEUDO_OUTCOME_KINDS:
            raise DomainError('pseudo-outcome kind must be one of %s, got %r'
                              % (', '.join(PSEUDO_OUTCOME_KINDS), kind))
        values = np.asarray(values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise DomainError('pseudo-outcomes must be finite')
        self.kind = kind
        self.values = values

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return 'PseudoOutcome(kind=%r, n=%d)' % (self.kind, len(self.values))
