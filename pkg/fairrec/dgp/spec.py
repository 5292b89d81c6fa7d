from collections import namedtuple, OrderedDict
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..datasets import Dataset
from ..exceptions import SpecError


logger = logging.getLogger(__name__)


DGPCell = namedtuple("DGPCell", ["x", "a", "mass", "e1", "p11", "p10", "mu1", "mu0"])

_MASS_TOLERANCE = 1e-12


class DGPSpec(object):
    """Data-generating process on a finite set of covariate cells.

    Within cell c: ``R ~ Bernoulli(e1)``, ``T ~ Bernoulli(p_{1|R})`` and ``Y`` has
    mean ``mu_T``, either Bernoulli or Gaussian with standard deviation ``sigma``.

    Parameters
    ----------
    cells : list of DGPCell
        Cell definitions; (x, a) pairs must be unique.
    outcome_kind : str
        'bernoulli' or 'gaussian'.
    sigma : float
        Outcome noise for the Gaussian kind.
    """

    def __init__(self, cells: Sequence[DGPCell], outcome_kind: str = 'bernoulli',
                 sigma: float = 1.0):
        if outcome_kind not in ('bernoulli', 'gaussian'):
            raise SpecError('outcome kind must be bernoulli or gaussian, got %r' % outcome_kind)
        if not cells:
            raise SpecError('a DGP needs at least one cell')
        self.cells = [DGPCell(tuple(float(v) for v in c.x), str(c.a), float(c.mass),
                              float(c.e1), float(c.p11), float(c.p10),
                              float(c.mu1), float(c.mu0)) for c in cells]
        self.outcome_kind = outcome_kind
        self.sigma = float(sigma)
        self._check()

    def _check(self):
        dims = {len(c.x) for c in self.cells}
        if len(dims) != 1:
            raise SpecError('cells have covariate dimensions %s' % sorted(dims))
        keys = [(c.x, c.a) for c in self.cells]
        if len(set(keys)) != len(keys):
            raise SpecError('(x, a) cells must be unique')
        masses = self.masses
        if np.any(masses < 0) or abs(masses.sum() - 1.0) > _MASS_TOLERANCE:
            raise SpecError('cell masses must be nonnegative and sum to 1, got %r'
                            % masses.sum())
        probabilities = np.column_stack([self.e1, self.p11, self.p10])
        if self.outcome_kind == 'bernoulli':
            probabilities = np.column_stack([probabilities, self.mu1, self.mu0])
        if not np.all(np.isfinite(probabilities)) or np.any(probabilities < 0) \
                or np.any(probabilities > 1):
            raise SpecError('probabilities must lie in [0, 1]')
        if not np.all(np.isfinite(np.column_stack([self.mu1, self.mu0]))):
            raise SpecError('mean outcomes must be finite')
        if self.outcome_kind == 'gaussian' and not self.sigma >= 0:
            raise SpecError('sigma must be nonnegative')

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(c, name) for c in self.cells])

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def masses(self) -> np.ndarray:
        return self._column('mass')

    @property
    def e1(self) -> np.ndarray:
        return self._column('e1')

    @property
    def p11(self) -> np.ndarray:
        return self._column('p11')

    @property
    def p10(self) -> np.ndarray:
        return self._column('p10')

    @property
    def mu1(self) -> np.ndarray:
        return self._column('mu1')

    @property
    def mu0(self) -> np.ndarray:
        return self._column('mu0')

    @property
    def X(self) -> np.ndarray:
        return np.array([c.x for c in self.cells], dtype=float)

    @property
    def group_labels(self) -> List[str]:
        return [c.a for c in self.cells]

    @property
    def group_set(self) -> List[str]:
        return sorted(set(self.group_labels))

    def group_masses(self) -> Dict[str, float]:
        masses = self.masses
        labels = np.array(self.group_labels)
        return OrderedDict((a, float(masses[labels == a].sum())) for a in self.group_set)

    def cell_dataset(self) -> Dataset:
        """One row per cell, in cell order; r, t and y are zero placeholders."""
        zeros = np.zeros(self.n_cells)
        return Dataset(self.X, self.group_labels, zeros, zeros, zeros,
                       group_set=self.group_set)

    def cell_index(self, ds: Dataset, group: Optional[str] = None) -> np.ndarray:
        """Cell of every row of ``ds``.

        Rows whose (x, a) is not a cell map to the nearest cell of the same group.
        ``group`` replaces the group of every row.
        """
        row_cells, inverse = ds.cells()
        lookup = {(c.x, c.a): i for i, c in enumerate(self.cells)}
        X = self.X
        labels_array = np.array(self.group_labels, dtype=object)
        per_cell = np.empty(len(row_cells), dtype=int)
        for k, (x, a) in enumerate(row_cells):
            if group is not None:
                a = group
            found = lookup.get((x, a))
            if found is None:
                same_group = np.flatnonzero(labels_array == a)
                if len(same_group) == 0:
                    raise SpecError('group %r is not in the DGP' % a)
                distances = np.linalg.norm(X[same_group] - np.asarray(x), axis=1)
                found = int(same_group[np.argmin(distances)])
            per_cell[k] = found
        return per_cell[inverse]

    def __eq__(self, other):
        return isinstance(other, DGPSpec) and self.cells == other.cells \
            and self.outcome_kind == other.outcome_kind and self.sigma == other.sigma

    def __str__(self):
        header = "DGP Specification"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = [("Cells", self.n_cells),
                  ("Groups", ', '.join(self.group_set)),
                  ("Covariates", len(self.cells[0].x)),
                  ("Outcome", self.outcome_kind if self.outcome_kind == 'bernoulli'
                   else 'gaussian(%g)' % self.sigma)]
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body
