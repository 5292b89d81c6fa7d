from collections import namedtuple
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import DomainError
from ..utils import FLOAT_FORMAT, atomic_write_text


logger = logging.getLogger(__name__)


TradeoffPoint = namedtuple('TradeoffPoint', ['lam', 'value', 'value_se', 'takeup_a',
                                             'takeup_b', 'disparity', 'dr_value',
                                             'dr_value_se'])
TradeoffPoint.__new__.__defaults__ = (None, None)

_COLUMNS = ['lambda', 'value', 'value_se', 'takeup_a', 'takeup_b', 'disparity']
_DR_COLUMNS = ['dr_value', 'dr_value_se']


class TradeoffCurve(object):
    """Value, take-up and disparity of threshold policies along a penalty grid.

    Parameters
    ----------
    points : list of TradeoffPoint
        Strictly increasing in ``lam``.
    groups : tuple of str
        The groups (a, b) whose take-up gap is the disparity.
    """

    def __init__(self, points: Sequence[TradeoffPoint], groups: Tuple[str, str]):
        points = list(points)
        if not points:
            raise DomainError('a tradeoff curve needs at least one point')
        lams = np.array([p.lam for p in points])
        if np.any(np.diff(lams) <= 0):
            raise DomainError('penalties of a tradeoff curve must be strictly increasing')
        self.points = points
        self.groups = tuple(groups)

    @property
    def has_dr(self) -> bool:
        return all(p.dr_value is not None for p in self.points)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, item):
        return self.points[item]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        columns = _COLUMNS + (_DR_COLUMNS if self.has_dr else [])
        rows = [tuple(p)[:len(columns)] for p in self.points]
        return pd.DataFrame(rows, columns=columns)

    def to_csv(self, output_path: Optional[str] = None) -> str:
        """CSV text with columns ``lambda,value,value_se,takeup_a,takeup_b,disparity``.

        DR columns are appended when the sweep computed them. The text is also
        written to ``output_path`` when given.
        """
        text = self.to_frame().to_csv(index=False, float_format=FLOAT_FORMAT)
        if output_path is not None:
            atomic_write_text(output_path, text)
        return text

    def __str__(self):
        header = "Tradeoff Curve"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = [("Groups", '%s, %s' % self.groups),
                  ("Points", len(self.points)),
                  ("Penalty range", '[%g, %g]' % (self.points[0].lam, self.points[-1].lam)),
                  ("Value range", '[%.6g, %.6g]' % (min(self.column('value')),
                                                    max(self.column('value'))))]
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body

