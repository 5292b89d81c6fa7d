import logging
from typing import Optional, Tuple

import numpy as np

from ..exceptions import DomainError


logger = logging.getLogger(__name__)

UNCERTAINTY_MODES = ('interval', 'constant', 'lipschitz')


def _as_bounds(values, n: int) -> np.ndarray:
    """Broadcast a scalar, a per-r pair or a per-row (n, 2) array to shape (n, 2)."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 0 or values.shape == (2,):
        return np.broadcast_to(values, (n, 2)).copy()
    if values.shape == (n, 2):
        return values.copy()
    raise DomainError('bounds of shape %s do not fit %d rows' % (values.shape, n))


class UncertaintySet(object):
    """Bounds on the unidentified responsivities ``q_{1|r}(x, a)`` where overlap fails.

    Parameters
    ----------
    lower : float or array-like
        A scalar, a pair indexed by r, or an (n, 2) array indexed by row and r.
    upper : float or array-like
        Same shapes as ``lower``.
    monotone : bool
        Encouragement never lowers take-up: ``q_{1|r} >= p_{1|r}``. Raises the
        effective lower bound to the fitted responsivity, capped at ``upper``.
    mode : str
        ``'interval'`` for per-point bounds, ``'constant'`` for scalar bounds and
        ``'lipschitz'`` for bounds tied to nearby overlap points.
    lipschitz : float, optional
        Lipschitz constant of the ``'lipschitz'`` mode.
    """

    def __init__(self, lower=0.0, upper=1.0, monotone: bool = False, mode: str = 'interval',
                 lipschitz: Optional[float] = None):
        if mode not in UNCERTAINTY_MODES:
            raise DomainError('uncertainty mode must be one of %s, got %r'
                              % (', '.join(UNCERTAINTY_MODES), mode))
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if mode == 'constant' and (lower.ndim != 0 or upper.ndim != 0):
            raise DomainError('constant bounds must be scalars')
        if mode == 'lipschitz' and (lipschitz is None or lipschitz < 0):
            raise DomainError('lipschitz mode needs a nonnegative constant')
        try:
            lower_b, upper_b = np.broadcast_arrays(lower, upper)
        except ValueError:
            raise DomainError('lower and upper bounds have incompatible shapes %s and %s'
                              % (lower.shape, upper.shape))
        if np.any(lower_b < 0) or np.any(upper_b > 1) or np.any(lower_b > upper_b):
            raise DomainError('bounds must satisfy 0 <= lower <= upper <= 1')
        self.lower = lower
        self.upper = upper
        self.monotone = bool(monotone)
        self.mode = mode
        self.lipschitz = lipschitz

    @property
    def is_pointwise_constant(self) -> bool:
        """True when the bounds do not depend on the row."""
        return self.lower.ndim <= 1 and self.upper.ndim <= 1

    def bounds(self, n: int, fitted: Optional[np.ndarray] = None
               ) -> Tuple[np.ndarray, np.ndarray]:
        """(lower, upper) of shape (n, 2); ``fitted`` (n, 2) applies the monotone flag."""
        lower = _as_bounds(self.lower, n)
        upper = _as_bounds(self.upper, n)
        if self.monotone:
            if fitted is None:
                raise DomainError('the monotone flag needs the fitted responsivities')
            lower = np.minimum(np.maximum(lower, fitted), upper)
        return lower, upper

    def widened(self, amount: float) -> 'UncertaintySet':
        """The set with both bounds pushed outwards by ``amount``, clipped to [0, 1]."""
        return UncertaintySet(np.clip(self.lower - amount, 0, 1),
                              np.clip(self.upper + amount, 0, 1),
                              monotone=self.monotone,
                              mode='interval' if self.mode == 'constant' else self.mode,
                              lipschitz=self.lipschitz)

    def __repr__(self):
        def describe(b):
            return '%g' % b if b.ndim == 0 else 'array%s' % (b.shape,)
        return 'UncertaintySet(lower=%s, upper=%s, monotone=%r, mode=%r)' % (
            describe(self.lower), describe(self.upper), self.monotone, self.mode)


class OverlapPartition(object):
    """Rows whose recommendation r is never observed near their (x, a).

    Parameters
    ----------
    nov : array-like of bool, shape (n, 2)
        ``nov[i, r]`` marks row i as lacking overlap for recommendation r.
    """

    def __init__(self, nov):
        nov = np.asarray(nov, dtype=bool)
        if nov.ndim != 2 or nov.shape[1] != 2:
            raise DomainError('overlap indicators must have shape (n, 2), got %s'
                              % (nov.shape,))
        nov.setflags(write=False)
        self.nov = nov

    @classmethod
    def full_overlap(cls, n: int) -> 'OverlapPartition':
        return cls(np.zeros((n, 2), dtype=bool))

    @property
    def n(self) -> int:
        return self.nov.shape[0]

    @property
    def ov(self) -> np.ndarray:
        """Rows with overlap for both recommendations."""
        return ~self.nov.any(axis=1)

    def nov_r(self, r: int) -> np.ndarray:
        return self.nov[:, r]

    @property
    def is_empty(self) -> bool:
        return not self.nov.any()

    def __eq__(self, other):
        return isinstance(other, OverlapPartition) and np.array_equal(self.nov, other.nov)

    def __str__(self):
        header = "Overlap Partition"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = [("Rows", self.n),
                  ("Overlap", int(self.ov.sum())),
                  ("No overlap, r=0", int(self.nov[:, 0].sum())),
                  ("No overlap, r=1", int(self.nov[:, 1].sum()))]
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body
