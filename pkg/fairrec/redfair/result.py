import logging
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..policies import RandomizedPolicy
from ..utils import FLOAT_FORMAT, atomic_write_text


logger = logging.getLogger(__name__)


class SaddleResult(object):
    """Approximate saddle point (Q̂, λ̂) of the constrained policy problem.

    Parameters
    ----------
    Q : RandomizedPolicy
        Averaged or LP-optimal mixture of best responses.
    lam : np.ndarray
        Multipliers, one per constraint row.
    gap : float
        Saddle gap of (Q, lam).
    iterations : int
    trace : list of dict
        One record per iteration.
    converged : bool
        True when the gap reached ``nu``.
    value : float
        Estimated value of Q.
    gamma : np.ndarray
        ``M h(Q)``.
    bound : np.ndarray
        Bounds the rows of ``gamma`` were held to.
    nu : float
    B : float
    weights : dict
        Mixture weights keyed by policy fingerprint.
    lagrangian : Lagrangian
        The game the result was computed on, for re-evaluation.
    """

    def __init__(self, Q: RandomizedPolicy, lam: np.ndarray, gap: float, iterations: int,
                 trace: List[Dict], converged: bool, value: float, gamma: np.ndarray,
                 bound: np.ndarray, nu: float, B: float, weights: Dict[str, float],
                 lagrangian=None):
        self.Q = Q
        self.lam = np.asarray(lam, dtype=float)
        self.gap = float(gap)
        self.iterations = int(iterations)
        self.trace = trace
        self.converged = bool(converged)
        self.value = float(value)
        self.gamma = np.asarray(gamma, dtype=float)
        self.bound = np.asarray(bound, dtype=float)
        self.nu = float(nu)
        self.B = float(B)
        self.weights = weights
        self.lagrangian = lagrangian

    @property
    def max_violation(self) -> float:
        if len(self.gamma) == 0:
            return 0.0
        return float(max(0.0, np.max(self.gamma - self.bound)))

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace)

    def trace_to_csv(self, output_path: Optional[str] = None) -> str:
        """Per-iteration CSV: iter, lambda_k, gap, value, violation_k."""
        text = self.trace_frame().to_csv(index=False, float_format=FLOAT_FORMAT)
        if output_path is not None:
            atomic_write_text(output_path, text)
        return text

    def _fields(self):
        return [("Iterations", self.iterations),
                ("Converged", self.converged),
                ("Gap", '%.6g (target %.6g)' % (self.gap, self.nu)),
                ("Value", '%.6g' % self.value),
                ("Max violation", '%.6g' % self.max_violation),
                ("Policies in mixture", len(self.Q.components))]

    def __str__(self):
        header = "Saddle Result"
        header = '{}\n{}\n'.format(header, '=' * len(header))
        fields = self._fields()
        longest_field_name_length = max(len(name) for name, value in fields)
        field_line_format = "{{:.<{}}}: {{}}".format(longest_field_name_length)
        body = '\n'.join(field_line_format.format(name, value) for name, value in fields)
        return header + body


class TwoStageResult(SaddleResult):
    """Second-stage saddle point with the first-stage artifacts.

    Attributes
    ----------
    first_stage : SaddleResult
    binding : list of int
        Constraint rows within ``eps_n`` of their bound at the first-stage policy.
    sigma2 : np.ndarray
        Variance of every moment's scores under the first-stage policy.
    d_hat : np.ndarray
        Variance-inflated bounds of the original rows.
    eps_n : float
        Width of the value and constraint slices.
    pilot_value : float
        Value of the first-stage policy estimated on the second half; the second
        stage keeps its value above ``pilot_value - eps_n``.
    fallback : bool
        The second stage missed its constraints and the first-stage policy is
        returned.
    """

    def __init__(self, stage: SaddleResult, first_stage: SaddleResult, binding: List[int],
                 sigma2: np.ndarray, d_hat: np.ndarray, eps_n: float, fallback: bool,
                 pilot_value: float = float('nan')):
        super(TwoStageResult, self).__init__(
            stage.Q, stage.lam, stage.gap, stage.iterations, stage.trace, stage.converged,
            stage.value, stage.gamma, stage.bound, stage.nu, stage.B, stage.weights,
            stage.lagrangian)
        self.first_stage = first_stage
        self.binding = list(binding)
        self.sigma2 = np.asarray(sigma2, dtype=float)
        self.d_hat = np.asarray(d_hat, dtype=float)
        self.eps_n = float(eps_n)
        self.fallback = bool(fallback)
        self.pilot_value = float(pilot_value)

    def _fields(self):
        return super(TwoStageResult, self)._fields() + [
            ("Binding rows", ', '.join(str(k) for k in self.binding) or 'none'),
            ("Slice width", '%.6g' % self.eps_n),
            ("Pilot value", '%.6g' % self.pilot_value),
            ("Fallback", self.fallback)]
