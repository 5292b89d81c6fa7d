import logging
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import expit
from sklearn.linear_model import LinearRegression, Ridge

import fairrec.config as config
from ..exceptions import DomainError, RegularizationRequiredError


logger = logging.getLogger(__name__)

_ARMIJO_C1 = 1e-4
_ARMIJO_SHRINK = 0.5
_ARMIJO_MAX_BACKTRACK = 50
# Loss values closer than this are indistinguishable in double precision.
_LOSS_RESOLUTION = 4 * np.finfo(float).eps


class LinearModel(object):
    """Linear predictor with an intercept and a logistic or identity link.

    Parameters
    ----------
    weights : array-like
        Intercept first, then one weight per feature.
    link : str
        'logistic' or 'identity'.
    converged : bool
        Whether the optimizer met its tolerance.
    n_iter : int
        Optimizer iterations used.
    """

    def __init__(self, weights, link: str = 'logistic', converged: bool = True,
                 n_iter: int = 0):
        if link not in ('logistic', 'identity'):
            raise DomainError('link must be logistic or identity, got %r' % link)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(weights)):
            raise DomainError('model weights must be finite')
        self.weights = weights
        self.link = link
        self.converged = bool(converged)
        self.n_iter = int(n_iter)

    @classmethod
    def constant(cls, value: float, n_features: int, link: str = 'logistic') -> 'LinearModel':
        if link == 'logistic':
            value = np.clip(value, 1e-6, 1 - 1e-6)
            intercept = np.log(value / (1 - value))
        else:
            intercept = value
        return cls(np.r_[intercept, np.zeros(n_features)], link)

    def decision_function(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        return self.weights[0] + features @ self.weights[1:]

    def predict(self, features) -> np.ndarray:
        z = self.decision_function(features)
        if self.link == 'logistic':
            return expit(z)
        return z

    def __eq__(self, other):
        return isinstance(other, LinearModel) and self.link == other.link \
            and np.array_equal(self.weights, other.weights)

    def __repr__(self):
        return 'LinearModel(link=%r, weights=%r, converged=%r)' % (
            self.link, self.weights.tolist(), self.converged)


def _armijo_backtracking(fg: Callable, x: np.ndarray, p: np.ndarray, f0: float,
                         g0: np.ndarray, alpha0: float
                         ) -> Tuple[float, float, np.ndarray]:
    """Shrink the step until ``f(x + αp) <= f(x) + c1 α gᵀp``.

    Returns the accepted step with the loss and gradient there. When no step passes
    within the backtracking budget, the last (smallest) trial is returned.
    """
    gTp = float(np.dot(g0, p))
    alpha = float(alpha0)
    slack = _LOSS_RESOLUTION * max(1.0, abs(f0))
    for _ in range(_ARMIJO_MAX_BACKTRACK):
        f_try, g_try = fg(x + alpha * p)
        if f_try <= f0 + _ARMIJO_C1 * alpha * gTp + slack:
            return alpha, f_try, g_try
        alpha *= _ARMIJO_SHRINK
    return alpha, f_try, g_try


def gradient_descent(fg: Callable, x0: np.ndarray, tol: float, max_iter: int
                     ) -> Tuple[np.ndarray, bool, int]:
    """Full-batch gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    Parameters
    ----------
    fg : callable
        Returns (loss, gradient) at a point.
    x0 : np.ndarray
        Starting point.
    tol : float
        Stop when the gradient norm is at most ``tol``.
    max_iter : int
        Iteration budget.

    Returns
    -------
    (x, converged, iterations)
    """
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    step = 1.0
    for k in range(max_iter):
        if np.linalg.norm(g) <= tol:
            return x, True, k
        alpha, f_new, g_new = _armijo_backtracking(fg, x, -g, f, g, step)
        x_new = x - alpha * g
        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        step = float(np.dot(s, s)) / sy if sy > 0 else 1.0
        x, f, g = x_new, f_new, g_new
    return x, bool(np.linalg.norm(g) <= tol), max_iter


def _check_inputs(features, targets, weights) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(targets, dtype=float).reshape(-1)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if not (X.shape[0] == len(y) == len(w)):
        raise DomainError('features, labels and weights have %d, %d and %d rows'
                          % (X.shape[0], len(y), len(w)))
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError('weights must be finite and nonnegative')
    if w.sum() <= 0:
        raise DomainError('at least one weight must be positive')
    return X, y, w


def fit_logistic(features, labels, weights=None, reg: float = 0.0,
                 max_iter: Optional[int] = None, tol: Optional[float] = None) -> LinearModel:
    """Weighted L2-regularized logistic regression from a zero start.

    Minimizes the weighted mean negative log-likelihood plus ``reg * ||w||² / 2``;
    the intercept is not penalized.

    Parameters
    ----------
    features : array-like, shape (n, d)
    labels : array-like of {0, 1}
    weights : array-like, optional
        Nonnegative row weights, not all zero.
    reg : float
        Regularization strength.
    max_iter : int, optional
        Defaults to ``fairrec.config.max_iter``.
    tol : float, optional
        Gradient-norm tolerance, defaults to ``fairrec.config.tol``.

    Returns
    -------
    LinearModel
        ``converged`` is False when the budget ran out first.
    """
    max_iter = config.max_iter if max_iter is None else max_iter
    tol = config.tol if tol is None else tol
    X, y, w = _check_inputs(features, labels, weights)
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise DomainError('logistic labels must be 0 or 1')
    if reg < 0:
        raise DomainError('reg must be nonnegative')
    active = y[w > 0]
    if reg == 0 and np.all(active == active[0]):
        raise RegularizationRequiredError(
            'all labels equal %d; the likelihood has no finite maximizer without '
            'regularization' % active[0])

    Z = np.hstack([np.ones((X.shape[0], 1)), X])
    s = w / w.sum()
    penalized = np.ones(Z.shape[1])
    penalized[0] = 0.0

    def fg(beta):
        z = Z @ beta
        loss = float(s @ (np.logaddexp(0.0, z) - y * z)) \
            + 0.5 * reg * float(beta[1:] @ beta[1:])
        grad = Z.T @ (s * (expit(z) - y)) + reg * penalized * beta
        return loss, grad

    beta, converged, n_iter = gradient_descent(fg, np.zeros(Z.shape[1]), tol, max_iter)
    if not converged:
        logger.warning('logistic fit stopped after %d iterations without reaching '
                       'gradient norm %g', n_iter, tol)
    return LinearModel(beta, 'logistic', converged=converged, n_iter=n_iter)


def fit_linear(features, targets, weights=None, reg: float = 0.0) -> LinearModel:
    """Weighted least squares with an unpenalized intercept (ridge when ``reg > 0``).

    The objective is scaled like ``fit_logistic``: weighted mean squared error over two
    plus ``reg * ||w||² / 2``.
    """
    X, y, w = _check_inputs(features, targets, weights)
    if reg < 0:
        raise DomainError('reg must be nonnegative')
    if reg > 0:
        model = Ridge(alpha=reg * w.sum(), fit_intercept=True)
    else:
        model = LinearRegression(fit_intercept=True)
    model.fit(X, y, sample_weight=w)
    return LinearModel(np.r_[model.intercept_, np.ravel(model.coef_)], 'identity')
