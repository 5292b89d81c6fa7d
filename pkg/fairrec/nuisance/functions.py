import configparser
import io
import logging
from typing import Dict, Tuple

import numpy as np
from sklearn.model_selection import KFold

from ..datasets import Dataset
from ..exceptions import DomainError, NoOverlapError, RegularizationRequiredError
from ..utils import FLOAT_FORMAT, atomic_write_text, str_to_bool
from .bundle import FittedBundle, NuisanceBundle, NuisanceConfig, NUISANCE_NAMES
from .models import LinearModel, fit_linear, fit_logistic


logger = logging.getLogger(__name__)


def _fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    fold_of_row = np.zeros(n, dtype=int)
    if folds == 1:
        return fold_of_row
    if folds > n:
        raise DomainError('cannot split %d rows into %d folds' % (n, folds))
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    for k, (_, test_index) in enumerate(splitter.split(np.zeros((n, 1)))):
        fold_of_row[test_index] = k
    return fold_of_row


def _check_strata(ds: Dataset, fold_of_row: np.ndarray, folds: int, allow_no_overlap: bool):
    """Every (r, a) stratum needs rows in every fold complement."""
    for a in ds.group_set:
        in_group = ds.group_mask(a)
        for r in (0, 1):
            stratum = in_group & (ds.r == r)
            if folds == 1:
                empty = not np.any(stratum)
            else:
                empty = any(not np.any(stratum & (fold_of_row != k)) for k in range(folds))
            if not empty:
                continue
            message = 'stratum r=%d, a=%s has no rows to fit on' % (r, a)
            if not allow_no_overlap:
                raise NoOverlapError(message, stratum=(r, a))
            logger.warning('%s; a constant model stands in', message)


def _fit_probability(X, labels, cfg: NuisanceConfig, fallback: float, d: int,
                     what: str) -> LinearModel:
    if len(labels) == 0:
        return LinearModel.constant(fallback, d, 'logistic')
    try:
        return fit_logistic(X, labels, reg=cfg.reg, max_iter=cfg.max_iter, tol=cfg.tol)
    except RegularizationRequiredError:
        # Single-class labels; the empirical rate is the unregularized limit.
        logger.warning('%s: labels are all %d, using a constant model', what, labels[0])
        return LinearModel.constant(float(labels[0]), d, 'logistic')


def _fit_outcome(X, y, binary: bool, cfg: NuisanceConfig, fallback: float, d: int,
                 what: str) -> LinearModel:
    if len(y) == 0:
        return LinearModel.constant(fallback, d, 'logistic' if binary else 'identity')
    if binary:
        return _fit_probability(X, y, cfg, fallback, d, what)
    return fit_linear(X, y, reg=cfg.reg)


def fit_nuisances(ds: Dataset, cfg: NuisanceConfig = None) -> FittedBundle:
    """Fit and cross-fit the nuisance functions, separately per group.

    For each group the bundle holds ``e1`` (fit on all rows), ``p11`` and ``p10`` (fit
    on rows with R=1 and R=0), ``mu1`` and ``mu0`` (fit on rows with T=1 and T=0, with
    an identity link unless the outcome is binary) and the marginal ``p1``. A
    one-vs-rest group-membership model p(a | x) is fit on all rows.

    Parameters
    ----------
    ds : Dataset
    cfg : NuisanceConfig, optional

    Returns
    -------
    FittedBundle
    """
    cfg = NuisanceConfig() if cfg is None else cfg
    fold_of_row = _fold_assignment(ds.n, cfg.folds, cfg.seed)
    _check_strata(ds, fold_of_row, cfg.folds, cfg.allow_no_overlap)
    binary = ds.is_binary_outcome()
    d = ds.d
    logger.info('fitting nuisances on %d rows, %d groups, %d folds', ds.n,
                len(ds.group_set), cfg.folds)

    models = {}  # type: Dict[Tuple[str, str, int], LinearModel]
    group_models = {}  # type: Dict[Tuple[str, int], LinearModel]
    for k in range(cfg.folds):
        train = (fold_of_row != k) if cfg.folds > 1 else np.ones(ds.n, dtype=bool)
        X_train = ds.X[train]
        for a in ds.group_set:
            rows = train & ds.group_mask(a)
            X, r, t, y = ds.X[rows], ds.r[rows], ds.t[rows], ds.y[rows]
            t_rate = float(t.mean()) if len(t) else float(ds.t.mean())
            y_rate = float(y.mean()) if len(y) else float(ds.y.mean())
            where = 'group %s, fold %d' % (a, k)
            models[('e1', a, k)] = _fit_probability(
                X, r, cfg, 0.5, d, 'e1 ' + where)
            models[('p11', a, k)] = _fit_probability(
                X[r == 1], t[r == 1], cfg, t_rate, d, 'p11 ' + where)
            models[('p10', a, k)] = _fit_probability(
                X[r == 0], t[r == 0], cfg, t_rate, d, 'p10 ' + where)
            models[('mu1', a, k)] = _fit_outcome(
                X[t == 1], y[t == 1], binary, cfg, y_rate, d, 'mu1 ' + where)
            models[('mu0', a, k)] = _fit_outcome(
                X[t == 0], y[t == 0], binary, cfg, y_rate, d, 'mu0 ' + where)
            models[('p1', a, k)] = _fit_probability(X, t, cfg, t_rate, d, 'p1 ' + where)
            membership = (ds.group_codes[train] == ds.group_index(a)).astype(float)
            group_models[(a, k)] = _fit_probability(
                X_train, membership, cfg, 0.5, d, 'membership ' + where)

    not_converged = [key for key, model in models.items() if not model.converged]
    if not_converged:
        logger.warning('%d nuisance models did not converge, first %r',
                       len(not_converged), not_converged[0])
    return FittedBundle(models, group_models, ds.group_set, ds.group_frequencies(),
                        clip=cfg.clip, folds=cfg.folds, fold_of_row=fold_of_row,
                        training_fingerprint=ds.fingerprint())


def _model_section(model: LinearModel) -> Dict[str, str]:
    return {'link': model.link,
            'weights': ','.join(FLOAT_FORMAT % w for w in model.weights),
            'converged': str(model.converged).lower(),
            'n_iter': str(model.n_iter)}


def export_bundle(bundle: NuisanceBundle, output_path: str) -> None:
    """Write a fitted bundle as plain-text weight tables.

    The ``[bundle]`` section holds clip, folds, groups and fold assignment; each model
    has a ``[model NAME GROUP FOLD]`` section, each membership model a
    ``[membership GROUP FOLD]`` section.
    """
    if not isinstance(bundle, FittedBundle):
        raise DomainError('only fitted bundles can be exported, got %r' % bundle)
    parser = configparser.RawConfigParser()
    parser.optionxform = str
    parser['bundle'] = {
        'clip': FLOAT_FORMAT % bundle.clip,
        'folds': str(bundle.folds),
        'groups': ','.join(bundle.group_set),
        'group_freq': ','.join(FLOAT_FORMAT % f for f in bundle.group_freq.values()),
        'fingerprint': bundle.training_fingerprint,
        'fold_of_row': ','.join(str(f) for f in bundle.fold_of_row),
    }
    for a in bundle.group_set:
        for k in range(bundle.folds):
            for name in NUISANCE_NAMES:
                parser['model %s %s %d' % (name, a, k)] = \
                    _model_section(bundle.models[(name, a, k)])
            parser['membership %s %d' % (a, k)] = _model_section(bundle.group_models[(a, k)])
    buffer = io.StringIO()
    parser.write(buffer)
    atomic_write_text(output_path, buffer.getvalue())


def _read_model(section) -> LinearModel:
    weights = [float(w) for w in section['weights'].split(',')]
    return LinearModel(weights, section['link'],
                       converged=str_to_bool(section.get('converged', 'true')),
                       n_iter=int(section.get('n_iter', '0')))


def import_bundle(path: str) -> FittedBundle:
    """Read a bundle written by ``export_bundle``."""
    parser = configparser.RawConfigParser()
    parser.optionxform = str
    with open(path, encoding='utf8') as fh:
        parser.read_file(fh)
    if not parser.has_section('bundle'):
        raise DomainError('%s has no [bundle] section' % path)
    header = parser['bundle']
    groups = header['groups'].split(',')
    freqs = [float(f) for f in header['group_freq'].split(',')]
    folds = int(header['folds'])
    fold_text = header.get('fold_of_row', '')
    fold_of_row = np.array([int(f) for f in fold_text.split(',')] if fold_text else [],
                           dtype=int)

    models = {}
    group_models = {}
    for name in parser.sections():
        parts = name.split()
        if parts[0] == 'model' and len(parts) == 4:
            models[(parts[1], parts[2], int(parts[3]))] = _read_model(parser[name])
        elif parts[0] == 'membership' and len(parts) == 3:
            group_models[(parts[1], int(parts[2]))] = _read_model(parser[name])
    missing = [(n, a, k) for a in groups for k in range(folds) for n in NUISANCE_NAMES
               if (n, a, k) not in models]
    if missing:
        raise DomainError('%s lacks models %r' % (path, missing[:3]))
    return FittedBundle(models, group_models, groups, dict(zip(groups, freqs)),
                        clip=float(header['clip']), folds=folds, fold_of_row=fold_of_row,
                        training_fingerprint=header.get('fingerprint', ''))
