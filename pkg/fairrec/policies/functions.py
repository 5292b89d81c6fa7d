import configparser
import logging

import numpy as np

from .policy import (
    BasePolicy,
    ConstantPolicy,
    LinearIndexPolicy,
    RandomizedPolicy,
    TabularPolicy,
)
from ..exceptions import DomainError
from ..utils import atomic_write_text


logger = logging.getLogger(__name__)


def write_policy(policy: BasePolicy, output_path: str) -> None:
    """Serialize a policy as plain text (class, parameters, mixture weights)."""
    atomic_write_text(output_path, policy.to_text())


def _policy_from_section(section) -> BasePolicy:
    kind = section.get('kind')
    if kind == 'constant':
        return ConstantPolicy(int(section.get('r')))
    if kind == 'linear_index':
        beta = [float(b) for b in section.get('beta').split(',')]
        return LinearIndexPolicy(beta, section.get('groups').split(','))
    if kind == 'tabular':
        decisions = {}
        for line in section.get('cells', '').splitlines():
            line = line.strip()
            if not line:
                continue
            x, a, r = line.split('|')
            key = tuple(float(v) for v in x.split(';')) if x else ()
            decisions[(key, a)] = int(r)
        return TabularPolicy(decisions, default=int(section.get('default', '0')))
    if kind == 'threshold':
        raise DomainError('Threshold policies depend on fitted nuisances and cannot be '
                          'read back from text')
    raise DomainError('Unknown policy kind %r' % kind)


def read_policy(source: str) -> BasePolicy:
    """Read a policy written by ``write_policy``.

    Parameters
    ----------
    source : str
        Path of the policy file.

    Returns
    -------
    BasePolicy
    """
    parser = configparser.RawConfigParser()
    with open(source, encoding='utf-8') as fh:
        parser.read_file(fh)
    head = parser['policy']
    if head.get('kind') != 'randomized':
        return _policy_from_section(head)
    n_components = int(head.get('components'))
    components = []
    for k in range(n_components):
        section = parser['component %d' % k]
        components.append((float(section.get('weight')), _policy_from_section(section)))
    weights = np.array([w for w, _ in components])
    # text round trip may perturb the last digit
    weights = weights / weights.sum()
    return RandomizedPolicy([(w, p) for w, (_, p) in zip(weights, components)])
