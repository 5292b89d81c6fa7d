import logging
import os
from typing import IO, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from .spec import DGPCell, DGPSpec
from ..datasets import CostSpec, Dataset
from ..exceptions import DomainError, InfeasibleError, SpecError
from ..policies import BasePolicy, TabularPolicy
from ..utils import atomic_write_text, format_float


logger = logging.getLogger(__name__)

_ENUMERATION_CAP = 20
_CHUNK_BITS = 16
_TIE_TOLERANCE = 1e-12

EIGHT_CELL_PATH = os.path.join(os.path.dirname(__file__), 'data', 'eight_cell.txt')


def read_dgp_spec(source: Union[str, IO]) -> DGPSpec:
    """Read a DGP table: one cell per line, ``mass x... group e1 p11 p10 mu1 mu0``.

    An optional ``outcome bernoulli`` or ``outcome gaussian SIGMA`` line sets the
    outcome kind. Lines starting with ``#`` are comments.
    """
    if isinstance(source, str):
        with open(source, encoding='utf-8') as fh:
            text = fh.read()
    else:
        text = source.read()
    outcome_kind, sigma = 'bernoulli', 1.0
    cells = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split('#', 1)[0].split()
        if not tokens:
            continue
        if tokens[0] == 'outcome':
            outcome_kind = tokens[1] if len(tokens) > 1 else ''
            if outcome_kind == 'gaussian':
                sigma = float(tokens[2]) if len(tokens) > 2 else 1.0
            continue
        if len(tokens) < 8:
            raise SpecError('line %d: expected mass, covariates, group, e1, p11, p10, mu1, mu0'
                            % lineno)
        try:
            mass = float(tokens[0])
            x = tuple(float(v) for v in tokens[1:-6])
            e1, p11, p10, mu1, mu0 = (float(v) for v in tokens[-5:])
        except ValueError as e:
            raise SpecError('line %d: %s' % (lineno, e))
        cells.append(DGPCell(x, tokens[-6], mass, e1, p11, p10, mu1, mu0))
    return DGPSpec(cells, outcome_kind=outcome_kind, sigma=sigma)


def write_dgp_spec(spec: DGPSpec, output_path: str) -> None:
    lines = ['# mass x... group e1 p11 p10 mu1 mu0']
    if spec.outcome_kind == 'bernoulli':
        lines.append('outcome bernoulli')
    else:
        lines.append('outcome gaussian %s' % format_float(spec.sigma))
    for c in spec.cells:
        fields = [c.mass] + list(c.x)
        lines.append(' '.join([format_float(v) for v in fields] + [c.a] +
                              [format_float(v) for v in (c.e1, c.p11, c.p10, c.mu1, c.mu0)]))
    atomic_write_text(output_path, '\n'.join(lines) + '\n')


def eight_cell_spec() -> DGPSpec:
    """The built-in two-group, eight-cell process."""
    return read_dgp_spec(EIGHT_CELL_PATH)


def random_dgp_spec(n_cells: int, seed: int, groups: Sequence[str] = ('a', 'b'),
                    outcome_kind: str = 'bernoulli', sigma: float = 1.0,
                    monotone: bool = True, resolution: int = 100) -> DGPSpec:
    """Draw a random process with cells spread evenly over ``groups``.

    Cell k has covariate ``k // len(groups)`` and group ``groups[k % len(groups)]``, so
    every covariate value is shared across groups. Masses are multiples of
    ``1 / resolution`` and at least one unit each.

    Parameters
    ----------
    n_cells : int
    seed : int
    groups : sequence of str
    outcome_kind : str
    sigma : float
    monotone : bool
        If True, ``p11 >= p10`` in every cell.
    resolution : int
        Mass granularity.
    """
    if n_cells < 1 or resolution < n_cells:
        raise SpecError('need 1 <= n_cells <= resolution')
    rng = np.random.default_rng(seed)
    raw = rng.dirichlet(np.full(n_cells, 2.0)) * (resolution - n_cells)
    units = np.floor(raw).astype(int) + 1
    remainder = resolution - units.sum()
    units[np.argsort(-(raw - np.floor(raw)), kind='stable')[:remainder]] += 1
    masses = units / resolution
    e1 = np.round(rng.uniform(0.2, 0.8, n_cells), 2)
    p10 = np.round(rng.uniform(0.05, 0.5, n_cells), 2)
    if monotone:
        p11 = np.round(p10 + rng.uniform(0.0, 0.45, n_cells), 2)
    else:
        p11 = np.round(rng.uniform(0.05, 0.95, n_cells), 2)
    mu1 = np.round(rng.uniform(0.1, 0.9, n_cells), 2)
    mu0 = np.round(rng.uniform(0.1, 0.9, n_cells), 2)
    cells = [DGPCell((float(k // len(groups)),), groups[k % len(groups)], masses[k],
                     e1[k], p11[k], p10[k], mu1[k], mu0[k]) for k in range(n_cells)]
    return DGPSpec(cells, outcome_kind=outcome_kind, sigma=sigma)


def generate(spec: DGPSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` i.i.d. rows; identical seeds give identical datasets.

    Parameters
    ----------
    spec : DGPSpec
    n : int
        Number of rows, at least 1.
    seed : int
        Seed of the random generator (any 64-bit integer).

    Returns
    -------
    Dataset
    """
    if n < 1:
        raise SpecError('n must be at least 1, got %r' % n)
    rng = np.random.default_rng(seed)
    masses = spec.masses
    cell = rng.choice(spec.n_cells, size=n, p=masses / masses.sum())
    r = (rng.random(n) < spec.e1[cell]).astype(int)
    responsivity = np.where(r == 1, spec.p11[cell], spec.p10[cell])
    t = (rng.random(n) < responsivity).astype(int)
    mean_outcome = np.where(t == 1, spec.mu1[cell], spec.mu0[cell])
    if spec.outcome_kind == 'bernoulli':
        y = (rng.random(n) < mean_outcome).astype(float)
    else:
        y = mean_outcome + spec.sigma * rng.standard_normal(n)
    labels = np.array(spec.group_labels, dtype=object)[cell]
    logger.debug('generated %d rows from %d cells (seed %d)', n, spec.n_cells, seed)
    return Dataset(spec.X[cell], labels, r, t, y, group_set=spec.group_set)


def _split_count(total: int, probability: float) -> Tuple[int, int]:
    ones = int(np.floor(total * probability + 0.5))
    return total - ones, ones


def population_dataset(spec: DGPSpec, n: int) -> Dataset:
    """Expected-count dataset: every cell receives ``round(mass * n)`` rows.

    Within a cell, R, T and (Bernoulli) Y are split by rounded expected counts;
    Gaussian outcomes are set to their means. When ``mass * n`` is integral for every
    cell, empirical cell frequencies equal the masses exactly.
    """
    expected = spec.masses * n
    counts = np.floor(expected + 0.5).astype(int)
    if np.any(np.abs(expected - counts) > 1e-9):
        logger.warning('cell counts are rounded; empirical frequencies differ from masses')
    rows = []
    for k, c in enumerate(spec.cells):
        n0, n1 = _split_count(counts[k], c.e1)
        for r, n_r in ((0, n0), (1, n1)):
            m0, m1 = _split_count(n_r, c.p11 if r == 1 else c.p10)
            for t, n_t in ((0, m0), (1, m1)):
                mean_outcome = c.mu1 if t == 1 else c.mu0
                if spec.outcome_kind == 'bernoulli':
                    y0, y1 = _split_count(n_t, mean_outcome)
                    rows.extend([(k, r, t, 0.0)] * y0 + [(k, r, t, 1.0)] * y1)
                else:
                    rows.extend([(k, r, t, mean_outcome)] * n_t)
    if not rows:
        raise SpecError('n is too small for any cell to receive a row')
    cell = np.array([row[0] for row in rows])
    labels = np.array(spec.group_labels, dtype=object)[cell]
    return Dataset(spec.X[cell], labels, [row[1] for row in rows], [row[2] for row in rows],
                   [row[3] for row in rows], group_set=spec.group_set)


def _cell_value_terms(spec: DGPSpec, cost: CostSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Per-cell utility under r=0 and r=1."""
    m0 = (1 - spec.p10) * (cost.w_y * spec.mu0) \
        + spec.p10 * (cost.w_y * spec.mu1 + cost.w_t)
    m1 = (1 - spec.p11) * (cost.w_y * spec.mu0 + cost.w_r) \
        + spec.p11 * (cost.w_y * spec.mu1 + cost.w_t + cost.w_r)
    return m0, m1


def oracle_value(spec: DGPSpec, policy: BasePolicy, cost: CostSpec) -> float:
    """Exact expected utility of ``policy``, summed over cells.

    Returns
    -------
    float
        ``Σ_c mass_c Σ_r π_r Σ_t p_{t|r} (w_y μ_t + w_t t + w_r r)``.
    """
    pi1 = policy.propensity(spec.cell_dataset())
    m0, m1 = _cell_value_terms(spec, cost)
    return float(np.sum(spec.masses * ((1 - pi1) * m0 + pi1 * m1)))


def oracle_takeup(spec: DGPSpec, policy: BasePolicy, group: str) -> float:
    """Exact ``E[T(π) | A=group]``."""
    labels = np.array(spec.group_labels)
    in_group = labels == group
    if not in_group.any():
        raise DomainError('group %r is not in the DGP (groups: %s)' % (group, spec.group_set))
    pi1 = policy.propensity(spec.cell_dataset())
    takeup = pi1 * (spec.p11 - spec.p10) + spec.p10
    masses = spec.masses[in_group]
    return float(np.sum(masses * takeup[in_group]) / masses.sum())


def _two_groups(spec: DGPSpec, groups: Optional[Sequence[str]]) -> Tuple[str, str]:
    if groups is None:
        if len(spec.group_set) != 2:
            raise DomainError('exactly two groups are required, the DGP has %s'
                              % spec.group_set)
        groups = spec.group_set
    a, b = groups
    return a, b


def oracle_constrained_optimum(spec: DGPSpec, cost: CostSpec, eps: float,
                               groups: Optional[Sequence[str]] = None
                               ) -> Tuple[TabularPolicy, float]:
    """Best deterministic policy with ``E[T|A=a] − E[T|A=b] <= eps``, by enumeration.

    Ties go to fewer recommendations, then to the lexicographically smallest set of
    recommended cell indices.

    Parameters
    ----------
    spec : DGPSpec
        At most 20 cells.
    cost : CostSpec
    eps : float
    groups : (a, b), optional
        Defaults to the two groups of the DGP in sorted order.

    Returns
    -------
    (TabularPolicy, float)
    """
    if spec.n_cells > _ENUMERATION_CAP:
        raise DomainError('enumeration is limited to %d cells, the DGP has %d'
                          % (_ENUMERATION_CAP, spec.n_cells))
    a, b = _two_groups(spec, groups)
    labels = np.array(spec.group_labels)
    masses = spec.masses
    weight = np.where(labels == a, 1 / masses[labels == a].sum(), 0.0) \
        - np.where(labels == b, 1 / masses[labels == b].sum(), 0.0)
    lift = spec.p11 - spec.p10
    m0, m1 = _cell_value_terms(spec, cost)
    value_base = float(np.sum(masses * m0))
    value_gain = masses * (m1 - m0)
    disparity_base = float(np.sum(masses * weight * spec.p10))
    disparity_gain = masses * weight * lift

    n_cells = spec.n_cells
    n_policies = 1 << n_cells
    chunk = 1 << min(_CHUNK_BITS, n_cells)
    bit_values = (1 << np.arange(n_cells)).astype(np.int64)
    best_value = -np.inf
    candidates = []
    min_disparity, max_disparity = np.inf, -np.inf
    for start in range(0, n_policies, chunk):
        codes = np.arange(start, min(start + chunk, n_policies), dtype=np.int64)
        bits = ((codes[:, None] & bit_values[None, :]) > 0).astype(float)
        values = value_base + bits @ value_gain
        disparities = disparity_base + bits @ disparity_gain
        min_disparity = min(min_disparity, disparities.min())
        max_disparity = max(max_disparity, disparities.max())
        feasible = disparities <= eps + _TIE_TOLERANCE
        if not feasible.any():
            continue
        chunk_best = values[feasible].max()
        if chunk_best > best_value + _TIE_TOLERANCE:
            candidates = [c for c in candidates if c[1] >= chunk_best - _TIE_TOLERANCE]
        best_value = max(best_value, chunk_best)
        keep = feasible & (values >= best_value - _TIE_TOLERANCE)
        candidates.extend(zip(codes[keep].tolist(), values[keep].tolist()))

    if not candidates:
        raise InfeasibleError('eps=%g is below the smallest attainable disparity' % eps,
                              (float(min_disparity), float(max_disparity)))
    top = max(value for _, value in candidates)
    candidates = [code for code, value in candidates if value >= top - _TIE_TOLERANCE]

    def tie_key(code):
        members = tuple(k for k in range(n_cells) if code >> k & 1)
        return len(members), members

    code = min(candidates, key=tie_key)
    decisions = [(code >> k) & 1 for k in range(n_cells)]
    policy = TabularPolicy({(c.x, c.a): r for c, r in zip(spec.cells, decisions)})
    value = value_base + float(np.dot(decisions, value_gain))
    logger.info('enumeration optimum at eps=%g: value %.6f, %d cells recommended',
                eps, value, sum(decisions))
    return policy, value


def oracle_randomized_optimum(spec: DGPSpec, cost: CostSpec, eps: float,
                              groups: Optional[Sequence[str]] = None
                              ) -> Tuple[np.ndarray, float]:
    """Best randomized cell policy with ``E[T|A=a] − E[T|A=b] <= eps``, by LP.

    Every cell gets a recommendation probability in [0, 1]. The optimum bounds
    the enumeration optimum from above and is what a threshold rule that
    randomizes on its breakpoint cells attains.

    Returns
    -------
    (numpy.ndarray, float)
        Per-cell recommendation probabilities and the optimal value.
    """
    a, b = _two_groups(spec, groups)
    labels = np.array(spec.group_labels)
    masses = spec.masses
    weight = np.where(labels == a, 1 / masses[labels == a].sum(), 0.0) \
        - np.where(labels == b, 1 / masses[labels == b].sum(), 0.0)
    m0, m1 = _cell_value_terms(spec, cost)
    disparity_base = float(np.sum(masses * weight * spec.p10))
    result = linprog(-masses * (m1 - m0),
                     A_ub=[masses * weight * (spec.p11 - spec.p10)],
                     b_ub=[eps - disparity_base],
                     bounds=[(0.0, 1.0)] * spec.n_cells, method='highs')
    if result.status == 2:
        raise InfeasibleError('eps=%g is below the smallest attainable disparity' % eps)
    if result.status != 0:
        raise DomainError('the linear program failed: %s' % result.message)
    value = float(np.sum(masses * m0) - result.fun)
    logger.info('randomized optimum at eps=%g: value %.6f', eps, value)
    return np.clip(result.x, 0.0, 1.0), value
