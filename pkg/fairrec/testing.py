import inspect
import logging
import os
import shutil
import tempfile
import unittest
from typing import Optional, Sequence

import numpy as np

import fairrec
from fairrec.datasets import Dataset
from fairrec.dgp import DGPCell, DGPSpec
from fairrec.nuisance import OracleBundle


class TestBase(unittest.TestCase):
    """Base class for tests

    Every test runs in a fresh temporary working directory and starts from the
    default numerical settings of ``fairrec.config``.
    """

    logger = logging.getLogger("unit_tests")

    def setUp(self, n_levels: int = 1):
        """Setup variables and temporary directories.

        In particular, this methods:

        * creates a temporary working directory and changes into it
        * figures out a path to the static test files
        * remembers the numerical defaults so tests may change them

        Parameters
        ----------
        n_levels : int
            Number of nested directories the test is in. Necessary to resolve the path to the
            ``files`` directory, which is located directly under the ``tests`` directory.
        """
        self.maxDiff = None
        self.static_files_dir = None
        abspath_this_file = os.path.abspath(inspect.getfile(self.__class__))
        static_files_dir = os.path.dirname(abspath_this_file)
        for _ in range(n_levels):
            static_files_dir = os.path.abspath(os.path.join(static_files_dir, '..'))
        if 'files' in os.listdir(static_files_dir):
            self.static_files_dir = os.path.join(static_files_dir, 'files')

        self.cwd = os.getcwd()
        self.workdir = tempfile.mkdtemp(prefix=self.id().rsplit('.', 1)[-1] + '-')
        os.chdir(self.workdir)
        self.defaults = fairrec.config.get_defaults()

    def tearDown(self):
        os.chdir(self.cwd)
        shutil.rmtree(self.workdir, ignore_errors=True)
        for name, value in self.defaults.items():
            setattr(fairrec.config, name, value)

    def static_file(self, name: str) -> str:
        if self.static_files_dir is None:
            raise ValueError('Cannot find the static test files!')
        return os.path.join(self.static_files_dir, name)

    def assertWithinSE(self, estimate, truth: float, k: float = 3.0, msg: Optional[str] = None):
        """Assert ``|estimate.point - truth| <= k * estimate.standard_error``."""
        deviation = abs(estimate.point - truth)
        bound = k * estimate.standard_error
        if not deviation <= bound:
            self.fail(msg or '%s: %.6g is %.3g SE away from %.6g'
                      % (estimate.name, estimate.point,
                         deviation / estimate.standard_error, truth))


def cell_spec(cells: Sequence[tuple], outcome_kind: str = 'bernoulli',
              sigma: float = 1.0) -> DGPSpec:
    """DGP from tuples ``(x, a, mass, e1, p11, p10, mu1, mu0)``; scalar x is allowed."""
    return DGPSpec([DGPCell(c[0] if isinstance(c[0], tuple) else (c[0],), *c[1:])
                    for c in cells], outcome_kind, sigma)


def single_cell_spec(e1: float = 0.5, p11: float = 0.8, p10: float = 0.0, mu1: float = 1.0,
                     mu0: float = 0.0, a: str = 'a') -> DGPSpec:
    return cell_spec([(0.0, a, 1.0, e1, p11, p10, mu1, mu0)])


def rows(X, groups, r, t, y, group_set: Optional[Sequence[str]] = None) -> Dataset:
    """Small hand-written dataset."""
    return Dataset(np.asarray(X, dtype=float), groups, r, t, y, group_set=group_set)


def oracle(spec: DGPSpec, clip: float = 0.0) -> OracleBundle:
    """Unclipped oracle nuisances, for exact hand computations."""
    return OracleBundle(spec, clip=clip)


def two_group_spec(lift_a: float = 0.5, p10_a: float = 0.2, lift_b: float = 0.3,
                   p10_b: float = 0.1, mu1: float = 0.7, mu0: float = 0.4,
                   mass_a: float = 0.5) -> DGPSpec:
    """One cell per group sharing the covariate value 0."""
    return cell_spec([(0.0, 'a', mass_a, 0.5, p10_a + lift_a, p10_a, mu1, mu0),
                      (0.0, 'b', 1.0 - mass_a, 0.5, p10_b + lift_b, p10_b, mu1, mu0)])
