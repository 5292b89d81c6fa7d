import hashlib
import os

import numpy as np

from fairrec.exceptions import PyFairRecError
from fairrec.testing import TestBase
from fairrec.utils import (
    FLOAT_FORMAT,
    atomic_write_text,
    format_float,
    md5_of_arrays,
    md5_of_file,
    str_to_bool,
)


class TestUtils(TestBase):

    def test_format_float_round_trips(self):
        for value in (0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789):
            self.assertEqual(float(format_float(value)), value)
        self.assertEqual(FLOAT_FORMAT % 0.5, '0.5')

    def test_md5_of_arrays_hashes_layout(self):
        a = np.arange(6, dtype=float)
        self.assertEqual(md5_of_arrays([a]), md5_of_arrays([a.copy()]))
        self.assertNotEqual(md5_of_arrays([a]), md5_of_arrays([a.reshape(2, 3)]))
        self.assertNotEqual(md5_of_arrays([a]), md5_of_arrays([a.astype(np.float32)]))

    def test_atomic_write_text(self):
        atomic_write_text(os.path.join('nested', 'out.txt'), 'line\n')
        with open(os.path.join('nested', 'out.txt'), newline='') as fh:
            self.assertEqual(fh.read(), 'line\n')
        self.assertEqual(os.listdir('nested'), ['out.txt'])
        self.assertEqual(md5_of_file(os.path.join('nested', 'out.txt')),
                         hashlib.md5(b'line\n').hexdigest())

    def test_atomic_write_text_checksum(self):
        with self.assertRaisesRegex(PyFairRecError, 'unequal to the expected checksum'):
            atomic_write_text('out.txt', 'content', md5_checksum='0' * 32)
        self.assertFalse(os.path.exists('out.txt'))
        atomic_write_text('out.txt', 'content',
                          md5_checksum=hashlib.md5(b'content').hexdigest())
        self.assertTrue(os.path.exists('out.txt'))

    def test_str_to_bool(self):
        self.assertTrue(str_to_bool(' Yes '))
        self.assertFalse(str_to_bool('0'))
        with self.assertRaises(ValueError):
            str_to_bool('maybe')
