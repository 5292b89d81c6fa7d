import os
import hashlib
import tempfile
from typing import Iterable, Optional

import numpy as np

import fairrec.exceptions


# Enough significant digits for a float64 to survive a text round trip.
FLOAT_FORMAT = '%.17g'


def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def md5_of_arrays(arrays: Iterable[np.ndarray]) -> str:
    """ Compute an md5 digest over the raw bytes of several arrays.

    Shape and dtype are hashed alongside the data so arrays that only differ in
    layout do not collide.
    """
    md5 = hashlib.md5()
    for array in arrays:
        array = np.ascontiguousarray(array)
        md5.update(str(array.dtype).encode('utf-8'))
        md5.update(str(array.shape).encode('utf-8'))
        md5.update(array.tobytes())
    return md5.hexdigest()


def md5_of_file(path: str) -> str:
    md5 = hashlib.md5()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(65536), b''):
            md5.update(chunk)
    return md5.hexdigest()


def atomic_write_text(output_path: str,
                      content: str,
                      md5_checksum: Optional[str] = None,
                      encoding: str = 'utf8',
                      ) -> None:
    """ Write ``content`` to ``output_path`` through a temporary file and a rename.

    Readers never observe a half-written file. The content can be checked against an
    expected md5 checksum before it is moved into place.

    Parameters
    ----------
    output_path : str
        full path, including filename, of where the file should be stored.
    content : str
        Text to store.
    md5_checksum : str, optional (default=None)
        If not None, should be a string of hexidecimal digits of the expected digest value.
    encoding : str, optional (default='utf8')
        The encoding with which the file should be stored.
    """
    if md5_checksum is not None:
        md5 = hashlib.md5()
        md5.update(content.encode(encoding))
        if md5.hexdigest() != md5_checksum:
            raise fairrec.exceptions.PyFairRecError(
                'Checksum {} of content is unequal to the expected checksum {}.'
                .format(md5.hexdigest(), md5_checksum))

    directory = os.path.dirname(os.path.abspath(output_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp-',
                                    suffix=os.path.basename(output_path))
    try:
        # newline='' keeps the bytes identical across platforms
        with os.fdopen(fd, 'w', encoding=encoding, newline='') as fh:
            fh.write(content)
        os.replace(tmp_path, output_path)
    except BaseException:
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise


def str_to_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('not a boolean: %r' % value)
