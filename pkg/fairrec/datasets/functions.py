from collections import OrderedDict
import io
import logging
import os
from typing import IO, Optional, Union

import numpy as np
import pandas as pd

from .dataset import Dataset, DatasetSchema, ValidationReport
from ..exceptions import EmptyDatasetError, ParseError, SchemaError
from ..utils import FLOAT_FORMAT, atomic_write_text


logger = logging.getLogger(__name__)

_SCHEMA_KEYS = ('group', 'r', 't', 'y', 'covariates')


def read_schema(source: Union[str, IO]) -> DatasetSchema:
    """Parse a schema file of ``key=value`` lines.

    Parameters
    ----------
    source : str or file-like
        Path to the schema file or an open text stream.

    Returns
    -------
    DatasetSchema
    """
    if isinstance(source, str):
        with open(source, encoding='utf-8') as fh:
            text = fh.read()
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode('utf-8')

    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise SchemaError('schema line %d is not of the form key=value: %r' % (lineno, line))
        key, value = line.split('=', 1)
        key = key.strip()
        if key not in _SCHEMA_KEYS:
            raise SchemaError('schema line %d: unknown key %r' % (lineno, key))
        values[key] = value.strip()

    missing = [key for key in _SCHEMA_KEYS if not values.get(key)]
    if missing:
        raise SchemaError('schema does not name %s' % ', '.join(missing))
    covariates = [c.strip() for c in values['covariates'].split(',') if c.strip()]
    if not covariates:
        raise SchemaError('schema needs at least one covariate column')
    return DatasetSchema(values['group'], values['r'], values['t'], values['y'], covariates)


def _parse_float(value: str, row: int, column: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise ParseError('column %s: %r is not a number' % (column, value), row, column)
    if not np.isfinite(parsed):
        raise ParseError('column %s: %r is not finite' % (column, value), row, column)
    return parsed


def _parse_binary(values, column: str) -> np.ndarray:
    out = np.empty(len(values), dtype=int)
    for i, value in enumerate(values):
        parsed = _parse_float(value, i + 1, column)
        if parsed not in (0.0, 1.0):
            raise ParseError('column %s: %r is not in {0, 1}' % (column, value), i + 1, column)
        out[i] = int(parsed)
    return out


def _is_numeric(values) -> bool:
    try:
        parsed = np.array([float(v) for v in values])
    except ValueError:
        return False
    return bool(np.all(np.isfinite(parsed)))


def _decode(source) -> str:
    """Text of a path, bytes or stream; invalid UTF-8 is a ``ParseError`` naming its row."""
    if isinstance(source, str):
        with open(source, 'rb') as fh:
            raw = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    else:
        raw = source.read()
        if isinstance(raw, str):
            return raw
    try:
        return raw.decode('utf-8-sig')
    except UnicodeDecodeError as e:
        # the header is line 0, data rows count from 1
        row = raw[:e.start].count(b'\n')
        message = 'invalid UTF-8 byte 0x%02x at offset %d' % (raw[e.start], e.start)
        if row == 0:
            raise ParseError(message + ' in the header')
        raise ParseError(message, row)


def load_dataset(source: Union[str, IO], schema: Union[DatasetSchema, str, IO]) -> Dataset:
    """Read an encouragement dataset from CSV.

    Rows keep their file order. Non-numeric covariates are one-hot encoded over their
    levels in sorted order, the indicator columns being named ``column=level``.

    Parameters
    ----------
    source : str or file-like
        Path to a UTF-8 comma-delimited file with a header row, or a byte/text stream.
    schema : DatasetSchema, str or file-like
        Column roles, or a schema file to read them from.

    Returns
    -------
    Dataset
    """
    if not isinstance(schema, DatasetSchema):
        schema = read_schema(schema)
    text = _decode(source)

    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError('the input file is empty')
    frame.columns = [str(c).strip() for c in frame.columns]

    missing = [c for c in schema.columns if c not in frame.columns]
    if missing:
        raise SchemaError('columns %s named by the schema are missing from the file'
                          % ', '.join(repr(c) for c in missing))
    if len(frame) == 0:
        raise EmptyDatasetError('the input file has a header but no rows')

    for column in schema.columns:
        stripped = frame[column].str.strip()
        empty = np.flatnonzero((stripped == '').to_numpy())
        if len(empty):
            raise ParseError('column %s has a missing value' % column, int(empty[0]) + 1, column)
        frame[column] = stripped

    r = _parse_binary(frame[schema.r].tolist(), schema.r)
    t = _parse_binary(frame[schema.t].tolist(), schema.t)
    y = np.array([_parse_float(v, i + 1, schema.y)
                  for i, v in enumerate(frame[schema.y].tolist())])

    blocks = []
    names = []
    for column in schema.covariates:
        values = frame[column].tolist()
        if _is_numeric(values):
            blocks.append(np.array([float(v) for v in values]).reshape(-1, 1))
            names.append(column)
        else:
            levels = sorted(set(values))
            logger.debug('one-hot encoding %s over %d levels', column, len(levels))
            codes = np.array([levels.index(v) for v in values])
            blocks.append((codes[:, None] == np.arange(len(levels))[None, :]).astype(float))
            names.extend('%s=%s' % (column, level) for level in levels)

    groups = frame[schema.group].tolist()
    ds = Dataset(np.hstack(blocks), groups, r, t, y, covariate_names=names)
    logger.info('loaded %d rows, %d covariates, groups %s', ds.n, ds.d, ds.group_set)
    return ds


def write_dataset(ds: Dataset, output_path: str,
                  schema_path: Optional[str] = None,
                  group_column: str = 'group') -> DatasetSchema:
    """Write a dataset as CSV, numbers with 17 significant digits.

    Parameters
    ----------
    ds : Dataset
    output_path : str
        Destination of the CSV file.
    schema_path : str, optional
        If given, the matching schema file is written there.
    group_column : str
        Header of the group column.

    Returns
    -------
    DatasetSchema
        The schema under which ``load_dataset`` reads the file back.
    """
    reserved = {group_column, 'r', 't', 'y'}
    clash = reserved.intersection(ds.covariate_names)
    if clash:
        raise SchemaError('covariate names %s clash with reserved columns' % sorted(clash))

    columns = OrderedDict()
    columns[group_column] = ds.groups
    columns['r'] = ds.r
    columns['t'] = ds.t
    columns['y'] = ds.y
    for j, name in enumerate(ds.covariate_names):
        columns[name] = ds.X[:, j]
    frame = pd.DataFrame(columns)
    atomic_write_text(output_path, frame.to_csv(index=False, float_format=FLOAT_FORMAT))

    schema = DatasetSchema(group_column, 'r', 't', 'y', ds.covariate_names)
    if schema_path is not None:
        lines = ['group=%s' % schema.group, 'r=%s' % schema.r, 't=%s' % schema.t,
                 'y=%s' % schema.y, 'covariates=%s' % ','.join(schema.covariates)]
        atomic_write_text(schema_path, '\n'.join(lines) + '\n')
    logger.info('wrote %d rows to %s', ds.n, os.path.abspath(output_path))
    return schema


def validate(ds: Dataset) -> ValidationReport:
    """Count rows per group and per (r, t, a) cell and flag empty (r, a) strata.

    Parameters
    ----------
    ds : Dataset

    Returns
    -------
    ValidationReport
    """
    group_counts = OrderedDict()
    recommendation_rate = OrderedDict()
    cell_counts = OrderedDict()
    empty_strata = []
    empty_groups = []
    for code, a in enumerate(ds.group_set):
        in_group = ds.group_codes == code
        group_counts[a] = int(in_group.sum())
        if group_counts[a] == 0:
            empty_groups.append(a)
        else:
            recommendation_rate[a] = float(ds.r[in_group].mean())
        for r in (0, 1):
            stratum = in_group & (ds.r == r)
            for t in (0, 1):
                cell_counts[(r, t, a)] = int((stratum & (ds.t == t)).sum())
            if not stratum.any():
                empty_strata.append((r, a))
    for a in empty_groups:
        logger.warning('group %s has no rows', a)
    for stratum in empty_strata:
        logger.warning('stratum r=%d, a=%s has no rows', *stratum)
    return ValidationReport(group_counts, recommendation_rate, cell_counts, empty_strata,
                            empty_groups)
