import configparser
import os

import fsspec
import numpy as np
import pandas as pd

from .errors import ValidationError


def unique(iterable):
    return list(dict.fromkeys(iterable))


def format_float(value):
    """
    Shortest string that reads back to the same float (``repr``), used for every CSV float

    Parameters
    ----------
    value: float

    Returns
    -------
    str
    """
    value = float(value)
    if value == 0.0:
        # no '-0.0' in result files
        return '0.0'
    return repr(value)


def to_csv_text(frame):
    """
    Comma-separated values with a header row, '.' decimals and LF line endings. Floats are written
    with `format_float`, so reruns produce byte-identical text.

    Parameters
    ----------
    frame: pandas.DataFrame
        table to write, the index is dropped

    Returns
    -------
    str
    """
    text = frame.copy()
    for column in text.columns:
        if pd.api.types.is_float_dtype(text[column]):
            text[column] = text[column].map(format_float)
    return text.to_csv(index=False, lineterminator='\n')


def write_csv(frame, path):
    """Write `to_csv_text` of a table to a local path or fsspec URL"""
    with fsspec.open(path, 'w', newline='') as f:
        f.write(to_csv_text(frame))


def write_bytes(payload, path):
    with fsspec.open(path, 'wb') as f:
        f.write(payload)


def ensure_dir(path):
    """Create the directory `path` if needed and return it"""
    os.makedirs(path, exist_ok=True)
    return path


def read_config(path):
    """
    Read a ``key=value`` configuration file. Blank lines and ``#`` comments are ignored, keys are
    case insensitive and ``-`` in keys is read as ``_``.

    Parameters
    ----------
    path: str
        configuration file

    Returns
    -------
    dict
        values as strings
    """
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=('#',), delimiters=('=',))
    with fsspec.open(path, 'r') as f:
        content = f.read()
    try:
        parser.read_string('[config]\n' + content, source=path)
    except configparser.Error as exc:
        raise ValidationError(f"Invalid configuration file {path}: {exc}") from None
    return {key.replace('-', '_'): value.strip() for key, value in parser['config'].items()}


def parse_bounds(text):
    """
    Parse ``x_min,x_max,y_min,y_max``

    Returns
    -------
    (float, float, float, float)
    """
    try:
        bounds = tuple(float(v) for v in text.split(','))
    except ValueError:
        raise ValidationError(f"Bounds {text!r} are not numbers") from None
    if len(bounds) != 4:
        raise ValidationError(f"Bounds {text!r} must have 4 values x_min,x_max,y_min,y_max")
    if not np.isfinite(bounds).all() or bounds[0] >= bounds[1] or bounds[2] >= bounds[3]:
        raise ValidationError(f"Bounds {text!r} do not form a nonempty rectangle")
    return bounds
