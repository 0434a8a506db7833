"""Utility functions for cleaning, encoding and hashing data moving through the pipeline."""
import hashlib
import json
import logging
import os

import pandas as pd

logger = logging.getLogger(__name__)


def tidy_columns(df, mapping=None):
    """Clean and standardize DataFrame column names."""
    df.columns = [x.lower().strip().replace(' ', '_') for x in df.columns]
    if mapping:
        df = df.rename(columns=mapping)
    return df


def clean_column(value, exclusions=None):
    """Map NA tokens (and float NaN) to None; leave everything else untouched."""
    if isinstance(value, str) and value.strip().upper() in (exclusions or ()):
        return None
    if isinstance(value, float) and pd.isna(value):
        return None
    return value


def encode_cell(value):
    """Encode a list/dict survey cell as compact JSON."""
    return json.dumps(value, separators=(',', ':'), sort_keys=True)


def decode_cell(text):
    """Decode a JSON survey cell."""
    return json.loads(text)


def ensure_dir(path):
    """Create `path` (and parents) if needed and return it."""
    os.makedirs(path, exist_ok=True)
    return path


def write_frame(df, path, index=True):
    """Write a DataFrame to CSV with lossless float formatting."""
    ensure_dir(os.path.dirname(path) or '.')
    df.to_csv(path, index=index, float_format='%.17g', lineterminator='\n')
    logger.debug("Wrote %d rows to %s", len(df), path)
    return path


def read_frame(path, index_col=0, parse_index=True):
    """Read a CSV written by `write_frame`, floats parsed round-trip exact."""
    df = pd.read_csv(path, index_col=index_col, float_precision='round_trip')
    if parse_index and index_col is not None:
        df.index = pd.to_datetime(df.index)
    return df


def file_sha256(path):
    """Hex SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def frame_digest(df):
    """Stable content hash of a DataFrame (values, index and column names)."""
    hashed = pd.util.hash_pandas_object(df, index=True).values
    digest = hashlib.sha256(hashed.tobytes())
    digest.update('|'.join(map(str, df.columns)).encode('utf-8'))
    return digest.hexdigest()


def write_json(data, path):
    """Write JSON with sorted keys so identical content gives identical bytes."""
    ensure_dir(os.path.dirname(path) or '.')
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)
