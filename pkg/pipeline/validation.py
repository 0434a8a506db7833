"""Validation checks for survey tables and time series."""
import logging

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def check_required_columns(df: pd.DataFrame, required, label: str = "data"):
    """Required columns absent from `df`, in the order given."""
    missing = [col for col in required if col not in df.columns]
    if missing:
        logger.error("Missing required columns in %s: %s", label, missing)
    else:
        logger.info("All required columns present in %s.", label)
    return missing


def check_dwelling_ids(records, label: str = "survey"):
    """Duplicate dwelling ids in a record list; returns the duplicated ids."""
    ids = pd.Series([r.dwelling_id for r in records], dtype=object)
    duplicated = sorted(set(ids[ids.duplicated()]))
    if duplicated:
        logger.warning("%d duplicate dwelling ids found in %s: %s", len(duplicated), label, duplicated[:10])
    else:
        logger.info("All dwelling ids in %s are unique.", label)
    return duplicated


def check_time_grid(index: pd.DatetimeIndex, step_seconds: int, label: str = "series"):
    """True when `index` is strictly increasing with a uniform step."""
    if len(index) < 2:
        return True
    deltas = np.diff(index.asi8) // 10**9
    uniform = bool(np.all(deltas == step_seconds))
    if not uniform:
        bad = int(np.argmax(deltas != step_seconds))
        logger.error("Non-uniform time grid in %s at position %d (step %ds)", label, bad + 1, deltas[bad])
    return uniform
