"""Learning dataset: one row per (dwelling, step) built from simulation results, labels and survey answers."""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from pipeline.data_utils import frame_digest
from pipeline.labels import UNKNOWN
from pipeline.survey import DWELLING_ROOMS, DwellingType

logger = logging.getLogger(__name__)

CANONICAL_ROOMS = DWELLING_ROOMS[DwellingType.MOZART_HOUSE]
ROOM_FEATURES = ('t_mr', 't_air', 'q')
SCALAR_FEATURES = ('t_op_pres', 't_out', 'avg_age', 'gender_ratio', 'presence')
FEATURE_COLUMNS = tuple(f"{room}.{q}" for room in CANONICAL_ROOMS for q in ROOM_FEATURES) + SCALAR_FEATURES
TARGET = 'target'


class DatasetError(ValueError):
    pass


@dataclass(eq=False)
class Dataset:
    """Rows indexed by (dwelling_id, timestamp), sorted; FEATURE_COLUMNS plus TARGET."""
    frame: pd.DataFrame

    def __len__(self):
        return len(self.frame)

    @property
    def features(self):
        return list(FEATURE_COLUMNS)

    @property
    def dwelling_ids(self):
        return list(self.frame.index.get_level_values(0).unique())

    def X(self):
        return self.frame[list(FEATURE_COLUMNS)].to_numpy(dtype=float)

    def y(self):
        return self.frame[TARGET].to_numpy(dtype=int)

    def sequences(self):
        """(dwelling_id, frame) pairs in time order."""
        return [(dwelling_id, group.droplevel(0)) for dwelling_id, group in self.frame.groupby(level=0, sort=True)]

    def subset(self, dwelling_ids=None, positions=None):
        if positions is not None:
            return Dataset(self.frame.iloc[np.sort(positions)])
        mask = self.frame.index.get_level_values(0).isin(list(dwelling_ids))
        return Dataset(self.frame[mask])

    def digest(self):
        return frame_digest(self.frame)

    def class_counts(self):
        return {int(k): int(v) for k, v in self.frame[TARGET].value_counts().sort_index().items()}


def _dwelling_rows(result, labels, record):
    if not result.index.equals(labels.index):
        raise DatasetError(f"{result.dwelling_id}: label grid does not match simulation grid")
    rooms = result.rooms
    t_air, t_mr = result.room_frame('t_air'), result.room_frame('t_mr')
    q = result.room_frame('q_conv') + result.room_frame('q_rad')
    mean_air, mean_mr = t_air.mean(axis=1), t_mr.mean(axis=1)

    columns = {}
    for room in CANONICAL_ROOMS:
        if room in rooms:
            columns[f"{room}.t_mr"] = t_mr[room]
            columns[f"{room}.t_air"] = t_air[room]
            columns[f"{room}.q"] = q[room]
        else:
            columns[f"{room}.t_mr"] = mean_mr
            columns[f"{room}.t_air"] = mean_air
            columns[f"{room}.q"] = pd.Series(0.0, index=result.index)

    t_op_pres = labels['t_op_pres']
    columns['t_op_pres'] = t_op_pres.fillna(result.room_frame('t_op').mean(axis=1))
    columns['t_out'] = result.frame['t_out']
    columns['avg_age'] = pd.Series(float(record.avg_age), index=result.index)
    columns['gender_ratio'] = pd.Series(float(record.gender_ratio), index=result.index)
    columns['presence'] = (result.room_frame('presence').sum(axis=1) > 0).astype(float)
    columns[TARGET] = labels['code'].astype(int)

    frame = pd.DataFrame(columns, index=result.index)
    frame.index = pd.MultiIndex.from_product([[result.dwelling_id], frame.index], names=['dwelling_id', 'timestamp'])
    return frame


def assemble_dataset(results, labels, records):
    """
    `results`, `labels` (frames with 'code' and 't_op_pres') and `records`
    (SurveyRecord) are dicts keyed by dwelling id. Rows are ordered by
    dwelling id, then time.
    """
    frames = []
    for dwelling_id in sorted(results):
        if dwelling_id not in labels:
            raise DatasetError(f"{dwelling_id}: no label series")
        if dwelling_id not in records:
            raise DatasetError(f"{dwelling_id}: no survey record")
        frames.append(_dwelling_rows(results[dwelling_id], labels[dwelling_id], records[dwelling_id]))
    if not frames:
        raise DatasetError("no dwelling to assemble")
    frame = pd.concat(frames)
    if frame[list(FEATURE_COLUMNS)].isna().any().any():
        raise DatasetError("assembled dataset has missing feature values")
    dataset = Dataset(frame)
    logger.info("Assembled %d rows from %d dwellings (%d unknown)", len(dataset), len(frames),
                int((frame[TARGET] == UNKNOWN).sum()))
    return dataset


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.6, 0.2, 0.2)
    mode: str = 'by_step'
    seed: int = 0

    def __post_init__(self):
        if len(self.fractions) != 3 or abs(sum(self.fractions) - 1.0) > 1e-9 or min(self.fractions) <= 0:
            raise ValueError(f"fractions must be three positive values summing to 1, got {self.fractions}")
        if self.mode not in ('by_step', 'by_dwelling'):
            raise ValueError(f"unknown split mode '{self.mode}'")


def partition_sizes(n, fractions):
    """Train/validation/test sizes, each at least 1, rounding the first two."""
    n_train = max(1, int(round(fractions[0] * n)))
    n_val = max(1, int(round(fractions[1] * n)))
    if n - n_train - n_val < 1:
        n_train = n - n_val - 1
    return n_train, n_val, n - n_train - n_val


def split_dataset(dataset, spec):
    """Seeded shuffle of steps (by_step) or of whole dwellings (by_dwelling) into train/val/test."""
    rng = np.random.default_rng(spec.seed)
    if spec.mode == 'by_step':
        if len(dataset) < 3:
            raise DatasetError(f"cannot split {len(dataset)} rows into three partitions")
        order = rng.permutation(len(dataset))
        n_train, n_val, _ = partition_sizes(len(dataset), spec.fractions)
        parts = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
        return tuple(dataset.subset(positions=p) for p in parts)

    ids = dataset.dwelling_ids
    if len(ids) < 3:
        raise DatasetError(f"cannot split {len(ids)} dwellings into three partitions")
    order = [ids[i] for i in rng.permutation(len(ids))]
    n_train, n_val, _ = partition_sizes(len(ids), spec.fractions)
    parts = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
    return tuple(dataset.subset(dwelling_ids=p) for p in parts)
