"""
Comfort labels from the presence operative temperature.

A dwelling is labelled with a two-threshold hysteresis: it enters Discomfort
when the temperature drops to eps_min or below and only returns to Comfort
once it climbs to eps_max or above. The pair is chosen to minimise the number
of Comfort/Discomfort switches (then eps_max, then eps_min) under the
constraint that the longest Discomfort episode lasts at least the discomfort
duration the household reported. Steps nobody is home are Unknown; they are
skipped when measuring runs and freeze the hysteresis state.
"""
import logging
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd

from pipeline.data_utils import ensure_dir, write_json

logger = logging.getLogger(__name__)

COMFORT, DISCOMFORT, UNKNOWN = 0, 1, 2
LABEL_NAMES = ('Comfort', 'Discomfort', 'Unknown')
STEP = pd.Timedelta(seconds=1800)
ORACLE_MAX_LENGTH = 2000


class InfeasibleDiscomfortError(ValueError):
    """No threshold can produce a discomfort episode as long as required."""


@dataclass(frozen=True)
class ThresholdPair:
    eps_min: float
    eps_max: float
    provenance: str = ''

    def __post_init__(self):
        if not self.eps_max > self.eps_min:
            raise ValueError(f"eps_max ({self.eps_max}) must exceed eps_min ({self.eps_min})")


@dataclass(eq=False)
class LabelSeries:
    labels: pd.Series
    n_switch: int
    episodes: list
    dt_step: pd.Timedelta = STEP

    @property
    def longest_episode(self):
        return max(self.episodes, default=pd.Timedelta(0))

    def names(self):
        return self.labels.map(dict(enumerate(LABEL_NAMES)))


@dataclass
class OptimizationReport:
    eps0: float
    t_discomfort: pd.Timedelta
    candidates: list
    chosen: ThresholdPair
    n_switch: int
    longest_episode: pd.Timedelta
    single_threshold_n_switch: int
    fallback: bool = False
    constraints: dict = field(default_factory=dict)
    oracle_n_switch: int = None

    def to_dict(self):
        data = asdict(self)
        data['t_discomfort'] = self.t_discomfort.total_seconds()
        data['longest_episode'] = self.longest_episode.total_seconds()
        data['candidates'] = [asdict(c) for c in self.candidates]
        data['chosen'] = asdict(self.chosen)
        return data


# ---------------------------------------------------------------- helpers

def _seconds(value):
    if isinstance(value, pd.Timedelta):
        return value.total_seconds()
    if hasattr(value, 'total_seconds'):
        return value.total_seconds()
    return float(value)


def required_steps(t_discomfort, dt_step=STEP):
    """Smallest number of steps whose duration reaches t_discomfort."""
    return max(0, math.ceil(_seconds(t_discomfort) / _seconds(dt_step) - 1e-9))


def compress(series):
    """Defined values in time order (Unknown steps removed)."""
    values = np.asarray(series, dtype=float)
    return values[~np.isnan(values)]


def _runs(mask):
    """Lengths of the runs of True in a boolean array."""
    if mask.size == 0:
        return np.array([], dtype=int)
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    return np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)


def longest_run(values, threshold):
    runs = _runs(values <= threshold)
    return int(runs.max()) if runs.size else 0


# ---------------------------------------------------------------- presence operative temperature

def presence_op_temp(t_op, presence):
    """
    Presence-weighted mean of room operative temperatures, NaN (Unknown) when
    no room is occupied. Both frames have one column per room.
    """
    if len(t_op) != len(presence):
        raise ValueError(f"length mismatch: {len(t_op)} temperature rows, {len(presence)} presence rows")
    if set(t_op.columns) != set(presence.columns):
        raise ValueError("temperature and presence frames cover different rooms")
    weights = presence[list(t_op.columns)].to_numpy(dtype=float)
    temps = t_op.to_numpy(dtype=float)
    occupied = weights.sum(axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        value = np.where(occupied > 0, (weights * temps).sum(axis=1) / occupied, np.nan)
    return pd.Series(value, index=t_op.index, name='t_op_pres')


# ---------------------------------------------------------------- thresholds

def epsilon0(series, t_discomfort, dt_step=STEP):
    """
    Smallest observed value whose below-or-equal run reaches t_discomfort.
    The longest run grows with the threshold, so sorted values are bisected.
    """
    values = compress(series)
    if values.size == 0:
        raise ValueError("series has no defined value")
    needed = required_steps(t_discomfort, dt_step)
    if needed == 0:
        return float(values.min())
    if needed > values.size:
        raise InfeasibleDiscomfortError(
            f"required {needed} steps of discomfort but only {values.size} occupied steps exist")
    levels = np.unique(values)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if longest_run(values, levels[mid]) >= needed:
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


def local_minima(values, eps0):
    """Indices of local minima among values <= eps0 (strict on the left, non-strict on the right)."""
    masked = np.where(values <= eps0, values, np.inf)
    left = np.concatenate(([np.inf], masked[:-1]))
    right = np.concatenate((masked[1:], [np.inf]))
    return np.flatnonzero((values <= eps0) & (masked < left) & (masked <= right))


def candidate_pairs(series, eps0, t_discomfort, dt_step=STEP):
    """
    One pair per local minimum m of the values at or below eps0:
    eps_min = x[m], eps_max = max(x[m .. m + n_clu]) with n_clu the required
    steps; pairs with eps_max <= eps_min are dropped.
    """
    values = compress(series)
    n_clu = required_steps(t_discomfort, dt_step)
    pairs = []
    for m in local_minima(values, eps0):
        eps_min = float(values[m])
        eps_max = float(values[m:min(m + n_clu, len(values) - 1) + 1].max())
        if eps_max > eps_min:
            pairs.append(ThresholdPair(eps_min, eps_max, f"minimum@{m}"))
    return pairs


# ---------------------------------------------------------------- hysteresis

def _hysteresis_codes(values, eps_min, eps_max):
    """Discomfort flags over defined values, starting from Comfort."""
    event = np.where(values <= eps_min, 1, np.where(values >= eps_max, 0, -1))
    positions = np.where(event >= 0, np.arange(len(values)), -1)
    last = np.maximum.accumulate(positions) if len(values) else positions
    return np.where(last >= 0, event[np.maximum(last, 0)], 0).astype(bool)


def _score(discomfort):
    """(n_switch, longest episode in steps, episode lengths) of a compressed flag series."""
    if discomfort.size == 0:
        return 0, 0, np.array([], dtype=int)
    n_switch = int(np.count_nonzero(np.diff(discomfort.astype(np.int8)))) + int(discomfort[0])
    runs = _runs(discomfort)
    return n_switch, int(runs.max()) if runs.size else 0, runs


def apply_hysteresis(series, pair, dt_step=STEP):
    """Label a series (NaN = Unknown) with the pair's hysteresis."""
    raw = np.asarray(series, dtype=float)
    defined = ~np.isnan(raw)
    flags = _hysteresis_codes(raw[defined], pair.eps_min, pair.eps_max)
    codes = np.full(raw.shape, UNKNOWN, dtype=int)
    codes[defined] = np.where(flags, DISCOMFORT, COMFORT)
    n_switch, _, runs = _score(flags)
    index = series.index if isinstance(series, pd.Series) else None
    return LabelSeries(pd.Series(codes, index=index, name='label'), n_switch,
                       [dt_step * int(r) for r in runs], pd.Timedelta(dt_step))


def single_threshold_labels(series, eps0, dt_step=STEP):
    """Discomfort exactly where the value is at or below eps0."""
    raw = np.asarray(series, dtype=float)
    defined = ~np.isnan(raw)
    flags = raw[defined] <= eps0
    codes = np.full(raw.shape, UNKNOWN, dtype=int)
    codes[defined] = np.where(flags, DISCOMFORT, COMFORT)
    n_switch, _, runs = _score(flags)
    index = series.index if isinstance(series, pd.Series) else None
    return LabelSeries(pd.Series(codes, index=index, name='label'), n_switch,
                       [dt_step * int(r) for r in runs], pd.Timedelta(dt_step))


def _evaluate(values, eps_min, eps_max, needed):
    n_switch, longest, _ = _score(_hysteresis_codes(values, eps_min, eps_max))
    return n_switch, longest >= needed


def equivalent_pair(values, eps0, margin=0.1):
    """Hysteresis pair labelling observed values exactly like the single threshold eps0."""
    above = values[values > eps0]
    return ThresholdPair(float(eps0), float(above.min()) if above.size else float(eps0) + margin, 'eps0')


def refine_candidate(values, pair, needed):
    """
    Smallest observed eps_max above pair.eps_min reaching that eps_min's lowest
    feasible switch count. Switches never increase and episodes never shorten
    as eps_max grows, which makes the search a bisection.
    """
    levels = np.unique(values[values > pair.eps_min])
    if levels.size == 0:
        return None
    best_n, feasible = _evaluate(values, pair.eps_min, levels[-1], needed)
    if not feasible:
        return None
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        n_switch, ok = _evaluate(values, pair.eps_min, levels[mid], needed)
        if ok and n_switch <= best_n:
            hi = mid
        else:
            lo = mid + 1
    return ThresholdPair(pair.eps_min, float(levels[lo]), f"{pair.provenance}+refined")


def _key(n_switch, pair, position):
    return n_switch, pair.eps_max, pair.eps_min, position


def select_pair(candidates, series, t_discomfort, dt_step=STEP, eps0=None):
    """
    Pick the feasible candidate with the lexicographically smallest
    (n_switch, eps_max, eps_min). Without a feasible candidate, fall back to
    single-threshold eps0 labels and flag the report.
    """
    values = compress(series)
    needed = required_steps(t_discomfort, dt_step)
    eps0 = epsilon0(series, t_discomfort, dt_step) if eps0 is None else eps0
    single = single_threshold_labels(series, eps0, dt_step)

    best = None
    for position, pair in enumerate(candidates):
        if not pair.eps_max > pair.eps_min:
            continue
        n_switch, ok = _evaluate(values, pair.eps_min, pair.eps_max, needed)
        if ok and (best is None or _key(n_switch, pair, position) < best[0]):
            best = (_key(n_switch, pair, position), pair)

    if best is None:
        logger.warning("No feasible threshold pair among %d candidates; using single threshold %.3f",
                       len(candidates), eps0)
        pair = equivalent_pair(values, eps0)
        labels = single
        fallback = True
    else:
        pair = best[1]
        labels = apply_hysteresis(series, pair, dt_step)
        fallback = False

    report = OptimizationReport(
        eps0=float(eps0),
        t_discomfort=pd.Timedelta(seconds=_seconds(t_discomfort)),
        candidates=list(candidates),
        chosen=pair,
        n_switch=labels.n_switch,
        longest_episode=labels.longest_episode,
        single_threshold_n_switch=single.n_switch,
        fallback=fallback,
        constraints={
            'eps_max_gt_eps_min': bool(pair.eps_max > pair.eps_min),
            'longest_episode_ge_required': bool(labels.longest_episode.total_seconds() >= _seconds(t_discomfort)),
            'n_switch_le_single_threshold': bool(labels.n_switch <= single.n_switch),
        },
    )
    return pair, labels, report


def brute_force_thresholds(series, t_discomfort, dt_step=STEP, margin=0.1):
    """
    Exhaustive search over every ordered pair of observed values (and, when no
    discomfort is required, a pair below the minimum). Returns (pair, n_switch).
    """
    values = compress(series)
    if values.size > ORACLE_MAX_LENGTH:
        raise ValueError(f"oracle limited to {ORACLE_MAX_LENGTH} defined steps, got {values.size}")
    needed = required_steps(t_discomfort, dt_step)
    levels = np.unique(values)
    pairs = [ThresholdPair(float(lo), float(hi)) for i, lo in enumerate(levels) for hi in levels[i + 1:]]
    if needed == 0 and levels.size:
        pairs.append(ThresholdPair(float(levels[0]) - margin, float(levels[0]), 'below-minimum'))
    best = None
    for position, pair in enumerate(pairs):
        n_switch, ok = _evaluate(values, pair.eps_min, pair.eps_max, needed)
        if ok and (best is None or _key(n_switch, pair, position) < best[0]):
            best = (_key(n_switch, pair, position), pair, n_switch)
    if best is None:
        raise InfeasibleDiscomfortError("no pair of observed values satisfies the duration constraint")
    return best[1], best[2]


# ---------------------------------------------------------------- per dwelling

def label_series(series, t_discomfort, dt_step=STEP, refine=True, margin=0.1, check_optimality=False):
    """Full threshold search for one presence operative temperature series."""
    values = compress(series)
    needed = required_steps(t_discomfort, dt_step)
    eps0 = epsilon0(series, t_discomfort, dt_step)
    candidates = candidate_pairs(series, eps0, t_discomfort, dt_step)
    candidates.append(equivalent_pair(values, eps0, margin))
    if needed == 0:
        candidates.append(ThresholdPair(float(values.min()) - margin, float(values.min()), 'below-minimum'))
    if refine:
        refined = [refine_candidate(values, pair, needed) for pair in candidates]
        candidates.extend(pair for pair in refined if pair is not None and pair not in candidates)

    pair, labels, report = select_pair(candidates, series, t_discomfort, dt_step, eps0)
    if check_optimality and values.size <= ORACLE_MAX_LENGTH:
        _, report.oracle_n_switch = brute_force_thresholds(series, t_discomfort, dt_step, margin)
        if report.oracle_n_switch < report.n_switch:
            logger.warning("Heuristic threshold pair is suboptimal: %d switches vs %d",
                           report.n_switch, report.oracle_n_switch)
    return pair, labels, report


def label_dwelling(result, t_discomfort_for, dt_step=STEP, refine=True, margin=0.1):
    """
    Labels for one SimulationResult. `t_discomfort_for(span)` resolves the
    household's required duration given its occupied time span.
    """
    t_op_pres = presence_op_temp(result.room_frame('t_op'), result.room_frame('presence'))
    occupied = pd.Timedelta(dt_step) * int(t_op_pres.notna().sum())
    t_discomfort = t_discomfort_for(occupied)
    pair, labels, report = label_series(t_op_pres, t_discomfort, dt_step, refine, margin)
    return t_op_pres, pair, labels, report


def label_frame(t_op_pres, labels):
    """Per-step label name, label code and presence operative temperature."""
    return pd.DataFrame({'label': labels.names(), 'code': labels.labels, 't_op_pres': t_op_pres},
                        index=t_op_pres.index)


def write_labels(t_op_pres, labels, report, csv_path, report_path):
    ensure_dir(os.path.dirname(csv_path) or '.')
    frame = label_frame(t_op_pres, labels)
    frame.to_csv(csv_path, index_label='timestamp', float_format='%.17g', lineterminator='\n')
    write_json(report.to_dict(), report_path)
    return csv_path, report_path


def read_labels(csv_path):
    """Label CSV back as a frame indexed by timestamp (columns label, code, t_op_pres)."""
    frame = pd.read_csv(csv_path, index_col='timestamp', float_precision='round_trip')
    frame.index = pd.to_datetime(frame.index)
    frame.index.name = None
    return frame
