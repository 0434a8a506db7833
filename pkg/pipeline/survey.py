"""
Household survey records: parsing, validation, interquartile outlier filtering,
comfort-answer durations and a seeded synthetic survey generator.

Survey files are UTF-8 CSV with one header row. Map-valued and list-valued
columns hold compact JSON; the column dictionary is in README.md.
"""
import json
import logging
import os
import re
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np
import pandas as pd

from pipeline.config_loader import load_json_config
from pipeline.data_utils import tidy_columns, clean_column, encode_cell, decode_cell, ensure_dir
from pipeline.validation import check_required_columns

logger = logging.getLogger(__name__)


class DwellingType(str, Enum):
    MOZART_HOUSE = 'MozartHouse'
    MATISSE_APARTMENT = 'MatisseApartment'


class HeaterType(str, Enum):
    CONVECTOR = 'convector'
    RADIANT_PANEL = 'radiant_panel'
    SOFT_HEAT = 'soft_heat'
    ACCUMULATION = 'accumulation'
    WATER = 'water'
    WOOD = 'wood'


class ControllerKind(str, Enum):
    PID = 'PID'
    DEADBAND = 'deadband'
    NONE = 'none'


class ComfortAnswer(str, Enum):
    """The five answers to the perceived-comfort question, mildest first."""
    COMFORTABLE = 'Comfortable'
    COLD_AT_LEAST_24H = 'ColdAtLeast24h'
    COLD_FEW_DAYS = 'ColdFewDays'
    COLD_ALMOST_ALWAYS = 'ColdAlmostAlways'
    COLD_ALWAYS = 'ColdAlways'


ERAS = ('pre1948', '1948-1974', '1975-1988', '1989-2000', '2001-2012', 'post2012')

DWELLING_ROOMS = {
    DwellingType.MOZART_HOUSE: ('living', 'kitchen', 'bathroom', 'bedroom1', 'bedroom2', 'bedroom3'),
    DwellingType.MATISSE_APARTMENT: ('living', 'kitchen', 'bathroom', 'bedroom1', 'bedroom2'),
}
MAIN_ROOMS = ('living', 'bedroom1', 'bedroom2', 'bedroom3')
OPTIONAL_ROOM = 'bedroom2'

# Observed answer distribution of the national survey.
COMFORT_WEIGHTS = (0.846, 0.069, 0.052, 0.019, 0.014)

SEASON_SPAN = pd.Timedelta(days=212)
_MONTH_DAY = re.compile(r'^(0[1-9]|1[0-2])-(0[1-9]|[12]\d|3[01])$')


class SurveySchemaError(ValueError):
    """Header does not match the documented column dictionary."""

    def __init__(self, missing=(), unexpected=(), message=None):
        self.missing = list(missing)
        self.unexpected = list(unexpected)
        if message is None:
            parts = []
            if self.missing:
                parts.append(f"missing column(s): {', '.join(self.missing)}")
            if self.unexpected:
                parts.append(f"unexpected column(s): {', '.join(self.unexpected)}")
            message = "Survey schema mismatch: " + "; ".join(parts)
        super().__init__(message)


class SurveyValueError(ValueError):
    """A cell could not be parsed; carries the data row (1-based) and column."""

    def __init__(self, row, column, value, reason=''):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column '{column}': cannot parse {value!r} {reason}".rstrip())


class UnknownLiteralError(SurveyValueError):
    """An enum cell holds a literal outside the documented set."""


class SurveyValidationError(ValueError):
    """A record violates a SurveyRecord invariant."""


class IqrFilterError(ValueError):
    pass


def is_month_day(value):
    """MM-DD naming a real calendar day; 02-29 is accepted."""
    if not _MONTH_DAY.match(value):
        return False
    try:
        pd.Timestamp(f"2000-{value}")
    except ValueError:
        return False
    return True


def full_room_count(dwelling_type):
    """Number of main rooms (living + bedrooms) when the optional bedroom is present."""
    return sum(1 for room in DWELLING_ROOMS[DwellingType(dwelling_type)] if room in MAIN_ROOMS)


def active_rooms(dwelling_type, n_rooms):
    """Rooms simulated for a dwelling; the optional bedroom is dropped when n_rooms says so."""
    rooms = DWELLING_ROOMS[DwellingType(dwelling_type)]
    full = full_room_count(dwelling_type)
    if n_rooms == full:
        return rooms
    if n_rooms == full - 1:
        return tuple(room for room in rooms if room != OPTIONAL_ROOM)
    raise SurveyValidationError(
        f"n_rooms={n_rooms} inconsistent with {DwellingType(dwelling_type).value} "
        f"(expected {full - 1} or {full})")


@dataclass(frozen=True)
class TypicalWeek:
    """Three typical days of 24 hourly values; Monday-Friday share the weekday profile."""
    weekday: tuple
    saturday: tuple
    sunday: tuple

    def __post_init__(self):
        for name in ('weekday', 'saturday', 'sunday'):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != 24:
                raise SurveyValidationError(f"TypicalWeek.{name} needs 24 hourly values, got {len(values)}")
            object.__setattr__(self, name, values)

    @classmethod
    def from_list(cls, days):
        if len(days) != 3:
            raise SurveyValidationError(f"TypicalWeek needs exactly 3 day profiles, got {len(days)}")
        return cls(*days)

    @classmethod
    def constant(cls, value):
        return cls((value,) * 24, (value,) * 24, (value,) * 24)

    def to_list(self):
        return [list(self.weekday), list(self.saturday), list(self.sunday)]

    def day(self, weekday_index):
        """Profile for a calendar weekday (Monday=0)."""
        if weekday_index < 5:
            return self.weekday
        return self.saturday if weekday_index == 5 else self.sunday

    def hourly_matrix(self):
        """7 x 24 array, Monday first."""
        return np.array([self.day(d) for d in range(7)], dtype=float)

    def is_boolean(self):
        return all(v in (0.0, 1.0) for day in (self.weekday, self.saturday, self.sunday) for v in day)


@dataclass(frozen=True)
class SurveyRecord:
    """One household's answers, typed."""
    dwelling_id: str
    dwelling_type: DwellingType
    n_rooms: int
    floor_area: float
    construction_year_band: str
    department: str
    is_south: dict
    heater_power: dict
    heater_type: dict
    controller_type: dict
    setpoint_profile: dict
    presence_profile: dict
    window_profile: dict
    heating_on_date: str
    heating_off_date: str
    aux_heater_power: float
    aux_heater_hours: tuple
    wood_reload_hours: tuple
    comfort_answer: ComfortAnswer
    avg_age: float
    gender_ratio: float

    def __post_init__(self):
        self.validate()

    @property
    def rooms(self):
        return active_rooms(self.dwelling_type, self.n_rooms)

    def validate(self):
        if not self.floor_area > 0:
            raise SurveyValidationError(f"{self.dwelling_id}: floor_area must be > 0, got {self.floor_area}")
        rooms = set(active_rooms(self.dwelling_type, self.n_rooms))
        if self.construction_year_band not in ERAS:
            raise SurveyValidationError(f"{self.dwelling_id}: unknown construction era '{self.construction_year_band}'")
        template_rooms = set(DWELLING_ROOMS[self.dwelling_type])
        if set(self.is_south) != template_rooms:
            raise SurveyValidationError(f"{self.dwelling_id}: is_south must cover rooms {sorted(template_rooms)}")
        for name in ('heater_power', 'heater_type', 'controller_type',
                     'setpoint_profile', 'presence_profile', 'window_profile'):
            if set(getattr(self, name)) != rooms:
                raise SurveyValidationError(f"{self.dwelling_id}: {name} must cover rooms {sorted(rooms)}")
        if any(power < 0 for power in self.heater_power.values()) or self.aux_heater_power < 0:
            raise SurveyValidationError(f"{self.dwelling_id}: heater power must be >= 0")
        for name in ('presence_profile', 'window_profile'):
            if not all(week.is_boolean() for week in getattr(self, name).values()):
                raise SurveyValidationError(f"{self.dwelling_id}: {name} values must be 0 or 1")
        for name in ('heating_on_date', 'heating_off_date'):
            value = getattr(self, name)
            if value is not None and not is_month_day(value):
                raise SurveyValidationError(f"{self.dwelling_id}: {name} must be a calendar MM-DD, got {value!r}")
        for name in ('aux_heater_hours', 'wood_reload_hours'):
            if any(not 0 <= h <= 23 for h in getattr(self, name)):
                raise SurveyValidationError(f"{self.dwelling_id}: {name} must be hours in 0..23")
        if not 0.0 <= self.gender_ratio <= 1.0:
            raise SurveyValidationError(f"{self.dwelling_id}: gender_ratio must lie in [0, 1]")


# ---------------------------------------------------------------- CSV codec

def _enum(enum_cls):
    def parse(text):
        try:
            return enum_cls(text.strip())
        except ValueError as exc:
            raise KeyError(text) from exc
    return parse


def _enum_map(enum_cls):
    parse_value = _enum(enum_cls)
    return lambda text: {room: parse_value(v) for room, v in decode_cell(text).items()}


def _week_map(text):
    return {room: TypicalWeek.from_list(days) for room, days in decode_cell(text).items()}


def _bool_map(text):
    out = {}
    for room, value in decode_cell(text).items():
        if not isinstance(value, bool):
            raise ValueError(f"expected true/false for room '{room}'")
        out[room] = value
    return out


def _float_map(text):
    return {room: float(v) for room, v in decode_cell(text).items()}


def _hours(text):
    return tuple(int(h) for h in decode_cell(text))


def _text(text):
    text = text.strip()
    if not text:
        raise ValueError("empty value")
    return text


def _number(value):
    return repr(float(value))


def _encode_weeks(weeks):
    return encode_cell({room: week.to_list() for room, week in weeks.items()})


def _encode_enums(values):
    return encode_cell({room: value.value for room, value in values.items()})


# column -> (parser, encoder); order is the documented column order
SURVEY_COLUMNS = {
    'dwelling_id': (_text, str),
    'dwelling_type': (_enum(DwellingType), lambda v: v.value),
    'n_rooms': (int, str),
    'floor_area': (float, _number),
    'construction_year_band': (_text, str),
    'department': (_text, str),
    'is_south': (_bool_map, encode_cell),
    'heater_power': (_float_map, encode_cell),
    'heater_type': (_enum_map(HeaterType), _encode_enums),
    'controller_type': (_enum_map(ControllerKind), _encode_enums),
    'setpoint_profile': (_week_map, _encode_weeks),
    'presence_profile': (_week_map, _encode_weeks),
    'window_profile': (_week_map, _encode_weeks),
    'heating_on_date': (_text, lambda v: '' if v is None else v),
    'heating_off_date': (_text, lambda v: '' if v is None else v),
    'aux_heater_power': (float, _number),
    'aux_heater_hours': (_hours, lambda v: encode_cell(list(v))),
    'wood_reload_hours': (_hours, lambda v: encode_cell(list(v))),
    'comfort_answer': (_enum(ComfortAnswer), lambda v: v.value),
    'avg_age': (float, _number),
    'gender_ratio': (float, _number),
}
OPTIONAL_COLUMNS = ('heating_on_date', 'heating_off_date')


def _parse_row(row_number, row, exclusions):
    values = {}
    for column, (parse, _) in SURVEY_COLUMNS.items():
        raw = row[column]
        if column in OPTIONAL_COLUMNS and clean_column(raw, exclusions) is None:
            values[column] = None
            continue
        try:
            values[column] = parse(raw)
        except KeyError as exc:
            raise UnknownLiteralError(row_number, column, raw, f"(unknown literal {exc.args[0]!r})") from exc
        except (ValueError, TypeError, AttributeError, json.JSONDecodeError) as exc:
            raise SurveyValueError(row_number, column, raw, f"({exc})") from exc
    try:
        return SurveyRecord(**values)
    except SurveyValidationError as exc:
        raise SurveyValidationError(f"row {row_number}: {exc}") from exc


def parse_survey(path, column_mapping=None, exclusions=None):
    """Load a survey CSV into SurveyRecords, one per data row."""
    logger.info("Loading survey data from %s", path)
    if exclusions is None:
        exclusions = set(load_json_config('exclusions.json'))
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError as exc:
        raise SurveySchemaError(missing=SURVEY_COLUMNS, message="Survey file has no header row") from exc
    df = tidy_columns(df, column_mapping)

    missing = check_required_columns(df, SURVEY_COLUMNS, path)
    unexpected = [c for c in df.columns if c not in SURVEY_COLUMNS]
    if missing or unexpected:
        raise SurveySchemaError(missing, unexpected)

    records = [_parse_row(i + 1, row, exclusions) for i, row in enumerate(df.to_dict('records'))]
    logger.info("Parsed %d survey records", len(records))
    return records


def survey_frame(records):
    """Encode records as the string-valued DataFrame written to disk."""
    rows = [{column: encode(getattr(record, column)) for column, (_, encode) in SURVEY_COLUMNS.items()}
            for record in records]
    return pd.DataFrame(rows, columns=list(SURVEY_COLUMNS))


def write_survey(records, path):
    """Serialize records to the survey CSV format (inverse of parse_survey)."""
    ensure_dir(_parent(path))
    survey_frame(records).to_csv(path, index=False, encoding='utf-8', lineterminator='\n')
    logger.info("Wrote %d survey records to %s", len(records), path)
    return path


def _parent(path):
    return os.path.dirname(path) or '.'


# ---------------------------------------------------------------- IQR rule

@dataclass(frozen=True)
class RejectedRecord:
    record: SurveyRecord
    field: str
    value: float
    lower: float
    upper: float


def _numeric_field(name):
    names = {f.name for f in fields(SurveyRecord)}
    if name not in names:
        raise IqrFilterError(f"unknown field '{name}'")
    return name


def _field_values(records, name):
    values = []
    for record in records:
        value = getattr(record, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise IqrFilterError(f"field '{name}' is not numeric on record {record.dwelling_id}")
        values.append(float(value))
    return pd.Series(values, dtype=float)


def compute_iqr_bounds(records, field_names, factor=1.5):
    """
    Closed acceptance interval [Q1 - factor*IQR, Q3 + factor*IQR] per field.
    Quartiles use linear interpolation between order statistics.
    """
    if not records:
        raise IqrFilterError("empty record list")
    bounds = {}
    for name in map(_numeric_field, field_names):
        series = _field_values(records, name)
        q1 = series.quantile(0.25, interpolation='linear')
        q3 = series.quantile(0.75, interpolation='linear')
        iqr = q3 - q1
        bounds[name] = (q1 - factor * iqr, q3 + factor * iqr)
    return bounds


def iqr_filter(records, field_names, bounds=None, factor=1.5):
    """
    Split records into (kept, rejected). A record is rejected when any named
    field falls outside its IQR bounds; the first offending field is reported.
    Pass `bounds` from an earlier call to filter with fixed bounds.
    """
    if not records:
        raise IqrFilterError("empty record list")
    if bounds is None:
        bounds = compute_iqr_bounds(records, field_names, factor)
    for name in field_names:
        _numeric_field(name)
        _field_values(records, name)
        if name not in bounds:
            raise IqrFilterError(f"no bounds supplied for field '{name}'")

    kept, rejected = [], []
    for record in records:
        for name in field_names:
            value = float(getattr(record, name))
            lower, upper = bounds[name]
            if value < lower or value > upper:
                rejected.append(RejectedRecord(record, name, value, lower, upper))
                break
        else:
            kept.append(record)
    logger.info("IQR rule on %s: kept %d, rejected %d", list(field_names), len(kept), len(rejected))
    return kept, rejected


def write_rejected_report(rejected, path):
    """CSV with one line per rejected dwelling and the reason."""
    rows = [{
        'dwelling_id': r.record.dwelling_id,
        'field': r.field,
        'value': r.value,
        'lower': r.lower,
        'upper': r.upper,
        'reason': f"{r.field}={r.value:g} outside [{r.lower:g}, {r.upper:g}]",
    } for r in rejected]
    ensure_dir(_parent(path))
    pd.DataFrame(rows, columns=['dwelling_id', 'field', 'value', 'lower', 'upper', 'reason']) \
        .to_csv(path, index=False, lineterminator='\n')
    return path


# ---------------------------------------------------------------- comfort durations

DEFAULT_COMFORT_DURATIONS = {
    'Comfortable': 0,
    'ColdAtLeast24h': 24,
    'ColdFewDays': 72,
    'ColdAlmostAlways': '60%',
    'ColdAlways': '90%',
}


@dataclass(frozen=True)
class ComfortCategory:
    category: ComfortAnswer
    t_discomfort_survey: pd.Timedelta


class ComfortDurations:
    """
    Mapping table answer -> required discomfort duration. Entries are hours,
    or a percentage string resolved against a span (the occupied time).
    """

    def __init__(self, table=None, span=SEASON_SPAN):
        table = dict(DEFAULT_COMFORT_DURATIONS if table is None else table)
        unknown = set(table) - {a.value for a in ComfortAnswer}
        if unknown:
            raise ValueError(f"unknown comfort answers in duration table: {sorted(unknown)}")
        missing = {a.value for a in ComfortAnswer} - set(table)
        if missing:
            raise ValueError(f"duration table lacks answers: {sorted(missing)}")
        self.table = table
        self.check_monotone(span)

    @staticmethod
    def _resolve(entry, span):
        if isinstance(entry, str) and entry.strip().endswith('%'):
            fraction = float(entry.strip()[:-1]) / 100.0
            return pd.Timedelta(seconds=round(span.total_seconds() * fraction))
        return pd.Timedelta(hours=float(entry))

    def duration(self, answer, span=SEASON_SPAN):
        return self._resolve(self.table[ComfortAnswer(answer).value], span)

    def duration_for_span(self, answer, span):
        """Duration for one dwelling's occupied span; the table order must hold at that span too."""
        self.check_monotone(span)
        return self.duration(answer, span)

    def category(self, answer, span=SEASON_SPAN):
        return ComfortCategory(ComfortAnswer(answer), self.duration(answer, span))

    def check_monotone(self, span=SEASON_SPAN):
        durations = [self.duration(a, span) for a in ComfortAnswer]
        if durations[0] != pd.Timedelta(0):
            raise ValueError("Comfortable must map to a zero duration")
        if any(b <= a for a, b in zip(durations, durations[1:])):
            raise ValueError(f"comfort durations must increase strictly over a {span} span, got {durations}")


def map_comfort_category(answer, durations=None, span=SEASON_SPAN):
    """Required discomfort duration (t_discomfort_survey) for a comfort answer."""
    table = durations if isinstance(durations, ComfortDurations) else ComfortDurations(durations)
    return table.duration(answer, span)


# ---------------------------------------------------------------- synthetic survey

_HEATER_WEIGHTS = {
    HeaterType.CONVECTOR: 0.45, HeaterType.RADIANT_PANEL: 0.2, HeaterType.SOFT_HEAT: 0.1,
    HeaterType.ACCUMULATION: 0.05, HeaterType.WATER: 0.15,
}
_CONTROLLER_WEIGHTS = {ControllerKind.PID: 0.35, ControllerKind.DEADBAND: 0.6, ControllerKind.NONE: 0.05}
_ERA_WEIGHTS = (0.2, 0.2, 0.2, 0.15, 0.15, 0.1)
_ROOM_POWER = {'living': (1500, 3000), 'kitchen': (500, 1500), 'bathroom': (500, 1000),
               'bedroom1': (750, 1500), 'bedroom2': (750, 1500), 'bedroom3': (750, 1500)}


def comfort_quota(n):
    """
    Deterministic per-answer counts for n households following COMFORT_WEIGHTS
    (largest remainder), with every answer present once n >= 5.
    """
    raw = np.array(COMFORT_WEIGHTS) * n
    counts = np.floor(raw).astype(int)
    if n >= len(counts):
        counts = np.maximum(counts, 1)
    remainders = raw - np.floor(raw)
    while counts.sum() < n:
        i = int(np.argmax(remainders))
        counts[i] += 1
        remainders[i] = -1.0
    while counts.sum() > n:
        counts[int(np.argmax(counts))] -= 1
    return counts


def _choice(rng, weights):
    keys = list(weights)
    p = np.array([weights[k] for k in keys], dtype=float)
    return keys[int(rng.choice(len(keys), p=p / p.sum()))]


def _presence_day(rng, room, at_home, weekend):
    day = np.zeros(24)
    wake = int(rng.integers(6, 9)) + (1 if weekend else 0)
    sleep = int(rng.integers(22, 24))
    if room.startswith('bedroom'):
        day[:wake] = 1
        day[sleep:] = 1
    elif room == 'living':
        day[wake:wake + 1] = 1
        day[18:sleep] = 1
        if at_home or weekend:
            day[wake:sleep] = 1
    elif room == 'kitchen':
        day[wake] = 1
        day[12] = 1 if (at_home or weekend) else 0
        day[19] = 1
    else:
        day[wake] = 1
        day[21] = 1
    return tuple(day)


def _setpoint_day(rng, base, setback, presence_day):
    day = np.full(24, base)
    if setback:
        day[np.array(presence_day) == 0] = base - setback
    return tuple(np.round(day, 1))


def _synth_record(rng, index, answer, departments):
    dwelling_type = DwellingType.MOZART_HOUSE if rng.random() < 0.5 else DwellingType.MATISSE_APARTMENT
    full = full_room_count(dwelling_type)
    n_rooms = full if rng.random() < 0.7 else full - 1
    rooms = active_rooms(dwelling_type, n_rooms)
    if dwelling_type is DwellingType.MOZART_HOUSE:
        floor_area = float(np.clip(round(rng.normal(90.0, 15.0), 1), 55.0, 150.0))
    else:
        floor_area = float(np.clip(round(rng.normal(52.0, 9.0), 1), 28.0, 85.0))
    era = ERAS[int(rng.choice(len(ERAS), p=_ERA_WEIGHTS))]
    department = departments[int(rng.integers(len(departments)))]

    is_south = {room: bool(rng.random() < 0.4) for room in DWELLING_ROOMS[dwelling_type]}
    at_home = bool(rng.random() < 0.3)
    wood_living = dwelling_type is DwellingType.MOZART_HOUSE and rng.random() < 0.08

    heater_power, heater_type, controller_type = {}, {}, {}
    setpoints, presence, windows = {}, {}, {}
    # colder answers go with lower set temperatures
    answer_shift = -0.6 * list(ComfortAnswer).index(answer)
    for room in rooms:
        low, high = _ROOM_POWER[room]
        controller = _choice(rng, _CONTROLLER_WEIGHTS)
        heater = _choice(rng, _HEATER_WEIGHTS)
        if room == 'living' and wood_living:
            heater, controller = HeaterType.WOOD, ControllerKind.NONE
        power = float(round(rng.uniform(low, high), -1))
        if controller is ControllerKind.NONE and heater is not HeaterType.WOOD:
            power = 0.0
        heater_power[room], heater_type[room], controller_type[room] = power, heater, controller

        week_presence = [_presence_day(rng, room, at_home, weekend) for weekend in (False, True, True)]
        base = float(np.clip(rng.normal(19.5 + answer_shift, 1.0), 15.0, 23.0))
        if room.startswith('bedroom'):
            base -= 1.0
        setback = float(rng.choice([0.0, 1.0, 2.0]))
        presence[room] = TypicalWeek(*week_presence)
        setpoints[room] = TypicalWeek(*[_setpoint_day(rng, base, setback, d) for d in week_presence])

        window_day = np.zeros(24)
        if rng.random() < 0.5:
            window_day[int(rng.integers(8, 11))] = 1
        windows[room] = TypicalWeek(tuple(window_day), tuple(window_day), tuple(window_day))

    has_aux = rng.random() < 0.2
    start = int(rng.integers(17, 20))
    return SurveyRecord(
        dwelling_id=f"D{index:05d}",
        dwelling_type=dwelling_type,
        n_rooms=n_rooms,
        floor_area=floor_area,
        construction_year_band=era,
        department=department,
        is_south=is_south,
        heater_power=heater_power,
        heater_type=heater_type,
        controller_type=controller_type,
        setpoint_profile=setpoints,
        presence_profile=presence,
        window_profile=windows,
        heating_on_date=f"10-{int(rng.integers(1, 31)):02d}" if rng.random() < 0.7 else None,
        heating_off_date=f"04-{int(rng.integers(1, 30)):02d}" if rng.random() < 0.7 else None,
        aux_heater_power=float(round(rng.uniform(1000, 2000), -1)) if has_aux else 0.0,
        aux_heater_hours=(start, start + 1, start + 2) if has_aux else (),
        wood_reload_hours=(7, 18, 21) if wood_living else (),
        comfort_answer=answer,
        avg_age=float(round(rng.uniform(22.0, 85.0), 1)),
        gender_ratio=float(round(rng.uniform(0.0, 1.0), 2)),
    )


def synth_survey(n, seed, departments=None):
    """Deterministic synthetic survey of n households drawn from documented ranges."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if departments is None:
        departments = sorted(load_json_config('climate_zones.json')['departments'])
    rng = np.random.default_rng(seed)
    answers = np.repeat(np.arange(len(ComfortAnswer)), comfort_quota(n))
    rng.shuffle(answers)
    records = [_synth_record(rng, i + 1, list(ComfortAnswer)[a], departments)
               for i, a in enumerate(answers)]
    logger.info("Generated %d synthetic survey records (seed %s)", n, seed)
    return records
