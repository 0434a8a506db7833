"""
Turn a survey record into a solvable building model plus season-long schedules.

Geometry comes from the two dwelling templates in config/templates.json, the
envelope from the construction record of the dwelling's era
(config/constructions.json) and heater behaviour from config/heaters.json.
Facade azimuths are clockwise from north: a facade with template offset o in a
building of orientation θ faces (o + θ) mod 360, so offset 180 faces south at θ = 0.
"""
import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd

from pipeline.config_loader import load_json_config
from pipeline.data_utils import read_frame, read_json, write_frame, write_json
from pipeline.solar import sunset_times
from pipeline.survey import (ControllerKind, DwellingType, HeaterType, SurveyValidationError,
                             active_rooms)
from pipeline.thermal import ControllerSpec, HeaterSpec, Layer, Material
from pipeline.weather import STEP_SECONDS

logger = logging.getLogger(__name__)

ORIENTATIONS = (0, 90, 180, 270)
STEPS_PER_DAY = 86400 // STEP_SECONDS


class TemplateMismatchError(ValueError):
    pass


class UnknownEraError(KeyError):
    pass


class MissingRoomFlagError(KeyError):
    pass


class GridMismatchError(ValueError):
    pass


# ---------------------------------------------------------------- templates

@dataclass(frozen=True)
class Facade:
    offset: int
    wall_area: float
    window_area: float


@dataclass(frozen=True)
class RoomGeometry:
    name: str
    area: float
    height: float
    party_wall_area: float
    facades: tuple

    @property
    def volume(self):
        return self.area * self.height


@dataclass(frozen=True)
class Partition:
    rooms: tuple
    area: float


@dataclass(frozen=True)
class BuildingTemplate:
    template_id: str
    dwelling_type: DwellingType
    reference_area: float
    ceiling: str
    floor: str
    optional_room: str
    south_flag_rooms: tuple
    rooms: tuple
    partitions: tuple

    def __post_init__(self):
        total = sum(room.area for room in self.rooms)
        if not math.isclose(total, self.reference_area, rel_tol=1e-9):
            raise ValueError(f"{self.template_id}: room areas sum to {total}, reference is {self.reference_area}")
        names = {room.name for room in self.rooms}
        for room in self.rooms:
            for facade in room.facades:
                if facade.offset not in ORIENTATIONS:
                    raise ValueError(f"{self.template_id}.{room.name}: facade offset {facade.offset} not cardinal")
        for partition in self.partitions:
            a, b = partition.rooms
            if a == b or a not in names or b not in names:
                raise ValueError(f"{self.template_id}: bad partition {partition.rooms}")

    def room(self, name):
        for room in self.rooms:
            if room.name == name:
                return room
        raise KeyError(name)

    def adjacency(self):
        """Symmetric room -> {neighbour: partition area} map."""
        adj = {room.name: {} for room in self.rooms}
        for partition in self.partitions:
            a, b = partition.rooms
            adj[a][b] = adj[a].get(b, 0.0) + partition.area
            adj[b][a] = adj[b].get(a, 0.0) + partition.area
        return adj


def load_templates(filename='templates.json'):
    data = load_json_config(filename)
    templates = {}
    for template_id, entry in data.items():
        rooms = tuple(
            RoomGeometry(r['name'], float(r['area']), float(r['height']), float(r.get('party_wall_area', 0.0)),
                         tuple(Facade(int(f['offset']), float(f['wall_area']), float(f['window_area']))
                               for f in r['facades']))
            for r in entry['rooms'])
        templates[template_id] = BuildingTemplate(
            template_id=template_id,
            dwelling_type=DwellingType(entry['dwelling_type']),
            reference_area=float(entry['reference_area']),
            ceiling=entry['ceiling'],
            floor=entry['floor'],
            optional_room=entry['optional_room'],
            south_flag_rooms=tuple(entry['south_flag_rooms']),
            rooms=rooms,
            partitions=tuple(Partition(tuple(p['rooms']), float(p['area'])) for p in entry['partitions']),
        )
    return templates


def template_for(dwelling_type, templates):
    for template in templates.values():
        if template.dwelling_type == DwellingType(dwelling_type):
            return template
    raise TemplateMismatchError(f"no template for dwelling type '{dwelling_type}'")


# ---------------------------------------------------------------- construction records

@dataclass(frozen=True)
class ConstructionRecord:
    era: str
    wall_layers: tuple
    roof_layers: tuple
    floor_layers: tuple
    partition_layers: tuple
    h_out: float
    h_in: float
    window_U: float
    window_SHGC: float
    infiltration_ach: float

    def __post_init__(self):
        for name in ('h_out', 'h_in', 'window_U', 'infiltration_ach'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{self.era}: {name} must be > 0")
        if not 0.0 < self.window_SHGC <= 1.0:
            raise ValueError(f"{self.era}: window_SHGC must lie in (0, 1]")
        for name in ('wall_layers', 'roof_layers', 'floor_layers', 'partition_layers'):
            if not getattr(self, name):
                raise ValueError(f"{self.era}: {name} is empty")

    def u_value(self, layers='wall_layers'):
        """Surface-to-surface U-value including both film coefficients (W/m2K)."""
        resistance = sum(layer.thickness / layer.material.conductivity for layer in getattr(self, layers))
        return 1.0 / (1.0 / self.h_in + resistance + 1.0 / self.h_out)


def _layers(entries, materials):
    return tuple(Layer(materials[e['material']], float(e['thickness'])) for e in entries)


def load_constructions(filename='constructions.json'):
    data = load_json_config(filename)
    materials = {name: Material(name, float(m['conductivity']), float(m['density']), float(m['specific_heat']))
                 for name, m in data['materials'].items()}
    partition = _layers(data['partition_layers'], materials)
    records = {}
    for era, entry in data['eras'].items():
        records[era] = ConstructionRecord(
            era=era,
            wall_layers=_layers(entry['wall_layers'], materials),
            roof_layers=_layers(entry['roof_layers'], materials),
            floor_layers=_layers(entry['floor_layers'], materials),
            partition_layers=partition,
            h_out=float(entry['h_out']),
            h_in=float(entry['h_in']),
            window_U=float(entry['window_U']),
            window_SHGC=float(entry['window_SHGC']),
            infiltration_ach=float(entry['infiltration_ach']),
        )
    return records


def select_record(era, records=None):
    """Construction record for a construction-year band."""
    records = load_constructions() if records is None else records
    try:
        return records[era]
    except KeyError:
        raise UnknownEraError(f"unknown construction era '{era}' (known: {sorted(records)})") from None


# ---------------------------------------------------------------- orientation

def _flag(is_south, room):
    try:
        return bool(is_south[room])
    except KeyError:
        raise MissingRoomFlagError(f"missing is_south flag for room '{room}'") from None


def orientation_mozart(is_south):
    """Decision tree for the Mozart house, in degrees."""
    if _flag(is_south, 'living'):
        if _flag(is_south, 'bedroom3'):
            return 0
        return 90
    if _flag(is_south, 'bedroom2') and _flag(is_south, 'bedroom3'):
        return 270
    return 180


def facade_azimuth(offset, orientation):
    return (offset + orientation) % 360


def south_window_area(template, is_south, orientation, rooms=None):
    """Window area of south-flagged rooms that faces due south at `orientation`."""
    total = 0.0
    for room in template.rooms:
        if rooms is not None and room.name not in rooms:
            continue
        if room.name not in template.south_flag_rooms or not is_south.get(room.name, False):
            continue
        total += sum(f.window_area for f in room.facades if facade_azimuth(f.offset, orientation) == 180)
    return total


def orientation_matisse(is_south, template=None, rooms=None):
    """Orientation maximizing flagged south-facing window area; ties go to the smallest angle."""
    template = template or load_templates()['Matisse']
    for room in template.south_flag_rooms:
        _flag(is_south, room)
    best, best_area = 0, -1.0
    for angle in ORIENTATIONS:
        area = south_window_area(template, is_south, angle, rooms)
        if area > best_area:
            best, best_area = angle, area
    return best


def orientation_for(template, is_south, rooms=None):
    if template.dwelling_type is DwellingType.MOZART_HOUSE:
        return orientation_mozart(is_south)
    return orientation_matisse(is_south, template, rooms)


# ---------------------------------------------------------------- schedules

def _check_daily_grid(index):
    if len(index) == 0 or len(index) % STEPS_PER_DAY != 0:
        raise GridMismatchError(f"grid of {len(index)} steps does not cover whole days")
    if index[0] != index[0].normalize():
        raise GridMismatchError("grid must start at midnight")
    deltas = np.diff(index.asi8) // 10**9
    if np.any(deltas != STEP_SECONDS):
        raise GridMismatchError(f"grid step must be {STEP_SECONDS} s")


def shutter_schedule(presence, sunsets):
    """
    Shutter-closed flags (1 = closed) for one room's presence series.

    Each day the shutters open at the first occupied -> empty transition, or at
    the first occupied step when the room never empties, and close at the
    occupied step whose clock time is nearest sunset (ties to the earlier step).
    They are open over [open, close) and closed otherwise.
    """
    index = presence.index
    _check_daily_grid(index)
    n_days = len(index) // STEPS_PER_DAY
    sunsets = pd.DatetimeIndex(sunsets)
    if len(sunsets) != n_days:
        raise GridMismatchError(f"{len(sunsets)} sunsets for {n_days} days")
    days = index[::STEPS_PER_DAY]
    if not (sunsets.normalize() == days).all():
        raise GridMismatchError("sunset dates do not match the grid days")

    occupied = presence.to_numpy().reshape(n_days, STEPS_PER_DAY) > 0.5
    leaves = occupied[:, :-1] & ~occupied[:, 1:]
    open_at = np.where(leaves.any(axis=1), leaves.argmax(axis=1) + 1, occupied.argmax(axis=1))

    sunset_step = (sunsets - days).total_seconds().to_numpy() / STEP_SECONDS
    steps = np.arange(STEPS_PER_DAY)
    distance = np.where(occupied, np.abs(steps[None, :] - sunset_step[:, None]), np.inf)
    close_at = distance.argmin(axis=1)

    is_open = (steps[None, :] >= open_at[:, None]) & (steps[None, :] < close_at[:, None])
    is_open &= occupied.any(axis=1)[:, None]
    return pd.Series((~is_open).astype(int).ravel(), index=index, name=presence.name)


def tile_week(week, index):
    """Repeat a TypicalWeek's hourly values over `index` (Monday = weekday 0)."""
    matrix = week.hourly_matrix()
    return pd.Series(matrix[index.dayofweek, index.hour], index=index)


def _season_date(month_day, index, default):
    month_day = month_day or default
    month, day = (int(part) for part in month_day.split('-'))
    first_year = index[0].year if index[0].month >= 7 else index[0].year - 1
    year = first_year if month >= 7 else first_year + 1
    # 02-29 falls back to 02-28 outside leap years
    last_day = pd.Timestamp(year=year, month=month, day=1).days_in_month
    return pd.Timestamp(year=year, month=month, day=min(day, last_day))


def heating_season_mask(index, on_date=None, off_date=None, defaults=('10-15', '04-15')):
    """1 on [on date 00:00, off date 00:00), else 0."""
    start = _season_date(on_date, index, defaults[0])
    stop = _season_date(off_date, index, defaults[1])
    return pd.Series(((index >= start) & (index < stop)).astype(int), index=index)


def daily_hours_mask(index, hours, duration_hours=1.0):
    """1 while within `duration_hours` after any of the given clock hours."""
    clock = index.hour.to_numpy() + index.minute.to_numpy() / 60.0
    active = np.zeros(len(index), dtype=bool)
    for hour in hours:
        active |= ((clock - hour) % 24.0) < duration_hours
    return pd.Series(active.astype(int), index=index)


@dataclass
class ScheduleSet:
    """Per-room and dwelling-wide season series on one 1800 s grid."""
    setpoint: pd.DataFrame
    presence: pd.DataFrame
    window: pd.DataFrame
    shutter_closed: pd.DataFrame
    heating_active: pd.Series
    wood_burning: pd.Series
    aux_active: pd.Series
    heating_on_date: str = None
    heating_off_date: str = None

    @property
    def index(self):
        return self.setpoint.index

    @property
    def rooms(self):
        return list(self.setpoint.columns)

    def validate(self):
        index = self.index
        for name in ('presence', 'window', 'shutter_closed'):
            frame = getattr(self, name)
            if not frame.index.equals(index):
                raise GridMismatchError(f"schedule '{name}' is not on the setpoint grid")
            if not frame.isin([0, 1]).all().all():
                raise GridMismatchError(f"schedule '{name}' must hold 0/1 values")
        for name in ('heating_active', 'wood_burning', 'aux_active'):
            if not getattr(self, name).index.equals(index):
                raise GridMismatchError(f"schedule '{name}' is not on the setpoint grid")
        return self

    def to_frame(self):
        columns = {}
        for room in self.rooms:
            columns[f"{room}.setpoint"] = self.setpoint[room]
            columns[f"{room}.presence"] = self.presence[room]
            columns[f"{room}.window"] = self.window[room]
            columns[f"{room}.shutter_closed"] = self.shutter_closed[room]
        columns['heating_active'] = self.heating_active
        columns['wood_burning'] = self.wood_burning
        columns['aux_active'] = self.aux_active
        return pd.DataFrame(columns, index=self.index)

    @classmethod
    def from_frame(cls, frame, heating_on_date=None, heating_off_date=None):
        rooms = [c.split('.')[0] for c in frame.columns if c.endswith('.setpoint')]

        def pick(quantity, dtype):
            return pd.DataFrame({room: frame[f"{room}.{quantity}"].astype(dtype) for room in rooms},
                                index=frame.index)

        return cls(pick('setpoint', float), pick('presence', int), pick('window', int), pick('shutter_closed', int),
                   frame['heating_active'].astype(int), frame['wood_burning'].astype(int),
                   frame['aux_active'].astype(int), heating_on_date, heating_off_date)


# ---------------------------------------------------------------- building model

@dataclass(frozen=True)
class FacadeModel:
    azimuth: int
    wall_area: float
    window_area: float


@dataclass(frozen=True)
class RoomModel:
    name: str
    floor_area: float
    height: float
    facades: tuple
    party_wall_area: float
    heater: HeaterSpec
    controller: ControllerSpec

    @property
    def volume(self):
        return self.floor_area * self.height


@dataclass(frozen=True)
class BuildingModel:
    dwelling_id: str
    template_id: str
    dwelling_type: DwellingType
    scale: float
    orientation: int
    climate_zone: int
    construction: ConstructionRecord
    ceiling: str
    floor: str
    rooms: tuple
    partitions: tuple
    aux_heater: HeaterSpec = None

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"{self.dwelling_id}: scale factor must be > 0")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"{self.dwelling_id}: orientation {self.orientation} not cardinal")
        names = [room.name for room in self.rooms]
        if len(set(names)) != len(names):
            raise ValueError(f"{self.dwelling_id}: duplicate room names")
        for room in self.rooms:
            if not isinstance(room.controller, ControllerSpec):
                raise ValueError(f"{self.dwelling_id}.{room.name}: room needs exactly one controller")

    @property
    def room_names(self):
        return [room.name for room in self.rooms]

    def room(self, name):
        return next(room for room in self.rooms if room.name == name)

    def facade_azimuths(self):
        return sorted({f.azimuth for room in self.rooms for f in room.facades})

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        def layers(entries):
            return tuple(Layer(Material(**e['material']), e['thickness']) for e in entries)

        c = data['construction']
        construction = ConstructionRecord(
            c['era'], layers(c['wall_layers']), layers(c['roof_layers']), layers(c['floor_layers']),
            layers(c['partition_layers']), c['h_out'], c['h_in'], c['window_U'], c['window_SHGC'],
            c['infiltration_ach'])
        rooms = tuple(
            RoomModel(r['name'], r['floor_area'], r['height'],
                      tuple(FacadeModel(**f) for f in r['facades']), r['party_wall_area'],
                      HeaterSpec.from_dict(r['heater']), ControllerSpec.from_dict(r['controller']))
            for r in data['rooms'])
        return cls(
            dwelling_id=data['dwelling_id'], template_id=data['template_id'],
            dwelling_type=DwellingType(data['dwelling_type']), scale=data['scale'],
            orientation=data['orientation'], climate_zone=data['climate_zone'], construction=construction,
            ceiling=data['ceiling'], floor=data['floor'], rooms=rooms,
            partitions=tuple(Partition(tuple(p['rooms']), p['area']) for p in data['partitions']),
            aux_heater=HeaterSpec.from_dict(data['aux_heater']) if data.get('aux_heater') else None,
        )


@dataclass(frozen=True)
class ModelSettings:
    """Defaults applied while turning survey answers into a model."""
    heating_on: str = '10-15'
    heating_off: str = '04-15'
    pid_proportional_band: float = 1.0
    pid_integral_time: float = 3600.0
    pid_derivative_time: float = 0.0
    deadband_half_width: float = 0.5
    heater_table: dict = field(default=None, compare=False)

    @classmethod
    def from_config(cls, config):
        sim = config.simulation
        return cls(
            heating_on=config.season.get('heating_on', '10-15'),
            heating_off=config.season.get('heating_off', '04-15'),
            pid_proportional_band=float(sim.get('pid_proportional_band', 1.0)),
            pid_integral_time=float(sim.get('pid_integral_time', 3600.0)),
            pid_derivative_time=float(sim.get('pid_derivative_time', 0.0)),
            deadband_half_width=float(sim.get('deadband_half_width', 0.5)),
            heater_table=load_json_config(config.paths['heaters']),
        )

    def heaters(self):
        return self.heater_table if self.heater_table is not None else load_json_config('heaters.json')


def make_heater(heater_type, power, table):
    entry = table['types'][HeaterType(heater_type).value]
    return HeaterSpec(HeaterType(heater_type).value, float(power), float(entry['radiative_fraction']),
                      bool(entry['fixed']), float(table.get('wood_burn_hours', 3.0)))


def make_controller(kind, power, settings):
    kind = ControllerKind(kind)
    if kind is ControllerKind.PID:
        kp = power / settings.pid_proportional_band
        ki = kp / settings.pid_integral_time if settings.pid_integral_time > 0 else 0.0
        kd = kp * settings.pid_derivative_time
        return ControllerSpec(kind.value, float(power), kp, ki, kd, settings.deadband_half_width)
    return ControllerSpec(kind.value, float(power), 0.0, 0.0, 0.0, settings.deadband_half_width)


def build_model(rec, template, construction, zone, index, settings=None):
    """
    Model and schedules for one survey record.

    `zone` is the dwelling's ClimateZone (its coordinates drive sunset times),
    `index` the season's 1800 s grid starting at midnight.
    """
    settings = settings or ModelSettings()
    if template.dwelling_type != rec.dwelling_type:
        raise TemplateMismatchError(
            f"{rec.dwelling_id}: template {template.template_id} does not fit {rec.dwelling_type.value}")
    try:
        rooms = active_rooms(rec.dwelling_type, rec.n_rooms)
    except SurveyValidationError as exc:
        raise TemplateMismatchError(f"{rec.dwelling_id}: {exc}") from exc
    _check_daily_grid(index)

    heaters = settings.heaters()
    scale = rec.floor_area / template.reference_area
    orientation = orientation_for(template, rec.is_south, rooms)

    room_models = []
    for name in rooms:
        geometry = template.room(name)
        power = rec.heater_power[name]
        room_models.append(RoomModel(
            name=name,
            floor_area=geometry.area * scale,
            height=geometry.height,
            facades=tuple(FacadeModel(facade_azimuth(f.offset, orientation), f.wall_area * scale,
                                      f.window_area * scale) for f in geometry.facades),
            party_wall_area=geometry.party_wall_area * scale,
            heater=make_heater(rec.heater_type[name], power, heaters),
            controller=make_controller(rec.controller_type[name], power, settings),
        ))
    partitions = tuple(Partition(p.rooms, p.area * scale) for p in template.partitions
                       if p.rooms[0] in rooms and p.rooms[1] in rooms)

    aux_heater = None
    if rec.aux_heater_power > 0:
        aux = heaters['auxiliary']
        aux_heater = HeaterSpec('auxiliary', rec.aux_heater_power, float(aux['radiative_fraction']),
                                bool(aux['fixed']), 0.0)

    model = BuildingModel(
        dwelling_id=rec.dwelling_id, template_id=template.template_id, dwelling_type=rec.dwelling_type,
        scale=scale, orientation=orientation, climate_zone=zone.zone_id, construction=construction,
        ceiling=template.ceiling, floor=template.floor, rooms=tuple(room_models), partitions=partitions,
        aux_heater=aux_heater)

    days = index[::STEPS_PER_DAY]
    sunsets = sunset_times(zone.latitude, zone.longitude, days)
    presence = pd.DataFrame({name: tile_week(rec.presence_profile[name], index).astype(int) for name in rooms})
    heating = heating_season_mask(index, rec.heating_on_date, rec.heating_off_date,
                                  (settings.heating_on, settings.heating_off))
    burn_hours = float(heaters.get('wood_burn_hours', 3.0))
    schedules = ScheduleSet(
        setpoint=pd.DataFrame({name: tile_week(rec.setpoint_profile[name], index) for name in rooms}),
        presence=presence,
        window=pd.DataFrame({name: tile_week(rec.window_profile[name], index).astype(int) for name in rooms}),
        shutter_closed=pd.DataFrame({name: shutter_schedule(presence[name], sunsets) for name in rooms}),
        heating_active=heating,
        wood_burning=daily_hours_mask(index, rec.wood_reload_hours, burn_hours) * heating,
        aux_active=daily_hours_mask(index, rec.aux_heater_hours, 1.0) * heating,
        heating_on_date=rec.heating_on_date or settings.heating_on,
        heating_off_date=rec.heating_off_date or settings.heating_off,
    ).validate()
    logger.debug("Built model %s: template %s, scale %.3f, orientation %d",
                 rec.dwelling_id, template.template_id, scale, orientation)
    return model, schedules


def write_model(model, schedules, model_path, schedule_path):
    data = model.to_dict()
    data['heating_on_date'] = schedules.heating_on_date
    data['heating_off_date'] = schedules.heating_off_date
    write_json(data, model_path)
    write_frame(schedules.to_frame(), schedule_path)
    return model_path, schedule_path


def read_model(model_path, schedule_path):
    data = read_json(model_path)
    model = BuildingModel.from_dict(data)
    schedules = ScheduleSet.from_frame(read_frame(schedule_path), data.get('heating_on_date'),
                                       data.get('heating_off_date'))
    return model, schedules.validate()
