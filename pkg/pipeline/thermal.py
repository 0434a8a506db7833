"""
Lumped RC thermal network of a dwelling and its season-long integration.

Each room is an air node. Every opaque element (facade wall, roof, floor,
party wall, internal partition) is a chain of conduction cells of at most
5 cm, ordered outside -> inside, ending on a massless interior surface node
that exchanges with the room air by convection (h_in). Windows are massless
conductances to the outdoor air. The linear network is advanced with implicit
Euler; controllers, windows and shutters are evaluated explicitly once per
sub-step, and results are sampled on the 1800 s grid.
"""
import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd
from scipy.linalg import lu_factor, lu_solve

from pipeline.data_utils import read_frame, write_frame
from pipeline.solar import facade_irradiance as compute_facade_irradiance
from pipeline.weather import interpolate_substeps

logger = logging.getLogger(__name__)

MAX_CELL_THICKNESS = 0.05
AIR_DENSITY = 1.2
AIR_HEAT_CAPACITY = 1005.0
OUTPUT_STEP = 1800
INTEGER_QUANTITIES = ('window_open', 'presence')
BOUNDARY_KINDS = ('exterior', 'ground', 'neighbor', 'partition', 'adiabatic')
CONTROLLER_KINDS = ('PID', 'deadband', 'none')
RESULT_QUANTITIES = ('t_air', 't_mr', 't_op', 'q_conv', 'q_rad', 'window_open', 'presence')


class MaterialError(ValueError):
    pass


class SimulationDivergenceError(ArithmeticError):
    """Non-finite state; carries the dwelling and the output step where it appeared."""

    def __init__(self, dwelling_id, step, message='non-finite temperature'):
        self.dwelling_id = dwelling_id
        self.step = step
        super().__init__(f"{dwelling_id}: {message} at step {step}")


@dataclass(frozen=True)
class Material:
    name: str
    conductivity: float
    density: float
    specific_heat: float

    def __post_init__(self):
        for name in ('conductivity', 'density', 'specific_heat'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise MaterialError(f"material '{self.name}': {name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness: float

    def __post_init__(self):
        if not (math.isfinite(self.thickness) and self.thickness > 0):
            raise MaterialError(f"layer of '{self.material.name}': thickness must be > 0, got {self.thickness!r}")


@dataclass(frozen=True, eq=False)
class WallAssembly:
    """Discretized opaque element; capacities and conductances already multiplied by area."""
    area: float
    thickness: np.ndarray
    capacity: np.ndarray
    conductance: np.ndarray
    outer_conductance: float
    inner_conductance: float
    layer_of_cell: np.ndarray
    boundary: str = 'adiabatic'
    azimuth: float = None
    h_in: float = 7.7
    h_out: float = 25.0

    @property
    def n_cells(self):
        return len(self.capacity)

    def resistance(self):
        """Face-to-face resistance of the discrete chain (K/W)."""
        return 1.0 / self.outer_conductance + float(np.sum(1.0 / self.conductance)) + 1.0 / self.inner_conductance

    def u_value(self):
        """Air-to-air transmittance with both film coefficients (W/m2K)."""
        return 1.0 / (self.area * (1.0 / (self.h_out * self.area) + self.resistance() + 1.0 / (self.h_in * self.area)))


def discretize_wall(layers, area=1.0, boundary='adiabatic', azimuth=None, h_in=7.7, h_out=25.0,
                    max_cell=MAX_CELL_THICKNESS):
    """
    Split each layer into ceil(thickness / max_cell) equal cells so that cell
    boundaries fall on material changes. Nodes sit at cell centres.
    """
    if not layers:
        raise MaterialError("a wall needs at least one layer")
    if not area > 0:
        raise MaterialError(f"wall area must be > 0, got {area}")
    if boundary not in BOUNDARY_KINDS:
        raise ValueError(f"unknown boundary kind '{boundary}'")

    thickness, capacity, resistance, layer_of_cell = [], [], [], []
    for i, layer in enumerate(layers):
        n = max(1, math.ceil(layer.thickness / max_cell - 1e-9))
        dx = layer.thickness / n
        m = layer.material
        for _ in range(n):
            thickness.append(dx)
            capacity.append(m.density * m.specific_heat * dx * area)
            # half-cell resistance, K/W
            resistance.append(dx / (2.0 * m.conductivity * area))
            layer_of_cell.append(i)
    resistance = np.array(resistance)
    return WallAssembly(
        area=float(area),
        thickness=np.array(thickness),
        capacity=np.array(capacity),
        conductance=1.0 / (resistance[:-1] + resistance[1:]),
        outer_conductance=1.0 / resistance[0],
        inner_conductance=1.0 / resistance[-1],
        layer_of_cell=np.array(layer_of_cell),
        boundary=boundary,
        azimuth=azimuth,
        h_in=h_in,
        h_out=h_out,
    )


# ---------------------------------------------------------------- heaters and controllers

@dataclass(frozen=True)
class HeaterSpec:
    kind: str
    p_nom: float
    radiative_fraction: float
    fixed: bool = True
    burn_hours: float = 0.0

    def __post_init__(self):
        if not self.p_nom >= 0:
            raise ValueError(f"heater P_nom must be >= 0, got {self.p_nom}")
        if not 0.0 <= self.radiative_fraction <= 1.0:
            raise ValueError(f"radiative fraction must lie in [0, 1], got {self.radiative_fraction}")

    def split(self, power):
        """(convective, radiative) parts of a heat output."""
        return power * (1.0 - self.radiative_fraction), power * self.radiative_fraction

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class ControllerSpec:
    kind: str
    p_nom: float
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    half_width: float = 0.5

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind '{self.kind}'")
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("controller gains must be >= 0")
        if not self.half_width > 0:
            raise ValueError("deadband half-width must be > 0")

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class ControllerState:
    integral: np.ndarray
    prev_error: np.ndarray
    on: np.ndarray

    @classmethod
    def initial(cls, n):
        return cls(np.zeros(n), np.full(n, np.nan), np.zeros(n, dtype=bool))

    def reset(self, mask):
        self.integral[mask] = 0.0
        self.prev_error[mask] = np.nan
        self.on[mask] = False


@dataclass(frozen=True)
class ControllerBank:
    """Controllers of several rooms evaluated together."""
    kind: np.ndarray
    p_nom: np.ndarray
    kp: np.ndarray
    ki: np.ndarray
    kd: np.ndarray
    half_width: np.ndarray

    @classmethod
    def from_specs(cls, specs):
        codes = np.array([CONTROLLER_KINDS.index(s.kind) for s in specs], dtype=int)
        return cls(codes, *(np.array([getattr(s, name) for s in specs], dtype=float)
                            for name in ('p_nom', 'kp', 'ki', 'kd', 'half_width')))

    def command(self, setpoint, t_air, dt, state):
        """Commanded power in [0, P_nom] per room; updates `state` in place."""
        error = setpoint - t_air

        # positional PID, integrating only while the output is unsaturated or unwinding
        derivative = np.where(np.isnan(state.prev_error), 0.0, (error - state.prev_error) / dt)
        integral = state.integral + error * dt
        raw = self.kp * error + self.ki * integral + self.kd * derivative
        integrate = ((raw >= 0.0) & (raw <= self.p_nom)) | ((raw > self.p_nom) & (error < 0)) | ((raw < 0.0) & (error > 0))
        pid = self.kind == 0
        state.integral = np.where(pid & integrate, integral, state.integral)
        state.prev_error = np.where(pid, error, state.prev_error)
        pid_power = np.clip(self.kp * error + self.ki * state.integral + self.kd * derivative, 0.0, self.p_nom)

        deadband = self.kind == 1
        below = t_air < setpoint - self.half_width
        above = t_air > setpoint + self.half_width
        state.on = np.where(deadband & below, True, np.where(deadband & above, False, state.on))

        return np.where(pid, pid_power, np.where(deadband & state.on, self.p_nom, 0.0))


def control(controller, setpoint, t_air, dt, state=None):
    """Single-room controller output; returns (power, state)."""
    bank = ControllerBank.from_specs([controller])
    state = state or ControllerState.initial(1)
    power = bank.command(np.array([setpoint], dtype=float), np.array([t_air], dtype=float), dt, state)
    return float(power[0]), state


def window_logic(is_open, instruction, t_air, setpoint, close_threshold=3.0):
    """
    Window state after one evaluation. A closed window opens when it is allowed
    to and the air has reached the setpoint; an open one closes once the air is
    close_threshold below the setpoint or the instruction is withdrawn.
    """
    is_open = np.asarray(is_open, dtype=bool)
    instruction = np.asarray(instruction, dtype=bool)
    t_air = np.asarray(t_air, dtype=float)
    setpoint = np.asarray(setpoint, dtype=float)
    closes = ~instruction | (setpoint - t_air >= close_threshold)
    opens = instruction & (t_air >= setpoint)
    result = np.where(is_open, ~closes, opens)
    return bool(result) if result.ndim == 0 else result


# ---------------------------------------------------------------- network

@dataclass
class Zone:
    name: str
    air: int
    volume: float
    infiltration: float
    surfaces: list = field(default_factory=list)
    windows: list = field(default_factory=list)

    def surface_nodes(self):
        return np.array([node for node, _ in self.surfaces], dtype=int)

    def surface_areas(self):
        return np.array([area for _, area in self.surfaces], dtype=float)


@dataclass
class StepInputs:
    """Boundary conditions and gains over one sub-step, per zone where it applies."""
    t_out: float
    q_air: np.ndarray
    q_surface: np.ndarray
    window_open: np.ndarray
    shutter_closed: np.ndarray


class ThermalNetwork:
    """Node capacities, conductances and boundary links; solved with cached LU factors."""

    def __init__(self, window_u=0.0, ventilation_ach=10.0, shutter_u_factor=0.85):
        self.capacity = []
        self.edges = []
        self.to_outdoor = []
        self.to_fixed = []
        self.zones = []
        self.window_u = window_u
        self.ventilation_ach = ventilation_ach
        self.shutter_u_factor = shutter_u_factor
        self._assembled = None
        self._lu_cache = {}

    @property
    def n_nodes(self):
        return len(self.capacity)

    def add_node(self, capacity=0.0):
        self.capacity.append(float(capacity))
        self._assembled = None
        return len(self.capacity) - 1

    def add_zone(self, name, capacity, volume=0.0, infiltration_ach=0.0):
        air = self.add_node(capacity)
        infiltration = AIR_DENSITY * AIR_HEAT_CAPACITY * volume * infiltration_ach / 3600.0
        if infiltration > 0:
            self.to_outdoor.append((air, infiltration))
        self.zones.append(Zone(name, air, volume, infiltration))
        return len(self.zones) - 1

    def _connect(self, i, j, g):
        if not g > 0:
            raise MaterialError(f"conductance must be > 0, got {g}")
        self.edges.append((i, j, float(g)))

    def _surface(self, zone, area, h_in):
        node = self.add_node(0.0)
        self._connect(node, self.zones[zone].air, h_in * area)
        self.zones[zone].surfaces.append((node, area))
        return node

    def add_wall(self, wall, zone, other_zone=None, boundary_temperature=None):
        """Attach a WallAssembly to `zone`; its outer face follows wall.boundary."""
        cells = [self.add_node(c) for c in wall.capacity]
        for (a, b), g in zip(zip(cells[:-1], cells[1:]), wall.conductance):
            self._connect(a, b, g)
        self._connect(cells[-1], self._surface(zone, wall.area, wall.h_in), wall.inner_conductance)

        outer = cells[0]
        if wall.boundary == 'exterior':
            g = 1.0 / (1.0 / (wall.h_out * wall.area) + 1.0 / wall.outer_conductance)
            self.to_outdoor.append((outer, g))
        elif wall.boundary == 'neighbor':
            g = 1.0 / (1.0 / (wall.h_in * wall.area) + 1.0 / wall.outer_conductance)
            self.to_fixed.append((outer, g, float(boundary_temperature)))
        elif wall.boundary == 'ground':
            self.to_fixed.append((outer, wall.outer_conductance, float(boundary_temperature)))
        elif wall.boundary == 'partition':
            if other_zone is None:
                raise ValueError("a partition needs the zone on its other side")
            self._connect(outer, self._surface(other_zone, wall.area, wall.h_in), wall.outer_conductance)
        self._assembled = None
        return cells

    def add_window(self, zone, area, azimuth, shgc):
        self.zones[zone].windows.append((float(area), azimuth, float(shgc)))

    # -- assembly

    def assemble(self):
        if self._assembled is not None:
            return self._assembled
        n = self.n_nodes
        k = np.zeros((n, n))
        for i, j, g in self.edges:
            k[i, i] += g
            k[j, j] += g
            k[i, j] -= g
            k[j, i] -= g
        g_out = np.zeros(n)
        for i, g in self.to_outdoor:
            k[i, i] += g
            g_out[i] += g
        b_fixed = np.zeros(n)
        for i, g, temperature in self.to_fixed:
            k[i, i] += g
            b_fixed[i] += g * temperature

        # radiative and solar gains spread over each zone's surfaces by area
        spread = np.zeros((n, len(self.zones)))
        for z, zone in enumerate(self.zones):
            if zone.surfaces:
                areas = zone.surface_areas()
                spread[zone.surface_nodes(), z] = areas / areas.sum()
            else:
                spread[zone.air, z] = 1.0

        air = np.array([zone.air for zone in self.zones], dtype=int)
        window_area = np.array([sum(a for a, _, _ in zone.windows) for zone in self.zones])
        ventilation = np.array([AIR_DENSITY * AIR_HEAT_CAPACITY * zone.volume * self.ventilation_ach / 3600.0
                                for zone in self.zones])
        self._assembled = {
            'capacity': np.array(self.capacity), 'k': k, 'g_out': g_out, 'b_fixed': b_fixed,
            'spread': spread, 'air': air, 'window_area': window_area, 'ventilation': ventilation,
        }
        self._lu_cache = {}
        return self._assembled

    def variable_conductance(self, window_open, shutter_closed):
        net = self.assemble()
        u_factor = np.where(shutter_closed, self.shutter_u_factor, 1.0)
        return self.window_u * net['window_area'] * u_factor + np.where(window_open, net['ventilation'], 0.0)

    def _factor(self, dt, window_open, shutter_closed):
        key = (dt, np.asarray(window_open, dtype=bool).tobytes(), np.asarray(shutter_closed, dtype=bool).tobytes())
        lu = self._lu_cache.get(key)
        if lu is None:
            net = self.assemble()
            a = net['k'] + np.diag(net['capacity'] / dt)
            a[net['air'], net['air']] += self.variable_conductance(window_open, shutter_closed)
            lu = lu_factor(a)
            if len(self._lu_cache) > 512:
                self._lu_cache.clear()
            self._lu_cache[key] = lu
        return lu

    def step(self, temperatures, inputs, dt):
        """Advance all node temperatures by one implicit-Euler sub-step."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        net = self.assemble()
        rhs = net['capacity'] / dt * temperatures + net['b_fixed'] + net['g_out'] * inputs.t_out
        rhs[net['air']] += inputs.q_air + self.variable_conductance(inputs.window_open,
                                                                    inputs.shutter_closed) * inputs.t_out
        rhs += net['spread'] @ inputs.q_surface
        return lu_solve(self._factor(dt, inputs.window_open, inputs.shutter_closed), rhs, check_finite=False)

    def air_temperatures(self, temperatures):
        return temperatures[self.assemble()['air']]

    def mean_radiant(self, temperatures):
        """Area-weighted mean of each zone's interior surface temperatures (air if it has none)."""
        out = np.empty(len(self.zones))
        for z, zone in enumerate(self.zones):
            if zone.surfaces:
                areas = zone.surface_areas()
                out[z] = temperatures[zone.surface_nodes()] @ areas / areas.sum()
            else:
                out[z] = temperatures[zone.air]
        return out

    def stored_energy(self, temperatures):
        return float(self.assemble()['capacity'] @ temperatures)


def step(network, state, inputs, dt):
    return network.step(state, inputs, dt)


# ---------------------------------------------------------------- settings and results

@dataclass(frozen=True)
class SimulationSettings:
    sub_step_seconds: int = 300
    window_close_threshold: float = 3.0
    window_open_ach: float = 10.0
    shutter_solar_factor: float = 0.1
    shutter_u_factor: float = 0.85
    neighbor_temperature: float = 19.0
    ground_temperature: float = 10.0
    furniture_multiplier: float = 1.0
    initial_temperature: float = 18.0

    def __post_init__(self):
        if self.sub_step_seconds <= 0 or OUTPUT_STEP % self.sub_step_seconds != 0:
            raise ValueError(f"sub-step must divide {OUTPUT_STEP} s, got {self.sub_step_seconds}")

    @classmethod
    def from_config(cls, config):
        sim = config.simulation
        known = cls.__dataclass_fields__
        return cls(**{name: sim[name] for name in known if name in sim})

    def to_dict(self):
        return asdict(self)


@dataclass(eq=False)
class SimulationResult:
    """Per-room series on the 1800 s grid; columns '<room>.<quantity>' plus 't_out'."""
    dwelling_id: str
    frame: pd.DataFrame

    @property
    def rooms(self):
        return [c[:-len('.t_air')] for c in self.frame.columns if c.endswith('.t_air')]

    @property
    def index(self):
        return self.frame.index

    def room_frame(self, quantity):
        return pd.DataFrame({room: self.frame[f"{room}.{quantity}"] for room in self.rooms}, index=self.index)

    def validate(self):
        index = self.index
        offsets = (index.asi8 - index.asi8[0]) // 10**9
        if np.any(offsets != np.arange(len(index)) * OUTPUT_STEP):
            raise ValueError(f"{self.dwelling_id}: result grid is not uniform {OUTPUT_STEP} s")
        for room in self.rooms:
            t_op = (self.frame[f"{room}.t_air"] + self.frame[f"{room}.t_mr"]) / 2.0
            if not np.allclose(self.frame[f"{room}.t_op"], t_op, rtol=0.0, atol=1e-12):
                raise ValueError(f"{self.dwelling_id}.{room}: t_op differs from (t_air + t_mr) / 2")
        return self

    def to_csv(self, path):
        return write_frame(self.frame, path)

    @classmethod
    def from_csv(cls, dwelling_id, path):
        frame = read_frame(path)
        # an all-zero column is written as "0" and would come back int64
        dtypes = {c: (int if c.rsplit('.', 1)[-1] in INTEGER_QUANTITIES else float) for c in frame.columns}
        return cls(dwelling_id, frame.astype(dtypes))


# ---------------------------------------------------------------- model -> network

def build_network(model, settings=None):
    """Thermal network of a BuildingModel; zone order follows model.rooms."""
    settings = settings or SimulationSettings()
    record = model.construction
    net = ThermalNetwork(window_u=record.window_U, ventilation_ach=settings.window_open_ach,
                         shutter_u_factor=settings.shutter_u_factor)
    h_in, h_out = record.h_in, record.h_out

    def boundary_temperature(kind):
        return settings.ground_temperature if kind == 'ground' else settings.neighbor_temperature

    def horizontal_layers(kind, default):
        return record.floor_layers if kind in ('neighbor', 'ground') else default

    zone_of = {}
    for room in model.rooms:
        capacity = AIR_DENSITY * AIR_HEAT_CAPACITY * room.volume * settings.furniture_multiplier
        z = net.add_zone(room.name, capacity, room.volume, record.infiltration_ach)
        zone_of[room.name] = z
        for facade in room.facades:
            if facade.wall_area > 0:
                net.add_wall(discretize_wall(record.wall_layers, facade.wall_area, 'exterior', facade.azimuth,
                                             h_in, h_out), z)
            if facade.window_area > 0:
                net.add_window(z, facade.window_area, facade.azimuth, record.window_SHGC)
        if room.party_wall_area > 0:
            net.add_wall(discretize_wall(record.wall_layers, room.party_wall_area, 'neighbor', None, h_in, h_out),
                         z, boundary_temperature=settings.neighbor_temperature)
        for kind, default in ((model.ceiling, record.roof_layers), (model.floor, record.floor_layers)):
            wall = discretize_wall(horizontal_layers(kind, default), room.floor_area, kind, None, h_in, h_out)
            net.add_wall(wall, z, boundary_temperature=boundary_temperature(kind))
    for partition in model.partitions:
        a, b = partition.rooms
        wall = discretize_wall(record.partition_layers, partition.area, 'partition', None, h_in, h_out)
        net.add_wall(wall, zone_of[a], other_zone=zone_of[b])
    net.assemble()
    return net


def _interval_values(frame, rooms):
    return frame[rooms].to_numpy(dtype=float)


def simulate(model, schedules, weather, settings=None, facade_irradiance=None):
    """
    Season simulation of one dwelling. `weather` must cover the schedule grid;
    `facade_irradiance` (one column per facade azimuth) may be precomputed.
    """
    settings = settings or SimulationSettings()
    index = schedules.index
    weather = weather.slice(index)
    rooms = model.room_names
    n_zones, n_steps = len(rooms), len(index)
    n_sub = OUTPUT_STEP // settings.sub_step_seconds
    dt = float(settings.sub_step_seconds)

    net = build_network(model, settings)
    if facade_irradiance is None:
        facade_irradiance = compute_facade_irradiance(weather, model.facade_azimuths())

    # boundary conditions at every sub-step end
    t_out = interpolate_substeps(weather.frame['t_out'].to_numpy(), n_sub)
    solar = np.zeros((len(t_out), n_zones))
    for z, zone in enumerate(net.zones):
        for area, azimuth, shgc in zone.windows:
            solar[:, z] += shgc * area * interpolate_substeps(facade_irradiance[azimuth].to_numpy(), n_sub)

    setpoint = _interval_values(schedules.setpoint, rooms)
    presence = _interval_values(schedules.presence, rooms)
    instruction = _interval_values(schedules.window, rooms) > 0.5
    shutter = _interval_values(schedules.shutter_closed, rooms) > 0.5
    heating = schedules.heating_active.to_numpy() > 0
    wood = schedules.wood_burning.to_numpy() > 0
    aux = schedules.aux_active.to_numpy() > 0

    heaters = [model.room(name).heater for name in rooms]
    bank = ControllerBank.from_specs([model.room(name).controller for name in rooms])
    is_wood = np.array([h.kind == 'wood' for h in heaters])
    wood_power = np.array([h.p_nom if h.kind == 'wood' else 0.0 for h in heaters])
    rad_fraction = np.array([h.radiative_fraction for h in heaters])
    aux_zone = rooms.index('living') if 'living' in rooms else 0
    aux_heater = model.aux_heater

    air_nodes = net.assemble()['air']
    temps = np.full(net.n_nodes, float(settings.initial_temperature))
    state = ControllerState.initial(n_zones)
    window_open = np.zeros(n_zones, dtype=bool)

    out_air = np.empty((n_steps, n_zones))
    out_mr = np.empty((n_steps, n_zones))
    out_conv = np.zeros((n_steps, n_zones))
    out_rad = np.zeros((n_steps, n_zones))
    out_window = np.zeros((n_steps, n_zones))
    out_air[0] = net.air_temperatures(temps)
    out_mr[0] = net.mean_radiant(temps)

    for k in range(n_steps - 1):
        active = heating[k]
        if not active:
            state.reset(np.ones(n_zones, dtype=bool))
        conv_sum = np.zeros(n_zones)
        rad_sum = np.zeros(n_zones)
        for j in range(n_sub):
            s = k * n_sub + j + 1
            t_air = temps[air_nodes]
            power = bank.command(setpoint[k], t_air, dt, state) if active else np.zeros(n_zones)
            power = np.where(is_wood, wood_power if wood[k] else 0.0, power)
            q_conv = power * (1.0 - rad_fraction)
            q_rad = power * rad_fraction
            if aux_heater is not None and aux[k]:
                conv, rad = aux_heater.split(aux_heater.p_nom)
                q_conv[aux_zone] += conv
                q_rad[aux_zone] += rad
            window_open = window_logic(window_open, instruction[k], t_air, setpoint[k],
                                       settings.window_close_threshold)
            solar_gain = solar[s] * np.where(shutter[k], settings.shutter_solar_factor, 1.0)
            inputs = StepInputs(t_out[s], q_conv, q_rad + solar_gain, window_open, shutter[k])
            temps = net.step(temps, inputs, dt)
            if not np.all(np.isfinite(temps)):
                raise SimulationDivergenceError(model.dwelling_id, k + 1)
            conv_sum += q_conv
            rad_sum += q_rad
        out_air[k + 1] = net.air_temperatures(temps)
        out_mr[k + 1] = net.mean_radiant(temps)
        out_conv[k + 1] = conv_sum / n_sub
        out_rad[k + 1] = rad_sum / n_sub
        out_window[k + 1] = window_open

    columns = {}
    for z, room in enumerate(rooms):
        columns[f"{room}.t_air"] = out_air[:, z]
        columns[f"{room}.t_mr"] = out_mr[:, z]
        columns[f"{room}.t_op"] = (out_air[:, z] + out_mr[:, z]) / 2.0
        columns[f"{room}.q_conv"] = out_conv[:, z]
        columns[f"{room}.q_rad"] = out_rad[:, z]
        columns[f"{room}.window_open"] = out_window[:, z].astype(int)
        columns[f"{room}.presence"] = presence[:, z].astype(int)
    columns['t_out'] = weather.frame['t_out'].to_numpy()
    return SimulationResult(model.dwelling_id, pd.DataFrame(columns, index=index))
