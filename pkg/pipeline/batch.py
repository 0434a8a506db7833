"""Run many dwelling simulations, in-process or on a process pool, and collect the outcome."""
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

from pipeline.solar import facade_irradiance
from pipeline.thermal import SimulationDivergenceError, SimulationSettings, simulate

logger = logging.getLogger(__name__)

ALL_AZIMUTHS = (0, 90, 180, 270)

# per-process state installed by _init_worker
_WEATHER = {}
_SETTINGS = None
_IRRADIANCE = {}


@dataclass
class BatchResult:
    results: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def n_ok(self):
        return len(self.results)


def _init_worker(weather_by_zone, settings):
    global _WEATHER, _SETTINGS, _IRRADIANCE
    _WEATHER = weather_by_zone
    _SETTINGS = settings
    _IRRADIANCE = {}


def _zone_irradiance(zone_id, index):
    key = (zone_id, index[0], len(index))
    if key not in _IRRADIANCE:
        _IRRADIANCE[key] = facade_irradiance(_WEATHER[zone_id].slice(index), ALL_AZIMUTHS)
    return _IRRADIANCE[key]


def _run_one(model, schedules, out_dir):
    """Simulate one dwelling; never raises, so one failure cannot stop the batch."""
    started = time.perf_counter()
    try:
        weather = _WEATHER[model.climate_zone]
        result = simulate(model, schedules, weather, _SETTINGS,
                          facade_irradiance=_zone_irradiance(model.climate_zone, schedules.index))
        if out_dir is not None:
            path = os.path.join(out_dir, f"{model.dwelling_id}.csv")
            result.to_csv(path)
            result = path
        return model.dwelling_id, result, None, time.perf_counter() - started
    except SimulationDivergenceError as e:
        return model.dwelling_id, None, {'error': str(e), 'step': e.step}, time.perf_counter() - started
    except Exception as e:
        return model.dwelling_id, None, {'error': f"{type(e).__name__}: {e}", 'step': None}, \
            time.perf_counter() - started


def batch_simulate(models, weather_by_zone, settings=None, workers=1, out_dir=None, seed=None,
                   config_digest=None):
    """
    Simulate every (model, schedules) pair. With out_dir, each result is written
    to <out_dir>/<dwelling_id>.csv and `results` maps ids to paths; otherwise it
    maps ids to SimulationResult. Per-dwelling failures are recorded, not raised.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    settings = settings or SimulationSettings()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    batch = BatchResult()
    timings = {}
    started = time.perf_counter()
    logger.info("Simulating %d dwellings on %d worker(s)", len(models), workers)

    outcomes = []
    if workers == 1:
        _init_worker(weather_by_zone, settings)
        outcomes = [_run_one(model, schedules, out_dir) for model, schedules in models]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(weather_by_zone, settings)) as pool:
            futures = [pool.submit(_run_one, model, schedules, out_dir) for model, schedules in models]
            for future in as_completed(futures):
                outcomes.append(future.result())

    for dwelling_id, result, failure, seconds in sorted(outcomes, key=lambda o: o[0]):
        timings[dwelling_id] = round(seconds, 3)
        if failure is None:
            batch.results[dwelling_id] = result
        else:
            logger.error("Simulation failed for %s: %s", dwelling_id, failure['error'])
            batch.failures.append({'dwelling_id': dwelling_id, 'stage': 'simulate', **failure})

    batch.manifest = {
        'seed': seed,
        'config_digest': config_digest,
        'workers': workers,
        'n_dwellings': len(models),
        'n_ok': batch.n_ok,
        'n_failed': len(batch.failures),
        'settings': settings.to_dict(),
        'wall_clock_seconds': round(time.perf_counter() - started, 3),
        'dwelling_seconds': timings,
    }
    logger.info("Batch finished: %d ok, %d failed in %.1f s", batch.n_ok, len(batch.failures),
                batch.manifest['wall_clock_seconds'])
    return batch
