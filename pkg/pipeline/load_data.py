"""Load the artifacts one stage hands to the next from the output directory."""
import glob
import logging
import os

from pipeline.labels import read_labels
from pipeline.model_gen import read_model
from pipeline.survey import parse_survey
from pipeline.thermal import SimulationResult
from pipeline.weather import load_weather, weather_path

logger = logging.getLogger(__name__)

# artifact directory -> stage producing it
PRODUCERS = {
    'survey': 'ingest',
    'weather': 'synth',
    'models': 'generate',
    'results': 'simulate',
    'labels': 'label',
    'dataset': 'train',
    'train': 'train',
    'reports': 'evaluate',
}


class MissingArtifactError(FileNotFoundError):
    """An upstream artifact is absent; `stage` is the stage to rerun."""

    def __init__(self, path, stage):
        self.path = path
        self.stage = stage
        super().__init__(f"Missing artifact {path}: run the '{stage}' stage first")


def require(path, stage):
    if not os.path.exists(path):
        raise MissingArtifactError(path, stage)
    return path


def _ids(directory, suffix, stage):
    require(directory, stage)
    paths = sorted(glob.glob(os.path.join(directory, f"*{suffix}")))
    if not paths:
        raise MissingArtifactError(os.path.join(directory, f"*{suffix}"), stage)
    return [os.path.basename(p)[:-len(suffix)] for p in paths]


def load_clean_survey(out_dir, exclusions=None):
    """Records that passed ingest, keyed by dwelling id."""
    path = require(os.path.join(out_dir, 'survey', 'clean.csv'), PRODUCERS['survey'])
    logger.info("Loading clean survey from %s", path)
    return {r.dwelling_id: r for r in parse_survey(path, exclusions=exclusions)}


def load_weather_zones(weather_dir, zone_ids, stage=PRODUCERS['weather']):
    zones = {}
    for zone_id in sorted(set(zone_ids)):
        zones[zone_id] = load_weather(require(weather_path(weather_dir, zone_id), stage))
    return zones


def load_models(out_dir):
    """(BuildingModel, ScheduleSet) pairs sorted by dwelling id."""
    directory = os.path.join(out_dir, 'models')
    pairs = []
    for dwelling_id in _ids(directory, '.model.json', PRODUCERS['models']):
        schedule_path = require(os.path.join(directory, f"{dwelling_id}.schedule.csv"), PRODUCERS['models'])
        pairs.append(read_model(os.path.join(directory, f"{dwelling_id}.model.json"), schedule_path))
    logger.info("Loaded %d dwelling models from %s", len(pairs), directory)
    return pairs


def load_results(out_dir):
    directory = os.path.join(out_dir, 'results')
    results = {dwelling_id: SimulationResult.from_csv(dwelling_id, os.path.join(directory, f"{dwelling_id}.csv"))
               for dwelling_id in _ids(directory, '.csv', PRODUCERS['results'])}
    logger.info("Loaded %d simulation results from %s", len(results), directory)
    return results


def load_label_frames(out_dir):
    directory = os.path.join(out_dir, 'labels')
    frames = {dwelling_id: read_labels(os.path.join(directory, f"{dwelling_id}.csv"))
              for dwelling_id in _ids(directory, '.csv', PRODUCERS['labels'])}
    logger.info("Loaded %d label series from %s", len(frames), directory)
    return frames
