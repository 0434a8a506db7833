"""Module for loading JSON configuration files from a project-level 'config' directory."""
import copy
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, asdict

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = 'pipeline.json'
STAGES = ('synth', 'ingest', 'generate', 'simulate', 'label', 'train', 'evaluate', 'pipeline')
CLASSIFIERS = ('random_forest', 'decision_tree', 'gradient_boosting', 'mlp')
SPLIT_MODES = ('by_step', 'by_dwelling')


class ConfigValidationError(ValueError):
    """Raised with every problem found in a configuration, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("Invalid configuration:\n  - " + "\n  - ".join(self.errors))


def config_path(filename):
    """Absolute path of a file in the project-level 'config' directory."""
    project_root = os.path.dirname(os.path.dirname(__file__))
    return os.path.join(project_root, 'config', filename)


def load_json_config(filename):
    """
    Load a JSON config file from the project-level 'config' directory,
    no matter where this module is run from.
    """
    path = config_path(filename)

    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found: {path}")

    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def deep_merge(base, override):
    """Recursively merge `override` into a copy of `base`."""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass
class PipelineConfig:
    """Fully-resolved run configuration; every default is present explicitly."""
    paths: dict
    seed: int
    workers: int
    synth: dict
    season: dict
    survey: dict
    simulation: dict
    labels: dict
    split: dict
    models: dict
    multihorizon: dict
    source: str = field(default=DEFAULT_CONFIG, compare=False)

    @classmethod
    def from_dict(cls, data, source=DEFAULT_CONFIG):
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data and k != 'source'}
        missing = [k for k in cls.__dataclass_fields__ if k not in known and k != 'source']
        if missing:
            raise ConfigValidationError([f"missing section '{k}'" for k in missing])
        return cls(source=source, **known)

    def to_dict(self):
        data = asdict(self)
        data.pop('source')
        return data

    def digest(self):
        """SHA-256 of the canonical JSON form of the resolved config."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    @property
    def output_dir(self):
        return self.paths['output_dir']

    def stage_seed(self, offset):
        """Seed for one consumer, derived from the base seed."""
        return int(self.seed) + int(offset)

    def validate(self, stage='pipeline'):
        """Check the whole config for `stage`; raise ConfigValidationError listing all problems."""
        errors = []
        if stage not in STAGES:
            errors.append(f"unknown stage '{stage}'")
        if not isinstance(self.workers, int) or self.workers < 1:
            errors.append(f"workers must be an integer >= 1, got {self.workers!r}")
        if not isinstance(self.seed, int):
            errors.append(f"seed must be an integer, got {self.seed!r}")

        for key in ('templates', 'constructions', 'climate_zones', 'heaters', 'exclusions'):
            name = self.paths.get(key)
            if name is None:
                errors.append(f"paths.{key} is not set")
            elif not os.path.exists(config_path(name)):
                errors.append(f"paths.{key}: data file not found: {config_path(name)}")

        if stage == 'ingest' and not os.path.exists(self.paths.get('survey', '')):
            errors.append(f"paths.survey: survey file not found: {self.paths.get('survey')}")
        if stage == 'simulate' and not os.path.isdir(self.paths.get('weather_dir', '')):
            errors.append(f"paths.weather_dir: directory not found: {self.paths.get('weather_dir')}")

        if self.synth.get('n_dwellings', 0) < 1:
            errors.append("synth.n_dwellings must be >= 1")
        if self.season.get('step_seconds') != 1800:
            errors.append("season.step_seconds must be 1800")
        sub_step = self.simulation.get('sub_step_seconds', 0)
        if sub_step <= 0 or 1800 % sub_step != 0:
            errors.append("simulation.sub_step_seconds must divide 1800")

        fractions = self.split.get('fractions', [])
        if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions, default=0) <= 0:
            errors.append(f"split.fractions must be three positive values summing to 1, got {fractions}")
        for mode in self.split.get('modes', []):
            if mode not in SPLIT_MODES:
                errors.append(f"split.modes: unknown mode '{mode}'")
        for name in self.models.get('classifiers', []):
            if name not in CLASSIFIERS:
                errors.append(f"models.classifiers: unknown classifier '{name}'")
        if self.multihorizon.get('past_window', 0) < 1:
            errors.append("multihorizon.past_window must be >= 1")

        if errors:
            raise ConfigValidationError(errors)
        logger.info("Configuration valid for stage '%s' (digest %s)", stage, self.digest()[:12])
        return self


def load_pipeline_config(path=None, overrides=None):
    """
    Build a PipelineConfig from the shipped defaults, an optional user JSON
    file and a dict of overrides (CLI flags), in that order of precedence.
    """
    data = load_json_config(DEFAULT_CONFIG)
    source = DEFAULT_CONFIG
    if path is not None:
        if not os.path.exists(path):
            raise FileNotFoundError(f"Config file not found: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            data = deep_merge(data, json.load(f))
        source = path
    data = deep_merge(data, overrides)
    return PipelineConfig.from_dict(data, source=source)
