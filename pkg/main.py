"""main.py
Command-line entry point of the comfort data pipeline: synthesizes or ingests
the household survey, generates and simulates a thermal model per dwelling,
labels comfort and trains/evaluates the classifiers.

Exit codes: 0 success, 1 stage failure, 2 configuration error,
3 missing upstream artifact.
"""
import argparse
import logging
import os
import sys

from pipeline.config_loader import STAGES, ConfigValidationError, load_pipeline_config
from pipeline.data_utils import ensure_dir
from pipeline.stages import EXIT_CONFIG_ERROR, run_stage

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
logger = logging.getLogger(__name__)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description="Thermal-comfort data generation and learning pipeline")
    parser.add_argument('--config', help="JSON file merged over config/pipeline.json")
    parser.add_argument('--stage', choices=STAGES, default='pipeline', help="stage to run (default: all)")
    parser.add_argument('--workers', type=int, help="worker processes for simulate/label/train")
    parser.add_argument('--seed', type=int, help="base random seed")
    parser.add_argument('--out', help="output directory")
    return parser.parse_args(argv)


def add_file_logging(out_dir):
    """Mirror the console log into <out>/logs/pipeline.log."""
    path = os.path.join(ensure_dir(os.path.join(out_dir, 'logs')), 'pipeline.log')
    handler = logging.FileHandler(path, encoding='utf-8')
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    return handler


def main(argv=None):
    args = parse_args(argv)
    overrides = {}
    if args.workers is not None:
        overrides['workers'] = args.workers
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out is not None:
        overrides['paths'] = {'output_dir': args.out}
    try:
        config = load_pipeline_config(args.config, overrides)
    except (ConfigValidationError, FileNotFoundError, ValueError) as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG_ERROR

    handler = add_file_logging(config.output_dir)
    try:
        logger.info("Running stage '%s' (config %s, digest %s)", args.stage, config.source, config.digest()[:12])
        status = run_stage(args.stage, config)
        logger.info("Stage '%s' finished with exit status %d", args.stage, status)
        return status
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
