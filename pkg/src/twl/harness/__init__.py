"""Configuration, caching, experiment runners and the command line."""

from .cache import cache_key, cache_load, cache_store
from .config import ExperimentConfig, build_config, load_config
from .experiments import CSV_COLUMNS, ResultRow, run

__all__ = ["CSV_COLUMNS", "ExperimentConfig", "ResultRow", "build_config", "cache_key",
           "cache_load", "cache_store", "load_config", "run"]
