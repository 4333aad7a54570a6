"""Config-driven experiment pipeline with content-digest stage caching."""

from .config import CONFIG_VERSION, ExperimentConfig, validate
from .planted import PlantedExperiment, build_planted_experiment
from .report import missing_stages, report_standalone
from .run import run

__all__ = [
    "CONFIG_VERSION",
    "ExperimentConfig",
    "PlantedExperiment",
    "build_planted_experiment",
    "missing_stages",
    "report_standalone",
    "run",
    "validate",
]
