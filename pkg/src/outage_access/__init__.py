"""Coupled power-outage and food-access analysis for small spatial zones."""

from .config import ConfigError, PipelineConfig, StudyWindow, SynthConfig
from .pipeline import STAGES, run_pipeline, run_stage

__all__ = ["ConfigError", "PipelineConfig", "StudyWindow", "SynthConfig", "STAGES", "run_pipeline", "run_stage"]
__version__ = "0.1.0"
