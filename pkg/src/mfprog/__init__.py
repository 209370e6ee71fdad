"""Multivariate functional data analysis for run-to-failure prognostics."""

__version__ = "0.1.0"

from .config import PipelineConfig, load_config
from .pipeline import fit_pipeline, predict_fleet

__all__ = ["PipelineConfig", "load_config", "fit_pipeline", "predict_fleet", "__version__"]
