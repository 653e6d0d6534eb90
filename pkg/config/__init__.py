"""
Package de configuration du solveur Wentzell fractionnaire
"""

from .settings import (
    GeometryConfig,
    QuadratureConfig,
    SolverConfig,
    FitConfig,
    PresetConfig,
    RuntimeConfig
)
from .run_config import RunConfig, load_run_config

__all__ = [
    'GeometryConfig',
    'QuadratureConfig',
    'SolverConfig',
    'FitConfig',
    'PresetConfig',
    'RuntimeConfig',
    'RunConfig',
    'load_run_config'
]
