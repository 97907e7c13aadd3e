"""Experiment drivers, configuration and on-disk formats."""

from .config import InitialDataSpec, RunConfig, load_config
from .experiments import (
    RunResult,
    eps_sweep,
    linear_decay_check,
    refinement_study,
    run,
    tfe_reduction,
)

__all__ = [
    "InitialDataSpec",
    "RunConfig",
    "RunResult",
    "eps_sweep",
    "linear_decay_check",
    "load_config",
    "refinement_study",
    "run",
    "tfe_reduction",
]
