"""Learning and predicting driven spin-ring dynamics from observable records."""

from .errors import (
    ConfigError,
    DataIntegrityError,
    IntegrationError,
    SpindriveError,
    TrainingDivergedError,
)
from .models import IntegratorConfig, ProductStateSpec, SpinModel
from .drives import DriveTrajectory, sample_drive
from .observables import ObservableSeries, max_distance, n_observables, time_grid
from .qdyn import build_initial_state, evolve, half_chain_entropy, measure

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataIntegrityError",
    "DriveTrajectory",
    "IntegrationError",
    "IntegratorConfig",
    "ObservableSeries",
    "ProductStateSpec",
    "SpinModel",
    "SpindriveError",
    "TrainingDivergedError",
    "build_initial_state",
    "evolve",
    "half_chain_entropy",
    "max_distance",
    "measure",
    "n_observables",
    "sample_drive",
    "time_grid",
    "__version__",
]
