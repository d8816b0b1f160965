from .config import ExperimentConfig, load_config
from .exceptions import ConfigurationError, NumericalFailure
from .manager import SimulationManager
from .receiver import JccctReceiver

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ExperimentConfig",
    "JccctReceiver",
    "NumericalFailure",
    "SimulationManager",
    "load_config",
]
