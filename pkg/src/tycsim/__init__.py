"""Simulation and analysis toolkit for the modified Trojan Y chromosome reaction-diffusion model."""

from .analysis import critical_beta, steady_states
from .config import ScenarioConfig, load_config, parse_config
from .grid import build_grid
from .integrator import run
from .model import MuSchedule, Parameters

__all__ = [
    "MuSchedule",
    "Parameters",
    "ScenarioConfig",
    "build_grid",
    "critical_beta",
    "load_config",
    "parse_config",
    "run",
    "steady_states",
]
__version__ = "0.1.0"
