"""Stochastic prey-predator dynamics with additional food and optimal food control."""

from .model import PUBLISHED_PARAMS, DimensionalParams, Equilibrium, InvalidInputError, ModelParams, State
from .noise import DEFAULT_SEED, NoiseParams
from .sim import ControlSchedule, NumericalOverflowError, Path, SimConfig

__version__ = "0.1.0"

__all__ = [
    "PUBLISHED_PARAMS",
    "DimensionalParams",
    "Equilibrium",
    "InvalidInputError",
    "ModelParams",
    "State",
    "DEFAULT_SEED",
    "NoiseParams",
    "ControlSchedule",
    "NumericalOverflowError",
    "Path",
    "SimConfig",
]
