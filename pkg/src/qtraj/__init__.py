"""Quantum-trajectory simulation of noisy multi-qubit protocols."""

from .state import DensityMatrix, StateVector
from .noise import NoiseChannel, NoiseParams
from .engine import NOISE, EnsembleEstimate, TrajectoryConfig

__all__ = [
    "DensityMatrix",
    "StateVector",
    "NoiseChannel",
    "NoiseParams",
    "NOISE",
    "EnsembleEstimate",
    "TrajectoryConfig",
]
__version__ = "0.1.0"
