"""Marker-controlled watershed segmentation of hyperspectral cubes."""
from .core import (ConfigError, DataError, HyperCube, HypersegError, NumericalError,
                   StructuringElement, assemble, channel, connected_components, cross4, disk,
                   square8)

__version__ = "0.1.0"
