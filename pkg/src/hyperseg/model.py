"""Per-pixel model fitting: linear decay after a transitory phase, plus rise.

Channels ``0 .. T-1`` form the transitory range, on which the rise
``max - min`` is measured; ``y = a x + b`` is fitted by ordinary least
squares on channels ``T .. L-1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, DataError, HyperCube


@dataclass(frozen=True)
class ModelSpec:
    """Channel split for the parametric reduction.

    Parameters
    ----------
    transitory_end : int
        ``T``; channels before it are transitory. ``T = 0`` drops the rise.
    x_values : sequence of float, optional
        Abscissa of each channel; defaults to the channel index.
    """

    transitory_end: int = 10
    x_values: Optional[Sequence[float]] = None

    def check(self, n_channels: int):
        T = self.transitory_end
        if not 0 <= T < n_channels - 1:
            raise ConfigError(f"transitory_end={T} needs 0 <= T < L-1 with L={n_channels}")
        if self.x_values is not None and len(self.x_values) != n_channels:
            raise ConfigError(f"{len(self.x_values)} x_values for {n_channels} channels")

    def abscissa(self, n_channels: int) -> np.ndarray:
        if self.x_values is None:
            return np.arange(n_channels, dtype=np.float64)
        return np.asarray(self.x_values, dtype=np.float64)


def fit_linear(cube: HyperCube, spec: ModelSpec):
    """Least-squares slope and intercept of every pixel over the fit range.

    Returns
    -------
    slope, intercept : ndarray
        Two ``(height, width)`` maps.
    """
    spec.check(cube.channels)
    T = spec.transitory_end
    x = spec.abscissa(cube.channels)[T:]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 0:
        raise DataError("fit range abscissa is degenerate (all x equal)")
    Y = cube.data[:, :, T:]
    ymean = Y.mean(axis=2)
    slope = (Y - ymean[:, :, None]) @ xc / sxx
    intercept = ymean - slope * x.mean()
    return slope, intercept


def rise(cube: HyperCube, spec: ModelSpec) -> np.ndarray:
    """Peak-to-peak amplitude over the transitory channels."""
    T = spec.transitory_end
    if T < 1:
        raise ConfigError("rise needs a non-empty transitory range (T >= 1)")
    block = cube.data[:, :, :T]
    return block.max(axis=2) - block.min(axis=2)


def build_parameters(cube: HyperCube, spec: ModelSpec) -> HyperCube:
    """Parameter cube with channels ``a``, ``b`` and, when ``T >= 1``, ``m``."""
    a, b = fit_linear(cube, spec)
    maps, names = [a, b], ["a", "b"]
    if spec.transitory_end >= 1:
        maps.append(rise(cube, spec))
        names.append("m")
    return HyperCube(np.stack(maps, axis=-1), names)
