"""Flat grayscale morphology on 2-D images.

Neighborhoods are restricted to in-bounds pixels, so no padding value ever
enters a min/max; the gaussian prefilter reflects at the border.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .core import ConfigError, DataError, HyperCube, NumericalError, StructuringElement, cross4


def _shifted(img, dy, dx, fill):
    """``out[y, x] = img[y + dy, x + dx]`` where in bounds, else ``fill``."""
    h, w = img.shape
    out = np.full_like(img, fill)
    ys_dst = slice(max(0, -dy), min(h, h - dy))
    xs_dst = slice(max(0, -dx), min(w, w - dx))
    ys_src = slice(max(0, dy), min(h, h + dy))
    xs_src = slice(max(0, dx), min(w, w + dx))
    out[ys_dst, xs_dst] = img[ys_src, xs_src]
    return out


def _rank_filter(img, se, reduce, fill):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DataError(f"expected a 2-D image, got shape {img.shape}")
    if len(se) == 0:
        raise ConfigError("empty structuring element")
    out = img.copy() if (0, 0) in se.offsets else np.full_like(img, fill)
    for dy, dx in se.neighbors:
        reduce(out, _shifted(img, dy, dx, fill), out=out)
    return out


def erode(img, se: StructuringElement) -> np.ndarray:
    """Minimum of ``img`` over the in-bounds part of ``x + se``."""
    return _rank_filter(img, se, np.minimum, np.inf)


def dilate(img, se: StructuringElement) -> np.ndarray:
    """Maximum of ``img`` over the in-bounds part of ``x + se``."""
    return _rank_filter(img, se, np.maximum, -np.inf)


def morph_gradient(img, se: StructuringElement) -> np.ndarray:
    """Dilation minus erosion; nonnegative everywhere."""
    return dilate(img, se) - erode(img, se)


def opening(img, se: StructuringElement) -> np.ndarray:
    return dilate(erode(img, se), se)


def closing(img, se: StructuringElement) -> np.ndarray:
    return erode(dilate(img, se), se)


def gaussian_kernel(size: int) -> np.ndarray:
    """Sampled 1-D gaussian of odd ``size`` with ``sigma = (size - 1) / 6``, summing to 1."""
    if int(size) != size or size < 3 or size % 2 == 0:
        raise ConfigError(f"gaussian size must be an odd integer >= 3, got {size}")
    size = int(size)
    sigma = (size - 1) / 6.0
    t = np.arange(size, dtype=np.float64) - (size - 1) / 2
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def gaussian_filter(img, size: int) -> np.ndarray:
    """Separable gaussian smoothing with reflect-at-border."""
    k = gaussian_kernel(size)
    img = np.asarray(img, dtype=np.float64)
    out = ndimage.convolve1d(img, k, axis=0, mode="reflect")
    return ndimage.convolve1d(out, k, axis=1, mode="reflect")


def leveling(reference, marker, se: Optional[StructuringElement] = None,
             max_iters: Optional[int] = None, tolerance: float = 1e-9) -> np.ndarray:
    """Leveling of ``reference`` driven by ``marker``.

    Iterates ``g <- (reference ^ dilate(g)) v erode(g)`` from ``g = marker``
    until the largest change is at most ``tolerance``. The fixpoint flattens
    the reference where the marker disagrees with it while keeping every
    remaining transition.

    Raises
    ------
    NumericalError
        If the iteration has not settled after ``max_iters`` sweeps
        (default ``height + width``).
    """
    ref = np.asarray(reference, dtype=np.float64)
    g = np.array(marker, dtype=np.float64)
    if ref.shape != g.shape:
        raise DataError(f"reference {ref.shape} and marker {g.shape} differ in shape")
    se = se or cross4()
    if max_iters is None:
        max_iters = ref.shape[0] + ref.shape[1]
    if max_iters < 1 or tolerance < 0:
        raise ConfigError("leveling needs max_iters >= 1 and tolerance >= 0")
    residual = np.inf
    for _ in range(max_iters):
        new = np.maximum(np.minimum(ref, dilate(g, se)), erode(g, se))
        residual = float(np.max(np.abs(new - g)))
        g = new
        if residual <= tolerance:
            return g
    raise NumericalError(f"leveling did not converge in {max_iters} iterations "
                         f"(residual {residual:.3g})")


@dataclass(frozen=True)
class LevelingSpec:
    """Gaussian-marker leveling applied channel by channel."""

    gaussian_size: int = 11
    se: StructuringElement = field(default_factory=cross4)
    max_iters: Optional[int] = None
    tolerance: float = 1e-9

    def __post_init__(self):
        gaussian_kernel(self.gaussian_size)
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.tolerance < 0:
            raise ConfigError("tolerance must be >= 0")


def level_channel(img, spec: LevelingSpec) -> np.ndarray:
    return leveling(img, gaussian_filter(img, spec.gaussian_size), spec.se,
                    spec.max_iters, spec.tolerance)


def level_cube(cube: HyperCube, spec: Optional[LevelingSpec] = None) -> HyperCube:
    """Level every channel against its own gaussian-smoothed version."""
    spec = spec or LevelingSpec()
    out = np.empty_like(cube.data)
    for j in range(cube.channels):
        out[:, :, j] = level_channel(cube.data[:, :, j], spec)
    return cube.with_data(out)
