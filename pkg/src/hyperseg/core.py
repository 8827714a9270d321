"""Raster containers, structuring elements and connected-component labeling.

A hyperspectral cube is stored pixel-major: ``data[y, x, j]`` with all
``L`` values of a pixel contiguous in memory. Scalar images (one channel,
a gradient, a parameter map) and label images are plain 2-D numpy arrays
of shape ``(height, width)``; label images use ``0`` for unassigned pixels.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class HypersegError(Exception):
    """Base class for errors raised by this package."""


class DataError(HypersegError, ValueError):
    """Input data violates a precondition (shape, sign, bounds, format)."""


class ConfigError(HypersegError, ValueError):
    """Invalid configuration or parameter combination."""


class NumericalError(HypersegError, ArithmeticError):
    """A numerical procedure failed (singular matrix, non-convergence)."""


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HyperCube:
    """Multivariate image with ``L`` channels on a ``height x width`` grid.

    Parameters
    ----------
    data : array_like
        Array of shape ``(height, width, L)``. Copied to float64 and made
        read-only.
    channel_labels : sequence of str, optional
        One label per channel (wavelength, time index, parameter name).
    """

    data: np.ndarray
    channel_labels: Optional[tuple] = field(default=None)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3:
            raise DataError(f"cube data must be 3-D (height, width, L), got shape {data.shape}")
        h, w, nch = data.shape
        if h * w == 0 or nch == 0:
            raise DataError(f"cube must have P > 0 pixels and L >= 1 channels, got shape {data.shape}")
        object.__setattr__(self, "data", _frozen(data))
        labels = self.channel_labels
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != nch:
                raise DataError(f"{len(labels)} channel labels for {nch} channels")
        object.__setattr__(self, "channel_labels", labels)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    def pixels(self) -> np.ndarray:
        """Return the ``(P, L)`` pixel-vector matrix in raster order."""
        return self.data.reshape(-1, self.channels)

    @classmethod
    def from_pixels(cls, pixels, height, width, channel_labels=None) -> "HyperCube":
        pixels = np.asarray(pixels, dtype=np.float64)
        return cls(pixels.reshape(height, width, -1), channel_labels)

    def with_data(self, data, channel_labels=None) -> "HyperCube":
        """New cube on the same grid, keeping labels when the channel count matches."""
        data = np.asarray(data)
        if channel_labels is None and self.channel_labels is not None:
            if data.ndim == 3 and data.shape[2] == self.channels:
                channel_labels = self.channel_labels
        return HyperCube(data, channel_labels)


def channel(cube: HyperCube, j: int) -> np.ndarray:
    """Extract channel ``j`` as a scalar image (a copy)."""
    if not 0 <= j < cube.channels:
        raise IndexError(f"channel index {j} out of range [0, {cube.channels})")
    return cube.data[:, :, j].copy()


def assemble(images: Sequence[np.ndarray], channel_labels=None) -> HyperCube:
    """Stack scalar images of equal shape into a cube (inverse of :func:`channel`)."""
    if len(images) == 0:
        raise DataError("cannot assemble a cube from zero channels")
    shapes = {np.shape(im) for im in images}
    if len(shapes) != 1:
        raise DataError(f"channel shapes differ: {sorted(shapes)}")
    return HyperCube(np.stack([np.asarray(im, dtype=np.float64) for im in images], axis=-1),
                     channel_labels)


@dataclass(frozen=True)
class StructuringElement:
    """Flat neighborhood given as ``(dy, dx)`` offsets, origin included.

    Offsets must be symmetric under negation so that erosion and dilation
    form an adjunction; the order of ``offsets`` is significant for flooding
    tie-breaks and is kept as given.
    """

    offsets: tuple
    name: str = "custom"

    def __post_init__(self):
        offs = tuple((int(dy), int(dx)) for dy, dx in self.offsets)
        if len(offs) == 0:
            raise ConfigError("structuring element is empty")
        if len(set(offs)) != len(offs):
            raise ConfigError("structuring element has duplicate offsets")
        s = set(offs)
        if (0, 0) not in s:
            raise ConfigError("structuring element must contain the origin")
        if any((-dy, -dx) not in s for dy, dx in offs):
            raise ConfigError("structuring element must be symmetric")
        object.__setattr__(self, "offsets", offs)

    @property
    def neighbors(self) -> tuple:
        """Offsets without the origin, in declaration order."""
        return tuple(o for o in self.offsets if o != (0, 0))

    @property
    def radius(self) -> int:
        return max(max(abs(dy), abs(dx)) for dy, dx in self.offsets)

    def __len__(self):
        return len(self.offsets)


def cross4() -> StructuringElement:
    """Unit cross (4-connectivity)."""
    return StructuringElement(((0, 0), (-1, 0), (0, -1), (0, 1), (1, 0)), "cross4")


def square8() -> StructuringElement:
    """Unit 3x3 square (8-connectivity)."""
    offs = [(0, 0)] + [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    return StructuringElement(tuple(offs), "square8")


def disk(r: int) -> StructuringElement:
    """Discrete disk ``dy**2 + dx**2 <= r**2``; used in place of hexagons.

    ``disk(0)`` is the origin alone and ``disk(1)`` equals the cross.
    """
    r = int(r)
    if r < 0:
        raise ConfigError(f"disk radius must be >= 0, got {r}")
    offs = [(0, 0)]
    offs += [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)
             if (dy, dx) != (0, 0) and dy * dy + dx * dx <= r * r]
    return StructuringElement(tuple(offs), f"disk({r})")


def se_from_name(name: str) -> StructuringElement:
    """Parse ``cross4``, ``square8`` or ``disk(r)``."""
    name = name.strip()
    if name == "cross4":
        return cross4()
    if name == "square8":
        return square8()
    if name.startswith("disk(") and name.endswith(")"):
        try:
            return disk(int(name[5:-1]))
        except ValueError:
            pass
    raise ConfigError(f"unknown structuring element {name!r}")


def connected_components(mask, se: StructuringElement) -> np.ndarray:
    """Label the connected components of a binary mask.

    Two 1-pixels are connected when one lies at an ``se`` offset of the other.
    Components are numbered ``1..n`` in order of their first pixel in raster
    scan; background stays 0.
    """
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DataError(f"mask must be 2-D, got shape {mask.shape}")
    fg = mask != 0
    h, w = fg.shape
    labels = np.zeros((h, w), dtype=np.int64)
    nbrs = se.neighbors
    n = 0
    for y, x in zip(*np.nonzero(fg)):
        if labels[y, x]:
            continue
        n += 1
        labels[y, x] = n
        queue = deque([(y, x)])
        while queue:
            cy, cx = queue.popleft()
            for dy, dx in nbrs:
                ny, nx = cy + dy, cx + dx
                if 0 <= ny < h and 0 <= nx < w and fg[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = n
                    queue.append((ny, nx))
    return labels


def relabel_sequential(labels) -> np.ndarray:
    """Map the positive labels present to ``1..n`` preserving their order."""
    labels = np.asarray(labels)
    present = np.unique(labels[labels > 0])
    lut = np.zeros(int(labels.max(initial=0)) + 1, dtype=np.int64)
    lut[present] = np.arange(1, present.size + 1)
    return lut[labels]
