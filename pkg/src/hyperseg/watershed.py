"""Marker-controlled watershed by hierarchical-queue flooding.

Flooding rules (fixed so independent implementations agree exactly):

* the gradient is quantized to ``level = min(floor(g * levels), levels - 1)``;
* initialization scans marker pixels in raster order and enqueues each
  unlabeled, not yet queued neighbor (structuring-element offset order)
  at its own level;
* the queue pops the lowest level first, FIFO within a level;
* a queued pixel carries the label of the pixel that enqueued it and
  receives that label when popped; with lines, a popped pixel that already
  touches a different positive label becomes a watershed line (0) instead
  and does not propagate;
* a labeled pixel enqueues its unlabeled, not yet queued neighbors at
  ``max(their level, its own queue level)``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, DataError, StructuringElement, square8
from .morphology import dilate, erode

QUEUED = -1
LINE = -2


@dataclass(frozen=True)
class FloodSpec:
    levels: int = 256
    connectivity: StructuringElement = field(default_factory=square8)
    emit_lines: bool = False

    def __post_init__(self):
        if self.levels < 2:
            raise ConfigError("levels must be >= 2")


def quantize(gradient, levels: int = 256) -> np.ndarray:
    g = np.asarray(gradient, dtype=np.float64)
    if g.size and (np.nanmin(g) < 0 or np.nanmax(g) > 1 or np.isnan(g).any()):
        raise DataError("gradient must lie in [0, 1]; normalize it first")
    return np.minimum((g * levels).astype(np.int64), levels - 1)


def watershed(gradient, markers, spec: FloodSpec = None) -> np.ndarray:
    """Flood a [0, 1] gradient from labeled markers.

    Parameters
    ----------
    gradient : ndarray, shape (height, width)
    markers : ndarray of int, same shape
        Positive values are seeds, 0 is unlabeled.
    spec : FloodSpec, optional

    Returns
    -------
    ndarray of int64
        Every pixel carries a marker label, or 0 on watershed lines when
        ``spec.emit_lines`` is set.
    """
    spec = spec or FloodSpec()
    markers = np.asarray(markers)
    if markers.shape != np.shape(gradient):
        raise DataError(f"markers {markers.shape} and gradient {np.shape(gradient)} differ in shape")
    if markers.min(initial=0) < 0:
        raise DataError("marker labels must be nonnegative")
    if not (markers > 0).any():
        raise DataError("watershed needs at least one marker")
    level = quantize(gradient, spec.levels)
    h, w = level.shape
    nbrs = spec.connectivity.neighbors
    lines = spec.emit_lines

    lab = markers.astype(np.int64).ravel().copy()
    lev = level.ravel().tolist()
    # label carried by a queued pixel: that of the pixel which enqueued it
    carried = {}
    heap = []
    counter = 0

    def push(q, prio, label):
        nonlocal counter
        lab[q] = QUEUED
        carried[q] = label
        heapq.heappush(heap, (prio, counter, q))
        counter += 1

    def neighbors(p):
        y, x = divmod(p, w)
        for dy, dx in nbrs:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w:
                yield ny * w + nx

    for p in np.flatnonzero(lab > 0).tolist():
        for q in neighbors(p):
            if lab[q] == 0:
                push(q, lev[q], int(lab[p]))

    while heap:
        prio, _, p = heapq.heappop(heap)
        label = carried.pop(p)
        if lines and any(lab[q] > 0 and lab[q] != label for q in neighbors(p)):
            lab[p] = LINE
            continue
        lab[p] = label
        for q in neighbors(p):
            if lab[q] == 0:
                push(q, max(lev[q], prio), label)

    lab[lab < 0] = 0
    return lab.reshape(h, w)


def boundaries(labels, se: StructuringElement = None) -> np.ndarray:
    """Pixels with a differently labeled in-bounds neighbor (or label 0)."""
    se = se or square8()
    lab = np.asarray(labels, dtype=np.float64)
    return (dilate(lab, se) != erode(lab, se)) | (lab == 0)
