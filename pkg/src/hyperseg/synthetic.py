"""Synthetic temporal cubes with known regions, for tests and demos.

Each material has a spectrum that rises by ``rise`` over the transitory
channels ``0 .. T-1`` and then follows ``slope * j + intercept``. Regions
are painted in order; a region may sit entirely inside an earlier one
(glue on a lid) but partial overlaps are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core import ConfigError, HyperCube


@dataclass(frozen=True)
class Material:
    slope: float = -0.5
    intercept: float = 100.0
    rise: float = 10.0

    def spectrum(self, n_channels: int, transitory_end: int) -> np.ndarray:
        j = np.arange(n_channels, dtype=np.float64)
        out = self.slope * j + self.intercept
        T = transitory_end
        if T >= 2:
            # quarter-sine climb from (join - rise) up to the linear part's value at T
            join = self.slope * T + self.intercept
            profile = np.sin(0.5 * np.pi * j[:T] / (T - 1))
            out[:T] = join - self.rise + self.rise * profile
        elif T == 1:
            out[0] = self.slope + self.intercept
        return out


@dataclass(frozen=True)
class Region:
    """A shape filled with one material.

    ``shape`` is ``"disk"`` (``center``, ``radius``), ``"ellipse"``
    (``center``, ``radii`` as (ry, rx)) or ``"rect"`` (``top_left``,
    ``size`` as (h, w)). ``label`` is the ground-truth class; several
    regions may share one.
    """

    shape: str
    material: Material
    label: int
    center: Optional[Sequence[float]] = None
    radius: Optional[float] = None
    radii: Optional[Sequence[float]] = None
    top_left: Optional[Sequence[int]] = None
    size: Optional[Sequence[int]] = None

    def mask(self, height: int, width: int) -> np.ndarray:
        yy, xx = np.mgrid[0:height, 0:width]
        if self.shape == "disk":
            cy, cx = self.center
            return (yy - cy) ** 2 + (xx - cx) ** 2 <= self.radius ** 2
        if self.shape == "ellipse":
            cy, cx = self.center
            ry, rx = self.radii
            return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        if self.shape == "rect":
            y0, x0 = self.top_left
            h, w = self.size
            return (yy >= y0) & (yy < y0 + h) & (xx >= x0) & (xx < x0 + w)
        raise ConfigError(f"unknown region shape {self.shape!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    height: int = 64
    width: int = 64
    channels: int = 30
    transitory_end: int = 10
    background: Material = field(default_factory=lambda: Material(-0.2, 40.0, 2.0))
    background_label: int = 0
    regions: Sequence[Region] = ()
    noise: float = 0.0
    seed: int = 0


@dataclass
class SyntheticScene:
    cube: HyperCube
    truth: np.ndarray
    clean: HyperCube
    parameters: HyperCube
    material_map: np.ndarray


def _paint(spec: SyntheticSpec):
    h, w = spec.height, spec.width
    owner = np.full((h, w), -1, dtype=np.int64)
    for i, region in enumerate(spec.regions):
        m = region.mask(h, w)
        if not m.any():
            raise ConfigError(f"region {i} lies outside the image")
        under = np.unique(owner[m])
        if under.size > 1:
            raise ConfigError(f"region {i} partially overlaps earlier regions")
        owner[m] = i
    return owner


def generate_synthetic(spec: SyntheticSpec) -> SyntheticScene:
    """Render a scene; deterministic for a given ``spec.seed``."""
    if spec.height < 1 or spec.width < 1 or spec.channels < 2:
        raise ConfigError("synthetic cube needs a non-empty grid and >= 2 channels")
    if not 0 <= spec.transitory_end < spec.channels - 1:
        raise ConfigError("transitory_end must satisfy 0 <= T < channels - 1")
    owner = _paint(spec)
    materials: List[Material] = [spec.background] + [r.material for r in spec.regions]
    labels = np.array([spec.background_label] + [r.label for r in spec.regions], dtype=np.int64)
    spectra = np.stack([m.spectrum(spec.channels, spec.transitory_end) for m in materials])
    idx = owner + 1
    clean = spectra[idx]
    rng = np.random.default_rng(spec.seed)
    noisy = clean + rng.normal(0.0, spec.noise, clean.shape) if spec.noise > 0 else clean.copy()

    T = spec.transitory_end
    params = [np.array([m.slope for m in materials]), np.array([m.intercept for m in materials])]
    names = ["a", "b"]
    if T >= 1:
        params.append(np.ptp(spectra[:, :T], axis=1))
        names.append("m")
    pmaps = np.stack([p[idx] for p in params], axis=-1)
    ch_labels = [f"t{j}" for j in range(spec.channels)]
    return SyntheticScene(HyperCube(noisy, ch_labels), labels[idx], HyperCube(clean, ch_labels),
                          HyperCube(pmaps, names), idx)


def lid_scene(size: int = 128, channels: int = 30, transitory_end: int = 10,
              noise_fraction: float = 0.05, seed: int = 0) -> SyntheticSpec:
    """A lid (disk) on a darker frame with three glue blobs on the lid.

    Noise sigma is ``noise_fraction`` times the smallest mean absolute
    spectral difference between two materials.
    """
    s = size / 128.0
    frame = Material(-0.2, 40.0, 2.0)
    lid = Material(-0.5, 100.0, 20.0)
    glue = Material(-0.5, 112.0, 40.0)
    c = size / 2.0
    regions = [
        Region("disk", lid, 0, center=(c, c), radius=52 * s),
        Region("disk", glue, 1, center=(c - 22 * s, c - 14 * s), radius=10 * s),
        Region("ellipse", glue, 2, center=(c + 18 * s, c - 18 * s), radii=(8 * s, 13 * s)),
        Region("disk", glue, 3, center=(c + 6 * s, c + 24 * s), radius=9 * s),
    ]
    mats = [frame, lid, glue]
    spectra = [m.spectrum(channels, transitory_end) for m in mats]
    contrast = min(np.mean(np.abs(a - b)) for i, a in enumerate(spectra) for b in spectra[i + 1:])
    return SyntheticSpec(size, size, channels, transitory_end, frame, 0, tuple(regions),
                         noise_fraction * contrast, seed)


def two_blob_scene(size: int = 48, channels: int = 16, transitory_end: int = 4,
                   noise: float = 0.0, seed: int = 0) -> SyntheticSpec:
    """Two disks of distinct materials on a uniform background (truth 1, 2; background 0)."""
    a = Material(-0.3, 60.0, 8.0)
    b = Material(-0.6, 90.0, 25.0)
    regions = (
        Region("disk", a, 1, center=(size * 0.3, size * 0.3), radius=size * 0.18),
        Region("disk", b, 2, center=(size * 0.68, size * 0.65), radius=size * 0.2),
    )
    return SyntheticSpec(size, size, channels, transitory_end, Material(-0.1, 30.0, 2.0), 0,
                         regions, noise, seed)


def _material_from_dict(d):
    return Material(float(d.get("slope", -0.5)), float(d.get("intercept", 100.0)),
                    float(d.get("rise", 10.0)))


def spec_from_dict(d: dict) -> SyntheticSpec:
    """Build a spec from JSON; ``{"preset": "lid", ...}`` uses :func:`lid_scene`."""
    d = dict(d)
    preset = d.pop("preset", None)
    if preset == "lid":
        return lid_scene(**d)
    if preset == "two_blob":
        return two_blob_scene(**d)
    if preset is not None:
        raise ConfigError(f"unknown synthetic preset {preset!r}")
    regions = []
    for i, r in enumerate(d.get("regions", [])):
        r = dict(r)
        regions.append(Region(r.pop("shape"), _material_from_dict(r.pop("material", {})),
                              int(r.pop("label", i + 1)), **r))
    return SyntheticSpec(
        int(d.get("height", d.get("size", 64))), int(d.get("width", d.get("size", 64))),
        int(d.get("channels", 30)), int(d.get("transitory_end", 10)),
        _material_from_dict(d.get("background", {"slope": -0.2, "intercept": 40.0, "rise": 2.0})),
        int(d.get("background_label", 0)), tuple(regions), float(d.get("noise", 0.0)),
        int(d.get("seed", 0)))
