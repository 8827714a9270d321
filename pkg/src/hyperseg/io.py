"""File formats: HYP1 cubes, PNG/PGM channel stacks, label PNGs, metrics JSON.

HYP1 layout (all little-endian)::

    b"HYP1" | uint32 header length n | n bytes UTF-8 JSON header | payload

The header holds ``width``, ``height``, ``channels``, ``dtype`` (``f32`` or
``u16``), ``channel_labels`` and ``byte_order`` (always ``"little"``). The
payload is pixel-major: for each row, for each column, all channel values.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .core import DataError, HyperCube

MAGIC = b"HYP1"
DTYPES = {"f32": np.dtype("<f4"), "u16": np.dtype("<u2")}
IMAGE_SUFFIXES = (".png", ".pgm", ".tif", ".tiff")


def write_hyp1(path, data, dtype: str = "f32", channel_labels=None) -> None:
    """Write a cube, scalar image or label image as HYP1."""
    if isinstance(data, HyperCube):
        channel_labels = channel_labels or data.channel_labels
        arr = data.data
    else:
        arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if dtype not in DTYPES:
        raise DataError(f"unsupported HYP1 dtype {dtype!r}")
    if dtype == "u16":
        if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535 or np.any(arr != np.round(arr)):
            raise DataError("u16 payload needs integers in [0, 65535]")
    h, w, nch = arr.shape
    header = {
        "width": int(w), "height": int(h), "channels": int(nch), "dtype": dtype,
        "channel_labels": list(channel_labels) if channel_labels is not None else None,
        "byte_order": "little",
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(arr, dtype=DTYPES[dtype]).tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(hbytes)))
        fh.write(hbytes)
        fh.write(payload)


def read_hyp1_raw(path):
    """Return ``(header, array)`` with the array in its stored dtype, shape (h, w, L)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise DataError(f"{path}: not a HYP1 file (bad magic)")
    if len(blob) < 8:
        raise DataError(f"{path}: truncated header")
    (n,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + n:
        raise DataError(f"{path}: truncated header ({len(blob) - 8} of {n} bytes)")
    try:
        header = json.loads(blob[8:8 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed header: {exc}") from None
    for key in ("width", "height", "channels", "dtype"):
        if key not in header:
            raise DataError(f"{path}: header lacks {key!r}")
    if header.get("byte_order", "little") != "little":
        raise DataError(f"{path}: only little-endian payloads are supported")
    if header["dtype"] not in DTYPES:
        raise DataError(f"{path}: unsupported dtype {header['dtype']!r}")
    dt = DTYPES[header["dtype"]]
    h, w, nch = int(header["height"]), int(header["width"]), int(header["channels"])
    expected = h * w * nch * dt.itemsize
    actual = len(blob) - 8 - n
    if actual != expected:
        raise DataError(f"{path}: payload has {actual} bytes, expected {expected} "
                        f"({h}x{w}x{nch} {header['dtype']})")
    arr = np.frombuffer(blob, dtype=dt, offset=8 + n).reshape(h, w, nch)
    return header, arr


def read_hyp1(path) -> HyperCube:
    header, arr = read_hyp1_raw(path)
    return HyperCube(arr.astype(np.float64), header.get("channel_labels"))


def read_labels(path) -> np.ndarray:
    """Read a single-channel HYP1 (or grayscale PNG) as an int64 label image."""
    if str(path).lower().endswith(IMAGE_SUFFIXES):
        return np.asarray(Image.open(path), dtype=np.int64)
    _, arr = read_hyp1_raw(path)
    if arr.shape[2] != 1:
        raise DataError(f"{path}: label file must have one channel, has {arr.shape[2]}")
    return arr[:, :, 0].astype(np.int64)


def write_labels(path, labels) -> None:
    write_hyp1(path, np.asarray(labels), dtype="u16")


def read_image_stack(source) -> HyperCube:
    """Load grayscale images as channels; a directory is read in sorted filename order."""
    if isinstance(source, (str, os.PathLike)) and Path(source).is_dir():
        files = sorted(p for p in Path(source).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    else:
        files = sorted(Path(p) for p in source)
    if not files:
        raise DataError(f"no channel images found in {source}")
    planes = []
    for f in files:
        with Image.open(f) as im:
            if im.mode not in ("L", "I;16", "I", "F"):
                im = im.convert("L")
            arr = np.asarray(im, dtype=np.float64)
        if arr.ndim != 2:
            raise DataError(f"{f}: expected a grayscale image")
        planes.append(arr)
    if len({p.shape for p in planes}) != 1:
        raise DataError("channel images differ in size")
    return HyperCube(np.stack(planes, axis=-1), [f.stem for f in files])


def read_cube(path) -> HyperCube:
    """HYP1 file or directory of channel images."""
    p = Path(path)
    if p.is_dir():
        return read_image_stack(p)
    return read_hyp1(p)


def to_uint8(img, scale: float = 1.0) -> np.ndarray:
    """Min-max stretch to 8 bits, then multiply by ``scale`` (display only)."""
    img = np.asarray(img, dtype=np.float64)
    lo, hi = img.min(), img.max()
    norm = np.zeros_like(img) if hi <= lo else (img - lo) / (hi - lo)
    return np.clip(np.round(norm * scale * 255.0), 0, 255).astype(np.uint8)


def write_gray_png(path, img, scale: float = 1.0) -> None:
    Image.fromarray(to_uint8(img, scale)).save(path)


def write_pgm(path, img) -> None:
    """8-bit binary PGM of a min-max stretched image."""
    Image.fromarray(to_uint8(img)).save(path, format="PPM")


def label_palette(n: int) -> np.ndarray:
    """Fixed RGB table: label 0 is black, labels cycle through 20 distinct colors."""
    base = np.array([
        [230, 25, 75], [60, 180, 75], [255, 225, 25], [0, 130, 200], [245, 130, 48],
        [145, 30, 180], [70, 240, 240], [240, 50, 230], [210, 245, 60], [250, 190, 212],
        [0, 128, 128], [220, 190, 255], [170, 110, 40], [255, 250, 200], [128, 0, 0],
        [170, 255, 195], [128, 128, 0], [255, 215, 180], [0, 0, 128], [128, 128, 128],
    ], dtype=np.uint8)
    pal = np.zeros((n + 1, 3), dtype=np.uint8)
    for lab in range(1, n + 1):
        pal[lab] = base[(lab - 1) % len(base)]
    return pal


def label_rgb(labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    return label_palette(int(labels.max(initial=0)))[labels]


def write_label_png(path, labels) -> None:
    Image.fromarray(label_rgb(labels)).save(path)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
