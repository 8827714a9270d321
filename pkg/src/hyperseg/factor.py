"""Correspondence analysis of nonnegative cubes and PCA of parameter maps.

Correspondence analysis (FCA) treats the cube as a ``P x L`` contingency
table. With ``Q = X / N``, row masses ``r`` and column masses ``c``, the
standardized residual ``S = D_r^-1/2 (Q - r c^T) D_c^-1/2`` is decomposed by
SVD. Eigenvalues are the squared singular values; pixel factors are row
principal coordinates, whose Euclidean distances over all axes equal the
chi-squared distances between pixel spectra.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DataError, HyperCube, NumericalError

EIGEN_FLOOR = 1e-12


def _fix_signs(axes):
    """Flip each column so its first maximal-magnitude entry is positive."""
    axes = axes.copy()
    for k in range(axes.shape[1]):
        mag = np.abs(axes[:, k])
        i = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
        if axes[i, k] < 0:
            axes[:, k] *= -1
    return axes


def _as_matrix(data):
    if isinstance(data, HyperCube):
        return data.pixels(), data.shape[:2]
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 3:
        return arr.reshape(-1, arr.shape[2]), arr.shape[:2]
    if arr.ndim == 2:
        return arr, None
    raise DataError(f"expected a cube or a (P, L) matrix, got shape {arr.shape}")


def _wrap(values, grid, labels=None):
    if grid is None:
        return values
    return HyperCube(values.reshape(grid[0], grid[1], -1), labels)


@dataclass(frozen=True, eq=False)
class FcaModel:
    """Fitted correspondence analysis.

    Attributes
    ----------
    row_masses : ndarray, shape (P,)
    col_masses : ndarray, shape (L,)
    grand_total : float
    col_axes : ndarray, shape (L, n_axes)
        Right singular vectors (unit norm), one column per axis.
    eigenvalues : ndarray, shape (n_axes,)
        Inertia of each axis, descending.
    n_components : int
        Number of axes ``K`` retained for projection.
    """

    row_masses: np.ndarray
    col_masses: np.ndarray
    grand_total: float
    col_axes: np.ndarray
    eigenvalues: np.ndarray
    n_components: int

    @property
    def singular_values(self):
        return np.sqrt(self.eigenvalues)

    @property
    def total_inertia(self) -> float:
        return float(self.eigenvalues.sum())

    @property
    def inertia_ratios(self):
        tot = self.total_inertia
        return self.eigenvalues / tot if tot > 0 else np.zeros_like(self.eigenvalues)

    @property
    def col_coordinates(self):
        """Column principal coordinates ``gamma``, shape (L, n_axes)."""
        return self.col_axes / np.sqrt(self.col_masses)[:, None] * self.singular_values

    def _usable(self, k):
        if k == 0:
            return np.zeros(0, dtype=bool)
        return self.eigenvalues[:k] > EIGEN_FLOOR * self.eigenvalues[0]

    def to_dict(self) -> dict:
        return {
            "kind": "fca",
            "grand_total": self.grand_total,
            "row_masses": self.row_masses.tolist(),
            "col_masses": self.col_masses.tolist(),
            "col_axes": self.col_axes.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "n_components": self.n_components,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FcaModel":
        if d.get("kind") != "fca":
            raise DataError("not an FCA model document")
        n_ch = len(d["col_masses"])
        return cls(np.asarray(d["row_masses"], float), np.asarray(d["col_masses"], float),
                   float(d["grand_total"]),
                   np.asarray(d["col_axes"], float).reshape(n_ch, -1),
                   np.asarray(d["eigenvalues"], float), int(d["n_components"]))


def fca_fit(cube, n_components: Optional[int] = None) -> FcaModel:
    """Fit a correspondence analysis to a nonnegative cube.

    Parameters
    ----------
    cube : HyperCube or array_like
        Nonnegative data; no pixel and no channel may sum to zero.
    n_components : int, optional
        Retained axis count ``K``; defaults to all ``min(P, L) - 1`` axes.
    """
    X, _ = _as_matrix(cube)
    P, L = X.shape
    if not np.all(np.isfinite(X)):
        raise DataError("FCA input contains non-finite values")
    if X.min() < 0:
        raise DataError("FCA input must be nonnegative")
    total = X.sum()
    if total <= 0:
        raise DataError("FCA input sums to zero")
    max_axes = min(P, L) - 1
    if n_components is None:
        n_components = max_axes
    if not 0 <= n_components <= max_axes:
        raise DataError(f"K={n_components} outside [0, {max_axes}]")
    rsum = X.sum(axis=1)
    csum = X.sum(axis=0)
    if np.any(rsum <= 0):
        raise DataError(f"pixel {int(np.argmax(rsum <= 0))} has an all-zero spectrum")
    if np.any(csum <= 0):
        raise DataError(f"channel {int(np.argmax(csum <= 0))} is all zero")

    Q = X / total
    r = Q.sum(axis=1)
    c = Q.sum(axis=0)
    sr, sc = np.sqrt(r), np.sqrt(c)
    S = (Q - np.outer(r, c)) / np.outer(sr, sc)
    _, sv, vt = np.linalg.svd(S, full_matrices=False)
    sv = sv[:max_axes]
    axes = _fix_signs(vt[:max_axes].T)
    eig = sv ** 2
    # rounding noise on null axes is clamped to an exact zero
    eig[eig < EIGEN_FLOOR * eig.max(initial=0.0)] = 0.0
    return FcaModel(r, c, float(total), axes, eig, int(n_components))


def fca_project(model: FcaModel, cube, n_components: Optional[int] = None):
    """Pixel factors (row principal coordinates) on the first ``K`` axes.

    Any cube with matching channel count can be projected; its pixels are
    treated as supplementary rows through their spectral profiles.
    """
    X, grid = _as_matrix(cube)
    k = model.n_components if n_components is None else n_components
    if X.shape[1] != model.col_masses.size:
        raise DataError(f"cube has {X.shape[1]} channels, model expects {model.col_masses.size}")
    rsum = X.sum(axis=1)
    if np.any(rsum == 0):
        raise DataError(f"pixel {int(np.argmax(rsum == 0))} has a zero spectrum sum")
    profiles = X / rsum[:, None]
    std_coords = model.col_axes[:, :k] / np.sqrt(model.col_masses)[:, None]
    factors = profiles @ std_coords
    factors[:, ~model._usable(k)] = 0.0
    if k == 0 or grid is None:
        return factors
    return _wrap(factors, grid, [f"fca{i + 1}" for i in range(k)])


def fca_reconstruct(model: FcaModel, factors, grand_total: Optional[float] = None,
                    row_masses=None):
    """Rebuild spectra from pixel factors.

    ``f(x, j) = N r_x c_j (1 + sum_k phi_k(x) gamma_k(j) / sqrt(mu_k))``.
    Row masses default to those of the fitted table; axes whose eigenvalue
    falls below the numerical floor are skipped.
    """
    F, grid = _as_matrix(factors)
    k = F.shape[1]
    if k > model.eigenvalues.size:
        raise DataError(f"{k} factor channels but model has {model.eigenvalues.size} axes")
    N = model.grand_total if grand_total is None else grand_total
    r = model.row_masses if row_masses is None else np.asarray(row_masses, float)
    if r.size != F.shape[0]:
        raise DataError(f"{F.shape[0]} pixels but {r.size} row masses")
    use = model._usable(k)
    # gamma / sqrt(mu) is the column standard coordinate
    std_cols = model.col_axes[:, :k][:, use] / np.sqrt(model.col_masses)[:, None]
    est = N * np.outer(r, model.col_masses) * (1.0 + F[:, use] @ std_cols.T)
    return _wrap(est, grid)


def fca_filter(cube: HyperCube, n_components: int):
    """Fit, project and reconstruct with ``K`` axes; returns ``(model, factors, filtered)``."""
    model = fca_fit(cube, n_components)
    factors = fca_project(model, cube)
    filtered = fca_reconstruct(model, factors)
    if isinstance(cube, HyperCube):
        values = filtered.data if isinstance(filtered, HyperCube) else filtered
        filtered = cube.with_data(np.reshape(values, cube.shape))
    return model, factors, filtered


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Principal axes of pixel vectors.

    ``components`` holds one orthonormal axis per column, shape ``(M, n)``.
    """

    means: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    whiten: bool = False

    @property
    def inertia_ratios(self):
        return self.eigenvalues / self.eigenvalues.sum()

    def to_dict(self) -> dict:
        return {"kind": "pca", "means": self.means.tolist(),
                "components": self.components.tolist(),
                "eigenvalues": self.eigenvalues.tolist(), "whiten": self.whiten}

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        if d.get("kind") != "pca":
            raise DataError("not a PCA model document")
        m = len(d["means"])
        return cls(np.asarray(d["means"], float),
                   np.asarray(d["components"], float).reshape(m, -1),
                   np.asarray(d["eigenvalues"], float), bool(d["whiten"]))


def pca_fit(maps, whiten: bool = False) -> PcaModel:
    """Eigendecomposition of the sample covariance (``ddof=1``) of pixel vectors."""
    X, _ = _as_matrix(maps)
    P, M = X.shape
    if M < 1 or P <= M:
        raise DataError(f"PCA needs P > M >= 1, got P={P}, M={M}")
    means = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    eig, vec = np.linalg.eigh(cov)
    order = np.argsort(eig)[::-1]
    eig = np.clip(eig[order], 0.0, None)
    vec = _fix_signs(vec[:, order])
    if eig[0] <= 0:
        raise NumericalError("PCA input has zero variance")
    return PcaModel(means, vec, eig, whiten)


def pca_project(model: PcaModel, maps, whiten: Optional[bool] = None,
                n_components: Optional[int] = None):
    """Centered coordinates on the principal axes, optionally divided by ``sqrt(eigenvalue)``."""
    X, grid = _as_matrix(maps)
    whiten = model.whiten if whiten is None else whiten
    k = model.components.shape[1] if n_components is None else n_components
    Z = (X - model.means) @ model.components[:, :k]
    if whiten:
        ev = model.eigenvalues[:k]
        if np.any(ev <= EIGEN_FLOOR * model.eigenvalues[0]):
            raise NumericalError("cannot whiten an axis with (near) zero variance")
        Z = Z / np.sqrt(ev)
    return _wrap(Z, grid, [f"pca{i + 1}" for i in range(k)])


def pca_unproject(model: PcaModel, scores, whiten: Optional[bool] = None):
    """Inverse of :func:`pca_project` (exact when no axis was dropped)."""
    Z, grid = _as_matrix(scores)
    whiten = model.whiten if whiten is None else whiten
    k = Z.shape[1]
    if whiten:
        Z = Z * np.sqrt(model.eigenvalues[:k])
    return _wrap(Z @ model.components[:, :k].T + model.means, grid)


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh)


def load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    if d.get("kind") == "fca":
        return FcaModel.from_dict(d)
    if d.get("kind") == "pca":
        return PcaModel.from_dict(d)
    raise DataError(f"{path}: unknown model kind {d.get('kind')!r}")
