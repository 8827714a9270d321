"""Pixel-vector distances and multivariate gradients normalized to [0, 1].

Every distance kind can *embed* pixel vectors into a space where it becomes
the plain Euclidean distance (identity, Mahalanobis whitening, chi-squared
profile scaling); bulk computations go through that embedding while
:func:`distance` evaluates the textbook formula directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, DataError, HyperCube, NumericalError, StructuringElement, cross4
from .morphology import _shifted, morph_gradient


@dataclass(frozen=True, eq=False)
class Euclidean:
    name = "euclidean"

    def fitted(self, X):
        return self

    def embed(self, X):
        return np.asarray(X, dtype=np.float64)

    def __call__(self, u, v):
        d = np.asarray(u, float) - np.asarray(v, float)
        return float(np.sqrt(d @ d))


@dataclass(frozen=True, eq=False)
class Mahalanobis:
    """Mahalanobis distance from a full covariance or per-channel variances.

    With neither given, :meth:`fitted` estimates them (``ddof=1``) from the
    data; ``diagonal=True`` keeps only the variances, i.e. channels are
    assumed uncorrelated.
    """

    covariance: Optional[np.ndarray] = None
    variances: Optional[np.ndarray] = None
    diagonal: bool = False
    name = "mahalanobis"

    def __post_init__(self):
        if self.covariance is not None:
            cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
            if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
                raise DataError("covariance must be a symmetric square matrix")
            object.__setattr__(self, "covariance", cov)
        if self.variances is not None:
            var = np.atleast_1d(np.asarray(self.variances, dtype=np.float64))
            if np.any(var <= 0):
                raise NumericalError("Mahalanobis variances must be strictly positive")
            object.__setattr__(self, "variances", var)

    def fitted(self, X):
        if self.covariance is not None or self.variances is not None:
            return self
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise DataError("need at least two pixels to estimate a covariance")
        if self.diagonal:
            return replace(self, variances=X.var(axis=0, ddof=1))
        return replace(self, covariance=np.atleast_2d(np.cov(X, rowvar=False)))

    def _require(self):
        if self.covariance is None and self.variances is None:
            raise ConfigError("Mahalanobis distance has no covariance; call fitted() first")

    def embed(self, X):
        self._require()
        X = np.asarray(X, dtype=np.float64)
        if self.variances is not None:
            return X / np.sqrt(self.variances)
        try:
            chol = np.linalg.cholesky(np.linalg.inv(self.covariance))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"covariance is singular or not positive definite: {exc}") from None
        return X @ chol

    def __call__(self, u, v):
        self._require()
        d = np.asarray(u, float) - np.asarray(v, float)
        if self.variances is not None:
            if d.size != self.variances.size:
                raise DataError("dimension mismatch")
            return float(np.sqrt(np.sum((d / np.sqrt(self.variances)) ** 2)))
        if d.size != self.covariance.shape[0]:
            raise DataError("dimension mismatch")
        try:
            q = d @ np.linalg.solve(self.covariance, d)
        except np.linalg.LinAlgError:
            raise NumericalError("covariance matrix is singular") from None
        return float(np.sqrt(max(q, 0.0)))


@dataclass(frozen=True, eq=False)
class ChiSquared:
    """Chi-squared distance between spectral profiles.

    ``col_sums`` are the channel totals and ``grand_total`` the sum of the
    whole table the spectra come from.
    """

    col_sums: Optional[np.ndarray] = None
    grand_total: Optional[float] = None
    name = "chi_squared"

    def fitted(self, X):
        if self.col_sums is not None:
            return self
        X = np.asarray(X, dtype=np.float64)
        cs = X.sum(axis=0)
        if np.any(cs <= 0):
            raise DataError("chi-squared distance needs positive channel sums")
        return ChiSquared(cs, float(cs.sum()))

    def _weights(self):
        if self.col_sums is None:
            raise ConfigError("chi-squared distance has no channel sums; call fitted() first")
        return self.grand_total / np.asarray(self.col_sums, dtype=np.float64)

    def embed(self, X):
        X = np.asarray(X, dtype=np.float64)
        rs = X.sum(axis=-1, keepdims=True)
        if np.any(rs == 0):
            raise DataError("chi-squared distance undefined for a zero row sum")
        return X / rs * np.sqrt(self._weights())

    def __call__(self, u, v):
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        if u.shape != v.shape:
            raise DataError("dimension mismatch")
        if u.sum() == 0 or v.sum() == 0:
            raise DataError("chi-squared distance undefined for a zero row sum")
        d = u / u.sum() - v / v.sum()
        return float(np.sqrt(np.sum(self._weights() * d * d)))


def distance(u, v, kind=None) -> float:
    """Distance between two pixel vectors; Euclidean by default."""
    kind = kind or Euclidean()
    if np.shape(u) != np.shape(v):
        raise DataError(f"dimension mismatch: {np.shape(u)} vs {np.shape(v)}")
    return kind(u, v)


def distance_from_name(name: str, **kw):
    name = name.lower()
    if name == "euclidean":
        return Euclidean()
    if name == "mahalanobis":
        return Mahalanobis(diagonal=bool(kw.get("diagonal", False)))
    if name in ("mahalanobis_diagonal", "mahalanobis-diagonal"):
        return Mahalanobis(diagonal=True)
    if name in ("chi_squared", "chi2", "chi-squared"):
        return ChiSquared()
    raise ConfigError(f"unknown distance {name!r}")


def normalize01(img) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant image maps to zeros."""
    img = np.asarray(img, dtype=np.float64)
    lo, hi = img.min(), img.max()
    if hi <= lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def _channels(cube):
    if isinstance(cube, HyperCube):
        return cube.data
    arr = np.asarray(cube, dtype=np.float64)
    return arr[:, :, None] if arr.ndim == 2 else arr


def gradient_marginal(cube, j: int, se: Optional[StructuringElement] = None) -> np.ndarray:
    data = _channels(cube)
    return normalize01(morph_gradient(data[:, :, j], se or cross4()))


def gradient_sup(cube, se: Optional[StructuringElement] = None) -> np.ndarray:
    """Pointwise supremum of the normalized per-channel morphological gradients."""
    data = _channels(cube)
    se = se or cross4()
    out = np.zeros(data.shape[:2])
    for j in range(data.shape[2]):
        np.maximum(out, normalize01(morph_gradient(data[:, :, j], se)), out=out)
    return out


def gradient_weighted_sum(cube, weights: Sequence[float],
                          se: Optional[StructuringElement] = None) -> np.ndarray:
    data = _channels(cube)
    w = np.asarray(weights, dtype=np.float64)
    if w.size != data.shape[2]:
        raise DataError(f"{w.size} weights for {data.shape[2]} channels")
    if np.any(w < 0) or not np.any(w > 0):
        raise ConfigError("weights must be nonnegative with at least one positive")
    se = se or cross4()
    acc = np.zeros(data.shape[:2])
    for j in range(data.shape[2]):
        if w[j] > 0:
            acc += w[j] * normalize01(morph_gradient(data[:, :, j], se))
    return normalize01(acc)


def metric_range(cube, kind=None, se: Optional[StructuringElement] = None) -> np.ndarray:
    """Unnormalized ``max_y d(f(x), f(y)) - min_y d(f(x), f(y))`` over in-bounds
    neighbors ``y != x``; the embedded data must already be fitted."""
    data = _channels(cube)
    h, w, _ = data.shape
    kind = (kind or Euclidean()).fitted(data.reshape(h * w, -1))
    z = kind.embed(data.reshape(h * w, -1)).reshape(h, w, -1)
    se = se or cross4()
    hi = np.full((h, w), -np.inf)
    lo = np.full((h, w), np.inf)
    for dy, dx in se.neighbors:
        valid = _shifted(np.ones((h, w), dtype=bool), dy, dx, False)
        shifted = np.stack([_shifted(z[:, :, c], dy, dx, 0.0) for c in range(z.shape[2])], axis=-1)
        d = np.sqrt(np.sum((z - shifted) ** 2, axis=2))
        np.maximum(hi, np.where(valid, d, -np.inf), out=hi)
        np.minimum(lo, np.where(valid, d, np.inf), out=lo)
    out = hi - lo
    out[~np.isfinite(out)] = 0.0
    return out


def gradient_metric(cube, kind=None, se: Optional[StructuringElement] = None) -> np.ndarray:
    """Metric-based gradient: normalized spread of distances to the neighbors.

    The center pixel is excluded from its own neighborhood; with it the
    infimum would always be zero.
    """
    return normalize01(metric_range(cube, kind, se))


@dataclass(frozen=True)
class GradientSpec:
    """Which gradient to build.

    ``method`` is one of ``marginal`` (uses ``channel``), ``supremum``,
    ``weighted_sum`` (uses ``weights``; ``"inertia"`` is resolved by the
    pipeline) or ``metric`` (uses ``distance``).
    """

    method: str = "supremum"
    channel: int = 0
    weights: Optional[Sequence[float]] = None
    distance: object = field(default_factory=Euclidean)
    se: StructuringElement = field(default_factory=cross4)

    def __post_init__(self):
        if self.method not in ("marginal", "supremum", "weighted_sum", "metric"):
            raise ConfigError(f"unknown gradient method {self.method!r}")
        if self.method == "weighted_sum" and self.weights is None:
            raise ConfigError("weighted_sum gradient needs weights")


def compute_gradient(cube, spec: GradientSpec) -> np.ndarray:
    if spec.method == "marginal":
        return gradient_marginal(cube, spec.channel, spec.se)
    if spec.method == "supremum":
        return gradient_sup(cube, spec.se)
    if spec.method == "weighted_sum":
        return gradient_weighted_sum(cube, spec.weights, spec.se)
    return gradient_metric(cube, spec.distance, spec.se)
