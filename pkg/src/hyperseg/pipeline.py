"""Configuration-driven segmentation in one of four spaces.

Stages: optional FCA filtering, construction of the segmentation space
(filtered image, FCA factors, model parameters or their PCA factors),
per-channel leveling, cluster markers, gradient, watershed.

A configuration is a JSON object; every key has a default (see
:data:`DEFAULT_CONFIG`), so ``{}`` is valid when a synthetic input is given.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .clustering import ClusteringSpec, MarkerSpec, extract_markers
from .core import ConfigError, DataError, HyperCube, HypersegError, se_from_name
from .factor import fca_fit, fca_project, fca_reconstruct, pca_fit, pca_project
from .gradients import GradientSpec, compute_gradient, distance_from_name, ChiSquared, Mahalanobis
from .metrics import metrics_report
from .model import ModelSpec, build_parameters
from .morphology import LevelingSpec, level_cube
from .synthetic import generate_synthetic, spec_from_dict
from .watershed import FloodSpec, watershed

SPACES = ("filtered_image", "fca_factors", "parameters", "pca_parameters")

DEFAULT_CONFIG = {
    "input": None,
    "synthetic": None,
    "truth": None,
    "epsilon_offset": 0.0,
    "fca": {"enabled": True, "K": 2},
    "space": "parameters",
    "model": {"transitory_end": 10, "x_values": None, "fit_raw": False},
    "pca": {"axes": None, "whiten": False},
    "leveling": {"enabled": True, "gaussian_size": 11, "se": "cross4",
                 "max_iters": None, "tolerance": 1e-9},
    "markers": {
        "k": 3, "samples": 5, "sample_size": None, "seed": 42, "distance": "euclidean",
        "select": "smallest", "stage2": None, "opening_radius": 2,
        "background": "eroded_complement", "background_radius": None,
        "erosion_radius": None, "connectivity": "square8",
    },
    "gradient": {"method": "supremum", "distance": "euclidean", "weights": None,
                 "channel": 0, "se": "cross4"},
    "flood": {"levels": 256, "connectivity": "square8", "emit_lines": False},
    "outputs": {"dir": None, "intermediates": True, "report": False, "display_scale": 1.0},
}


class StageError(HypersegError):
    """A pipeline stage failed; ``cause`` is the original exception."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(source=None, overrides=None) -> dict:
    """Merge a JSON file (or dict) and dotted-key overrides onto the defaults.

    ``overrides`` maps keys such as ``"markers.k"`` to values; string values
    are parsed as JSON when possible, so ``"3"`` becomes ``3``.
    """
    if source is None:
        user = {}
    elif isinstance(source, dict):
        user = source
    else:
        try:
            with open(source) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON: {exc}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from None
    unknown = set(user) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = _merge(DEFAULT_CONFIG, user)
    for key, value in (overrides or {}).items():
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError:
                pass
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {} if node.get(p) is None else node[p]
                if not isinstance(node[p], dict):
                    raise ConfigError(f"override {key!r}: {p!r} is not a section")
            node = node[p]
        node[parts[-1]] = value
    return cfg


def _clustering_spec(d: dict) -> ClusteringSpec:
    return ClusteringSpec(k=int(d.get("k", 3)), samples=int(d.get("samples", 5)),
                          sample_size=d.get("sample_size"), seed=int(d.get("seed", 42)),
                          distance=distance_from_name(d.get("distance", "euclidean")))


def marker_spec(d: dict) -> MarkerSpec:
    stage2 = d.get("stage2")
    return MarkerSpec(
        stage1=_clustering_spec(d),
        select=d.get("select", "smallest"),
        stage2=_clustering_spec(_merge({"seed": d.get("seed", 42)}, stage2)) if stage2 else None,
        stage2_select=(stage2 or {}).get("select", "smallest"),
        opening_radius=int(d.get("opening_radius", 2)),
        background=d.get("background", "eroded_complement"),
        background_radius=d.get("background_radius"),
        erosion_radius=d.get("erosion_radius"),
        connectivity=se_from_name(d.get("connectivity", "square8")),
    )


def leveling_spec(d: dict) -> LevelingSpec:
    return LevelingSpec(int(d.get("gaussian_size", 11)), se_from_name(d.get("se", "cross4")),
                        d.get("max_iters"), float(d.get("tolerance", 1e-9)))


def flood_spec(d: dict) -> FloodSpec:
    return FloodSpec(int(d.get("levels", 256)), se_from_name(d.get("connectivity", "square8")),
                     bool(d.get("emit_lines", False)))


def gradient_spec(d: dict, weights=None) -> GradientSpec:
    return GradientSpec(method=d.get("method", "supremum"), channel=int(d.get("channel", 0)),
                        weights=weights if weights is not None else d.get("weights"),
                        distance=distance_from_name(d.get("distance", "euclidean")),
                        se=se_from_name(d.get("se", "cross4")))


def validate_config(cfg: dict) -> None:
    """Reject incompatible combinations before any data is touched."""
    if cfg["space"] not in SPACES:
        raise ConfigError(f"space must be one of {SPACES}, got {cfg['space']!r}")
    if cfg["input"] is None and cfg["synthetic"] is None:
        raise ConfigError("config needs either 'input' or 'synthetic'")
    if cfg["input"] is not None and not Path(cfg["input"]).exists():
        raise ConfigError(f"input {cfg['input']} does not exist")
    if cfg["truth"] is not None and not Path(cfg["truth"]).exists():
        raise ConfigError(f"truth {cfg['truth']} does not exist")
    g = cfg["gradient"]
    method = g.get("method", "supremum")
    if method == "metric":
        dist = distance_from_name(g.get("distance", "euclidean"))
        if isinstance(dist, ChiSquared) and cfg["space"] != "filtered_image":
            raise ConfigError("chi-squared gradient requires the nonnegative filtered_image space")
    if cfg["fca"].get("enabled", True) is False and cfg["space"] == "fca_factors":
        raise ConfigError("fca_factors space requires fca.enabled")
    w = g.get("weights")
    if method == "weighted_sum" and w is None:
        raise ConfigError("weighted_sum gradient needs weights (list or \"inertia\")")
    if w == "inertia" and cfg["space"] not in ("fca_factors", "pca_parameters"):
        raise ConfigError("inertia weights exist only in fca_factors and pca_parameters spaces")
    leveling_spec(cfg["leveling"])
    marker_spec(cfg["markers"])
    flood_spec(cfg["flood"])


@dataclass
class PipelineResult:
    labels: np.ndarray
    markers: np.ndarray
    gradient: np.ndarray
    space: HyperCube
    leveled: HyperCube
    clusters: np.ndarray
    cube: HyperCube
    filtered: Optional[HyperCube] = None
    factors: Optional[HyperCube] = None
    parameters: Optional[HyperCube] = None
    fca_model: object = None
    pca_model: object = None
    truth: Optional[np.ndarray] = None
    metrics: dict = field(default_factory=dict)


class _stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(
                exc, (HypersegError, ValueError, ArithmeticError, np.linalg.LinAlgError, OSError)):
            raise StageError(self.name, exc) from exc
        return False


def load_input(cfg: dict):
    """Return ``(cube, truth)`` from the configured file or synthetic generator."""
    truth = None
    if cfg["input"] is not None:
        cube = io.read_cube(cfg["input"])
    else:
        scene = generate_synthetic(spec_from_dict(cfg["synthetic"]))
        cube, truth = scene.cube, scene.truth
    if cfg["truth"] is not None:
        truth = io.read_labels(cfg["truth"])
        if truth.shape != (cube.height, cube.width):
            raise DataError(f"truth {truth.shape} does not match cube {(cube.height, cube.width)}")
    return cube, truth


def run_pipeline(config=None, cube: Optional[HyperCube] = None, truth=None) -> PipelineResult:
    """Run every stage on ``cube`` (or the configured input) and return all products."""
    cfg = config if isinstance(config, dict) and "outputs" in config else load_config(config)
    if cube is None:
        validate_config(cfg)
        with _stage("input"):
            cube, loaded_truth = load_input(cfg)
        truth = loaded_truth if truth is None else truth
    else:
        if cfg["space"] not in SPACES:
            raise ConfigError(f"space must be one of {SPACES}")
    res = {"cube": cube, "truth": truth}

    with _stage("filter"):
        work = cube
        eps = float(cfg.get("epsilon_offset") or 0.0)
        if eps:
            work = cube.with_data(cube.data + eps)
        filtered = work
        if cfg["fca"].get("enabled", True):
            K = int(cfg["fca"].get("K", 2))
            fmodel = fca_fit(work, K)
            factors = fca_project(fmodel, work)
            rec = fca_reconstruct(fmodel, factors)
            filtered = work.with_data(rec.data if isinstance(rec, HyperCube)
                                      else np.reshape(rec, work.shape))
            res.update(fca_model=fmodel, factors=factors if isinstance(factors, HyperCube) else None)
        res["filtered"] = filtered

    space_name = cfg["space"]
    with _stage("reduce"):
        inertia = None
        if space_name == "filtered_image":
            space = filtered
        elif space_name == "fca_factors":
            space = res["factors"]
            if space is None:
                raise ConfigError("fca_factors space needs K >= 1")
            inertia = res["fca_model"].inertia_ratios[:space.channels]
        else:
            m = cfg["model"]
            mspec = ModelSpec(int(m.get("transitory_end", 10)), m.get("x_values"))
            source = work if m.get("fit_raw") else filtered
            params = build_parameters(source, mspec)
            res["parameters"] = params
            space = params
            if space_name == "pca_parameters":
                p = cfg["pca"]
                pmodel = pca_fit(params, bool(p.get("whiten", False)))
                axes = p.get("axes")
                space = pca_project(pmodel, params, n_components=axes)
                res["pca_model"] = pmodel
                inertia = pmodel.inertia_ratios[:space.channels]

    with _stage("level"):
        lv = cfg["leveling"]
        leveled = level_cube(space, leveling_spec(lv)) if lv.get("enabled", True) else space

    with _stage("markers"):
        mres = extract_markers(leveled, marker_spec(cfg["markers"]), details=True)

    with _stage("gradient"):
        g = cfg["gradient"]
        weights = None
        if g.get("weights") == "inertia":
            if inertia is None:
                raise ConfigError("inertia weights unavailable in this space")
            weights = list(np.asarray(inertia, dtype=float))
        gspec = gradient_spec(g, weights)
        if gspec.method == "metric" and isinstance(gspec.distance, Mahalanobis) \
                and leveled.channels < 2:
            raise ConfigError("Mahalanobis gradient needs at least two channels")
        gradient = compute_gradient(leveled, gspec)

    with _stage("watershed"):
        labels = watershed(gradient, mres.markers, flood_spec(cfg["flood"]))

    result = PipelineResult(labels=labels, markers=mres.markers, gradient=gradient, space=space,
                            leveled=leveled, clusters=mres.clusters, **res)
    with _stage("evaluate"):
        result.metrics = metrics_report(labels, truth)
    return result


def write_outputs(result: PipelineResult, out_dir, intermediates: bool = True,
                  report: bool = False, display_scale: float = 1.0) -> list:
    """Write label/metric files (and optionally intermediates and figures); return paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def w(name, fn, *args):
        path = out / name
        fn(path, *args)
        written.append(path)

    w("labels.hyp1", io.write_labels, result.labels)
    w("labels.png", io.write_label_png, result.labels)
    w("metrics.json", io.write_json, result.metrics)
    if intermediates:
        w("markers.hyp1", io.write_labels, result.markers)
        w("markers.png", io.write_label_png, result.markers)
        w("clusters.png", io.write_label_png, result.clusters + 1)
        w("gradient.hyp1", io.write_hyp1, result.gradient)
        w("gradient.png", io.write_gray_png, result.gradient, display_scale)
        w("space.hyp1", io.write_hyp1, result.space)
        w("leveled.hyp1", io.write_hyp1, result.leveled)
        for j in range(result.space.channels):
            name = (result.space.channel_labels or [str(j)] * result.space.channels)[j]
            w(f"space_{j:02d}_{name}.png", io.write_gray_png, result.space.data[:, :, j])
        if result.filtered is not None and result.fca_model is not None:
            w("filtered.hyp1", io.write_hyp1, result.filtered)
        if result.factors is not None:
            w("factors.hyp1", io.write_hyp1, result.factors)
        if result.parameters is not None:
            w("parameters.hyp1", io.write_hyp1, result.parameters)
        if result.fca_model is not None:
            w("fca_model.json", io.write_json, result.fca_model.to_dict())
        if result.pca_model is not None:
            w("pca_model.json", io.write_json, result.pca_model.to_dict())
    if report:
        from .report import write_report

        written += write_report(result, out, display_scale)
    return written

