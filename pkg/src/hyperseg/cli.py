"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .clustering import extract_markers
from .core import ConfigError, DataError, HyperCube, NumericalError
from .factor import fca_fit, fca_project, fca_reconstruct, pca_fit, pca_project
from .gradients import compute_gradient
from .metrics import metrics_report
from .model import ModelSpec, build_parameters
from .morphology import level_cube
from .pipeline import (DEFAULT_CONFIG, StageError, flood_spec, gradient_spec, leveling_spec,
                       load_config, marker_spec, run_pipeline, validate_config, write_outputs)
from .synthetic import generate_synthetic, lid_scene, spec_from_dict
from .watershed import watershed

log = logging.getLogger("hyperseg")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _outdir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _overrides(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = v
    return out


def cmd_synth(args):
    if args.config:
        with open(args.config) as fh:
            spec = spec_from_dict(json.load(fh))
    else:
        spec = lid_scene(size=args.size, channels=args.channels,
                         transitory_end=args.transitory_end,
                         noise_fraction=args.noise_fraction, seed=args.seed)
    scene = generate_synthetic(spec)
    out = _outdir(args.out)
    io.write_hyp1(out / "cube.hyp1", scene.cube)
    io.write_labels(out / "truth.hyp1", scene.truth)
    io.write_label_png(out / "truth.png", scene.truth)
    io.write_hyp1(out / "truth_parameters.hyp1", scene.parameters)
    log.info("wrote %s (%dx%dx%d, noise %.4g)", out / "cube.hyp1", scene.cube.height,
             scene.cube.width, scene.cube.channels, spec.noise)


def cmd_filter(args):
    cube = io.read_cube(args.input)
    if args.epsilon:
        cube = cube.with_data(cube.data + args.epsilon)
    model = fca_fit(cube, args.K)
    factors = fca_project(model, cube)
    rec = fca_reconstruct(model, factors)
    filtered = cube.with_data(np.reshape(rec.data if isinstance(rec, HyperCube) else rec,
                                         cube.shape))
    out = _outdir(args.out)
    io.write_json(out / "fca_model.json", model.to_dict())
    io.write_hyp1(out / "filtered.hyp1", filtered)
    if args.K > 0:
        io.write_hyp1(out / "factors.hyp1", factors)
        for k in range(args.K):
            io.write_gray_png(out / f"factor_{k + 1}.png", factors.data[:, :, k], args.display_scale)
    ratios = ", ".join(f"{100 * r:.2f}%" for r in model.inertia_ratios[:max(args.K, 1)])
    log.info("FCA eigenvalues %s; inertia ratios %s",
             np.array2string(model.eigenvalues[:max(args.K, 1)], precision=4), ratios)


def cmd_reduce(args):
    cube = io.read_cube(args.input)
    params = build_parameters(cube, ModelSpec(args.transitory_end))
    out = _outdir(args.out)
    io.write_hyp1(out / "parameters.hyp1", params)
    for j, name in enumerate(params.channel_labels):
        io.write_gray_png(out / f"parameter_{name}.png", params.data[:, :, j])
    if args.pca:
        model = pca_fit(params, args.whiten)
        scores = pca_project(model, params, n_components=args.axes)
        io.write_json(out / "pca_model.json", model.to_dict())
        io.write_hyp1(out / "pca_parameters.hyp1", scores)
        log.info("PCA inertia ratios %s",
                 ", ".join(f"{100 * r:.2f}%" for r in model.inertia_ratios))


def _cfg_section(args, section):
    cfg = load_config(args.config, _overrides(args.set))
    return cfg, cfg[section]


def _maybe_level(cube, cfg, flag):
    if flag:
        return level_cube(cube, leveling_spec(cfg["leveling"]))
    return cube


def cmd_markers(args):
    cfg, mcfg = _cfg_section(args, "markers")
    space = _maybe_level(io.read_cube(args.input), cfg, args.level)
    res = extract_markers(space, marker_spec(mcfg), details=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_labels(out, res.markers)
    io.write_label_png(out.with_suffix(".png"), res.markers)
    io.write_label_png(out.with_name(out.stem + "_clusters.png"), res.clusters + 1)
    log.info("%d object markers", res.n_objects)


def cmd_gradient(args):
    cfg, gcfg = _cfg_section(args, "gradient")
    space = _maybe_level(io.read_cube(args.input), cfg, args.level)
    weights = None
    if gcfg.get("weights") == "inertia":
        if not args.model:
            raise ConfigError("inertia weights need --model (fca_model.json or pca_model.json)")
        with open(args.model) as fh:
            doc = json.load(fh)
        ev = np.asarray(doc["eigenvalues"], dtype=float)
        weights = list((ev / ev.sum())[:space.channels])
    grad = compute_gradient(space, gradient_spec(gcfg, weights))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_hyp1(out, grad)
    io.write_gray_png(out.with_suffix(".png"), grad, args.display_scale)


def cmd_watershed(args):
    cfg, fcfg = _cfg_section(args, "flood")
    _, garr = io.read_hyp1_raw(args.gradient)
    markers = io.read_labels(args.markers)
    labels = watershed(garr[:, :, 0].astype(np.float64), markers, flood_spec(fcfg))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_labels(out, labels)
    io.write_label_png(out.with_suffix(".png"), labels)


def cmd_run(args):
    cfg = load_config(args.config, _overrides(args.set))
    if args.out:
        cfg["outputs"]["dir"] = args.out
    if args.report:
        cfg["outputs"]["report"] = True
    if cfg["outputs"]["dir"] is None:
        raise ConfigError("no output directory (use --out or outputs.dir)")
    validate_config(cfg)
    result = run_pipeline(cfg)
    o = cfg["outputs"]
    write_outputs(result, o["dir"], bool(o.get("intermediates", True)),
                  bool(o.get("report", False)), float(o.get("display_scale", 1.0)))
    scores = result.metrics.get("scores")
    if scores:
        log.info("F1 %.4f  accuracy %.4f", scores["f1"], scores["accuracy"])
    log.info("%d regions written to %s", result.metrics["n_regions"], o["dir"])


def cmd_eval(args):
    labels = io.read_labels(args.labels)
    truth = io.read_labels(args.truth)
    if labels.shape != truth.shape:
        raise DataError(f"labels {labels.shape} and truth {truth.shape} differ in shape")
    report = metrics_report(labels, truth)
    if args.out:
        io.write_json(args.out, report)
    print(json.dumps({"f1": report["scores"]["f1"], "accuracy": report["scores"]["accuracy"]}))


def cmd_config(args):
    print(json.dumps(DEFAULT_CONFIG, indent=2))


def build_parser():
    p = argparse.ArgumentParser(prog="hyperseg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def cfg_opts(sp):
        sp.add_argument("--config", help="JSON pipeline configuration")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field, e.g. markers.k=4")

    s = sub.add_parser("synth", help="generate a synthetic lid-like cube and its truth")
    s.add_argument("--config", help="JSON synthetic spec (see synthetic.spec_from_dict)")
    s.add_argument("--size", type=int, default=128)
    s.add_argument("--channels", type=int, default=30)
    s.add_argument("--transitory-end", type=int, default=10)
    s.add_argument("--noise-fraction", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("filter", help="FCA filtering: model, factors, reconstruction")
    s.add_argument("input")
    s.add_argument("-K", type=int, default=2)
    s.add_argument("--epsilon", type=float, default=0.0, help="add before fitting (zero rows)")
    s.add_argument("--display-scale", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("reduce", help="linear model + rise parameters, optional PCA")
    s.add_argument("input")
    s.add_argument("--transitory-end", type=int, default=10)
    s.add_argument("--pca", action="store_true")
    s.add_argument("--whiten", action="store_true")
    s.add_argument("--axes", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("markers", help="cluster markers from a space cube")
    s.add_argument("input")
    s.add_argument("--level", action="store_true", help="level channels first")
    cfg_opts(s)
    s.add_argument("--out", required=True, help="markers .hyp1 path")
    s.set_defaults(func=cmd_markers)

    s = sub.add_parser("gradient", help="normalized gradient of a space cube")
    s.add_argument("input")
    s.add_argument("--level", action="store_true", help="level channels first")
    s.add_argument("--model", help="model JSON providing inertia weights")
    s.add_argument("--display-scale", type=float, default=1.0)
    cfg_opts(s)
    s.add_argument("--out", required=True, help="gradient .hyp1 path")
    s.set_defaults(func=cmd_gradient)

    s = sub.add_parser("watershed", help="flood a gradient from markers")
    s.add_argument("gradient")
    s.add_argument("markers")
    cfg_opts(s)
    s.add_argument("--out", required=True, help="labels .hyp1 path")
    s.set_defaults(func=cmd_watershed)

    s = sub.add_parser("run", help="full pipeline from a config")
    s.add_argument("config", nargs="?", help="JSON pipeline configuration")
    s.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config field, e.g. space=fca_factors")
    s.add_argument("--out", help="output directory (overrides outputs.dir)")
    s.add_argument("--report", action="store_true", help="also render figures and CSV tables")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("eval", help="score labels against a truth label file")
    s.add_argument("labels")
    s.add_argument("truth")
    s.add_argument("--out", help="metrics JSON path")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("config", help="print the default configuration")
    s.set_defaults(func=cmd_config)
    return p


def exit_code(exc) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (NumericalError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    return EXIT_DATA


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigError, DataError, NumericalError, StageError, ValueError, OSError,
            ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("%s", exc)
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
