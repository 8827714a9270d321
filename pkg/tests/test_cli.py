import json
import subprocess
import sys

import numpy as np
import pytest

from hyperseg import io
from hyperseg.cli import main


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--size", "64", "--seed", "2", "--out", str(d)]) == 0
    return d


def test_synth_outputs(synth_dir):
    cube = io.read_hyp1(synth_dir / "cube.hyp1")
    assert cube.shape == (64, 64, 30)
    assert io.read_labels(synth_dir / "truth.hyp1").max() == 3


def test_stage_by_stage(synth_dir, tmp_path):
    d = str(tmp_path)
    assert main(["filter", str(synth_dir / "cube.hyp1"), "-K", "2", "--out", d]) == 0
    assert main(["reduce", f"{d}/filtered.hyp1", "--pca", "--out", d]) == 0
    assert main(["markers", f"{d}/parameters.hyp1", "--level", "--out", f"{d}/markers.hyp1"]) == 0
    assert main(["gradient", f"{d}/parameters.hyp1", "--level", "--set", "gradient.method=metric",
                 "--set", "gradient.distance=mahalanobis_diagonal",
                 "--out", f"{d}/gradient.hyp1"]) == 0
    assert main(["gradient", f"{d}/pca_parameters.hyp1", "--model", f"{d}/pca_model.json",
                 "--set", "gradient.method=weighted_sum", "--set", 'gradient.weights="inertia"',
                 "--out", f"{d}/g_pca.hyp1"]) == 0
    assert main(["watershed", f"{d}/gradient.hyp1", f"{d}/markers.hyp1",
                 "--out", f"{d}/labels.hyp1"]) == 0
    assert main(["eval", f"{d}/labels.hyp1", str(synth_dir / "truth.hyp1"),
                 "--out", f"{d}/m.json"]) == 0
    metrics = json.loads((tmp_path / "m.json").read_text())
    assert metrics["scores"]["f1"] >= 0.9
    for name in ("fca_model.json", "factor_1.png", "parameter_m.png", "labels.png", "markers.png"):
        assert (tmp_path / name).exists()


def test_run_with_report(synth_dir, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"input": str(synth_dir / "cube.hyp1"),
                               "truth": str(synth_dir / "truth.hyp1")}))
    out = tmp_path / "run"
    assert main(["run", str(cfg), "--out", str(out), "--report"]) == 0
    for name in ("labels.hyp1", "metrics.json", "report_overview.png", "report_space.png",
                 "report_spectra.png", "regions.csv", "scores.csv"):
        assert (out / name).exists()


def test_exit_codes(synth_dir, tmp_path, capsys):
    cube = str(synth_dir / "cube.hyp1")
    out = str(tmp_path / "o")
    assert main(["run", "--set", f'input="{cube}"', "--set", 'space="rgb"', "--out", out]) == 2
    assert main(["run", "--out", out]) == 2
    assert main(["filter", str(tmp_path / "missing.hyp1"), "--out", out]) == 3
    (tmp_path / "bad.hyp1").write_bytes(b"HYP1junk")
    assert main(["filter", str(tmp_path / "bad.hyp1"), "--out", out]) == 3
    assert main(["run", "--set", f'input="{cube}"', "--set", "leveling.max_iters=1",
                 "--out", out]) == 4


def test_config_and_module_entry():
    proc = subprocess.run([sys.executable, "-m", "hyperseg", "config"], capture_output=True,
                          text=True, check=True)
    assert json.loads(proc.stdout)["flood"]["levels"] == 256


def test_eval_shape_mismatch(tmp_path):
    io.write_labels(tmp_path / "a.hyp1", np.ones((4, 4)))
    io.write_labels(tmp_path / "b.hyp1", np.ones((4, 5)))
    assert main(["eval", str(tmp_path / "a.hyp1"), str(tmp_path / "b.hyp1")]) == 3
