import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperseg.core import ConfigError, DataError, cross4, square8
from hyperseg.gradients import gradient_sup
from hyperseg.metrics import segmentation_scores
from hyperseg.synthetic import generate_synthetic, two_blob_scene
from hyperseg.watershed import FloodSpec, boundaries, quantize, watershed
from oracles import components_connected, flood_oracle


def random_instance(seed, h=8, w=8, levels=16):
    r = np.random.default_rng(seed)
    g = r.integers(0, levels, size=(h, w)) / levels
    n = int(r.integers(2, 5))
    markers = np.zeros((h, w), dtype=np.int64)
    cells = r.choice(h * w, size=n, replace=False)
    markers.ravel()[cells] = np.arange(1, n + 1)
    return g, markers


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(["cross4", "square8"]), st.booleans())
def test_matches_oracle(seed, conn, lines):
    g, markers = random_instance(seed)
    se = cross4() if conn == "cross4" else square8()
    ours = watershed(g, markers, FloodSpec(connectivity=se, emit_lines=lines))
    assert np.array_equal(ours, flood_oracle(g, markers, se.offsets, lines=lines))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_structure(seed):
    g, markers = random_instance(seed, 10, 9)
    spec = FloodSpec()
    out = watershed(g, markers, spec)
    assert set(np.unique(out)) == set(np.unique(markers[markers > 0]))
    assert np.all(out[markers > 0] == markers[markers > 0])
    assert components_connected(out, spec.connectivity.offsets)


def test_lines_structure():
    g, markers = random_instance(5, 12, 12)
    out = watershed(g, markers, FloodSpec(emit_lines=True))
    assert set(np.unique(out)) <= set(np.unique(markers))
    assert np.all(out[markers > 0] == markers[markers > 0])


def test_single_marker_and_full_markers(rng):
    g = rng.uniform(size=(6, 7))
    m = np.zeros((6, 7), dtype=int)
    m[2, 3] = 4
    assert np.all(watershed(g, m) == 4)
    full = rng.integers(1, 4, size=(6, 7))
    assert np.array_equal(watershed(g, full), full)


def test_ramp_boundary_at_maximum():
    g = np.array([[0.0, 0.2, 0.4, 0.6, 1.0, 0.6, 0.4, 0.2, 0.0]])
    m = np.zeros((1, 9), dtype=int)
    m[0, 0], m[0, 8] = 1, 2
    out = watershed(g, m)
    assert list(out[0, :4]) == [1] * 4 and list(out[0, 5:]) == [2] * 4
    assert np.array_equal(out, flood_oracle(g, m, square8().offsets))
    lined = watershed(g, m, FloodSpec(emit_lines=True))
    assert lined[0, 4] == 0


def test_flat_gradient_is_breadth_first():
    g = np.zeros((1, 9))
    m = np.zeros((1, 9), dtype=int)
    m[0, 1], m[0, 7] = 1, 2
    out = watershed(g, m, FloodSpec(connectivity=cross4()))
    # the midpoint is reached first from the left marker (raster seeding order)
    assert list(out[0]) == [1, 1, 1, 1, 1, 2, 2, 2, 2]
    assert np.array_equal(out, flood_oracle(g, m, cross4().offsets))
    # the midpoint is equidistant; every other pixel goes to the nearer marker
    d1, d2 = np.abs(np.arange(9) - 1), np.abs(np.arange(9) - 7)
    near = d1 != d2
    assert np.all(out[0, near] == np.where(d1 < d2, 1, 2)[near])


@pytest.mark.parametrize("seed", range(10))
def test_monotone_remap_keeps_labels(seed):
    g, markers = random_instance(seed, levels=8)
    # g = k/8 quantizes to 32k; g**2 quantizes to 4k**2, same level order
    remapped = g ** 2
    qa, qb = quantize(g), quantize(remapped)
    assert np.array_equal(np.argsort(qa, axis=None, kind="stable"),
                          np.argsort(qb, axis=None, kind="stable"))
    assert np.array_equal(watershed(g, markers), watershed(remapped, markers))


def test_two_blob_truth_markers():
    scene = generate_synthetic(two_blob_scene(noise=0.3, seed=2))
    truth = scene.truth
    markers = np.zeros_like(truth)
    for t in (1, 2):
        yy, xx = np.nonzero(truth == t)
        markers[int(yy.mean()), int(xx.mean())] = t + 1
    markers[0, 0] = 1
    out = watershed(gradient_sup(scene.cube), markers)
    assert segmentation_scores(out - 1, truth)["f1"] >= 0.95


def test_errors():
    g = np.zeros((3, 3))
    with pytest.raises(DataError):
        watershed(g, np.zeros((3, 3), dtype=int))
    with pytest.raises(DataError):
        watershed(g + 1.5, np.ones((3, 3), dtype=int))
    with pytest.raises(DataError):
        watershed(g, np.ones((2, 3), dtype=int))
    with pytest.raises(ConfigError):
        FloodSpec(levels=1)


def test_quantize_and_boundaries():
    assert list(quantize(np.array([0.0, 0.5, 0.999, 1.0]), 4)) == [0, 2, 3, 3]
    lab = np.array([[1, 1, 2], [1, 1, 2]])
    b = boundaries(lab, cross4())
    assert np.array_equal(b, [[False, True, True], [False, True, True]])
