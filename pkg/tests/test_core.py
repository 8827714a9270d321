import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hyperseg.core import (ConfigError, DataError, HyperCube, StructuringElement, assemble,
                           channel, connected_components, cross4, disk, relabel_sequential,
                           se_from_name, square8)


def test_cube_shape_and_readonly():
    cube = HyperCube(np.arange(24).reshape(2, 3, 4), ["a", "b", "c", "d"])
    assert (cube.height, cube.width, cube.channels, cube.n_pixels) == (2, 3, 4, 6)
    assert cube.data.dtype == np.float64
    with pytest.raises(ValueError):
        cube.data[0, 0, 0] = 5
    # pixel-major: one row of pixels() is the spectrum of one pixel
    assert np.array_equal(cube.pixels()[4], cube.data[1, 1])


def test_cube_rejects_bad_input():
    with pytest.raises(DataError):
        HyperCube(np.zeros(5))
    with pytest.raises(DataError):
        HyperCube(np.zeros((2, 2, 3)), ["x"])


def test_channel_out_of_range():
    cube = HyperCube(np.zeros((2, 2, 3)))
    with pytest.raises(IndexError):
        channel(cube, 3)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 5, 3), elements=st.floats(-1e6, 1e6)))
def test_channel_assemble_round_trip(data):
    cube = HyperCube(data)
    back = assemble([channel(cube, j) for j in range(cube.channels)])
    assert back.data.tobytes() == cube.data.tobytes()


def test_structuring_elements():
    assert cross4().neighbors == ((-1, 0), (0, -1), (0, 1), (1, 0))
    assert len(square8()) == 9
    assert set(disk(1).offsets) == set(cross4().offsets)
    assert len(disk(2)) == 13
    assert se_from_name("disk(3)").radius == 3
    with pytest.raises(ConfigError):
        StructuringElement(((0, 0), (0, 1)))
    with pytest.raises(ConfigError):
        se_from_name("hexagon")


def test_components_trivial_cases():
    assert connected_components(np.zeros((4, 4)), cross4()).max() == 0
    full = connected_components(np.ones((4, 4)), cross4())
    assert np.all(full == 1)


def test_components_diagonal_pair():
    m = np.zeros((3, 3), dtype=bool)
    m[0, 0] = m[1, 1] = True
    assert connected_components(m, cross4()).max() == 2
    assert connected_components(m, square8()).max() == 1


@settings(max_examples=40, deadline=None)
@given(arrays(bool, (7, 7)), st.sampled_from(["cross4", "square8"]))
def test_components_invariants(mask, se_name):
    se = se_from_name(se_name)
    lab = connected_components(mask, se)
    n = lab.max()
    assert np.array_equal(lab > 0, mask)
    for i in range(1, n + 1):
        assert connected_components(lab == i, se).max() == 1
    # scan order: a transposed/flipped image has the same partition
    flipped = connected_components(mask[::-1, ::-1], se)[::-1, ::-1]
    assert flipped.max() == n
    pairs = {(a, b) for a, b in zip(lab.ravel(), flipped.ravel()) if a}
    assert len(pairs) == n


def test_relabel_sequential():
    lab = np.array([[0, 5, 5], [9, 0, 2]])
    assert np.array_equal(relabel_sequential(lab), [[0, 2, 2], [3, 0, 1]])
