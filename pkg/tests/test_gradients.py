import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperseg.core import ConfigError, DataError, HyperCube, NumericalError, cross4, square8
from hyperseg.gradients import (ChiSquared, Euclidean, GradientSpec, Mahalanobis, compute_gradient,
                                distance, distance_from_name, gradient_marginal, gradient_metric,
                                gradient_sup, gradient_weighted_sum, normalize01)
from hyperseg.morphology import morph_gradient
from oracles import chi2_oracle, metric_gradient_oracle


def test_distance_examples():
    assert distance([0, 0], [3, 4]) == 5.0
    d = Mahalanobis(variances=[1.0, 4.0])
    assert abs(d([0, 0], [2, 4]) - np.sqrt(8.0)) < 1e-15
    chi = ChiSquared([3.0, 5.0, 2.0], 10.0)
    assert chi([1, 2, 3], [2, 4, 6]) == pytest.approx(0.0, abs=1e-15)
    assert abs(chi([1, 2, 3], [3, 1, 1]) - chi2_oracle([1, 2, 3], [3, 1, 1],
                                                       np.array([3.0, 5.0, 2.0]), 10.0)) < 1e-14


def test_full_covariance_with_diagonal_sigma(rng):
    var = rng.uniform(0.5, 3.0, 4)
    full, diag = Mahalanobis(covariance=np.diag(var)), Mahalanobis(variances=var)
    for _ in range(20):
        u, v = rng.normal(size=(2, 4))
        assert abs(full(u, v) - diag(u, v)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_distance_axioms(seed):
    r = np.random.default_rng(seed)
    X = r.uniform(0.1, 5.0, size=(30, 3))
    for kind in (Euclidean(), Mahalanobis().fitted(X), Mahalanobis(diagonal=True).fitted(X),
                 ChiSquared().fitted(X)):
        u, v = X[0], X[1]
        assert kind(u, u) == pytest.approx(0.0, abs=1e-12)
        assert kind(u, v) >= 0
        assert kind(u, v) == pytest.approx(kind(v, u), rel=1e-12)
        # embedding route agrees with the direct formula
        z = kind.embed(X[:2])
        assert np.linalg.norm(z[0] - z[1]) == pytest.approx(kind(u, v), rel=1e-9, abs=1e-12)


def test_distance_errors():
    with pytest.raises(DataError):
        distance([0, 0], [1, 2, 3])
    with pytest.raises(NumericalError):
        Mahalanobis(covariance=[[1.0, 1.0], [1.0, 1.0]])([0, 0], [1, 0])
    with pytest.raises(DataError):
        ChiSquared([1.0, 1.0], 2.0)([0, 0], [1, 1])
    with pytest.raises(ConfigError):
        distance_from_name("cosine")


def test_normalize01():
    assert np.allclose(normalize01([2, 4, 6]), [0, 0.5, 1])
    assert np.all(normalize01(np.full((3, 3), 7.0)) == 0)
    x = np.random.default_rng(0).normal(size=50)
    assert np.array_equal(np.argsort(normalize01(x)), np.argsort(x))


def test_gradient_contracts(rng):
    cube = HyperCube(rng.uniform(1, 5, size=(10, 12, 3)))
    outs = [gradient_marginal(cube, 1), gradient_sup(cube),
            gradient_weighted_sum(cube, [0.5, 0.3, 0.2]), gradient_metric(cube)]
    for g in outs:
        assert g.min() >= 0 and g.max() <= 1
    sup = outs[1]
    for j in range(3):
        assert np.all(sup >= gradient_marginal(cube, j))
    for g in (gradient_sup(HyperCube(np.ones((5, 5, 2)))), gradient_metric(np.ones((5, 5, 2)))):
        assert np.all(g == 0)


def test_metric_gradient_oracle(rng):
    for kind in (Euclidean(), Mahalanobis(), Mahalanobis(diagonal=True), ChiSquared()):
        cube = rng.uniform(0.5, 4.0, size=(6, 6, 3))
        fitted = kind.fitted(cube.reshape(-1, 3))
        for se in (cross4(), square8()):
            ours = gradient_metric(cube, kind, se)
            ref = metric_gradient_oracle(cube, fitted, se.offsets)
            assert np.max(np.abs(ours - ref)) < 1e-12


def test_metric_gradient_flat_interior():
    img = np.zeros((7, 7))
    img[:, 4:] = 3.0
    g = gradient_metric(img)
    assert np.all(g[:, 0:2] == 0)
    # one channel, Euclidean: argmax columns coincide with the step columns
    mg = morph_gradient(img, cross4())
    assert set(np.nonzero(g == g.max())[1]) == set(np.nonzero(mg == mg.max())[1])


def test_sup_single_channel_and_two_edges():
    img = np.zeros((6, 6))
    img[:, 3:] = 1.0
    assert np.array_equal(gradient_sup(img), gradient_marginal(img, 0))
    a = np.zeros((6, 6))
    a[:, 3:] = 5.0
    b = np.zeros((6, 6))
    b[3:, :] = 2.0
    g = gradient_sup(np.stack([a, b], axis=-1))
    assert np.all(g[:, 2:4] == 1.0) and np.all(g[2:4, :] == 1.0)
    assert np.all(g[np.ix_([0, 1, 4, 5], [0, 1, 4, 5])] == 0.0)


def test_weighted_sum_cases(rng):
    cube = rng.normal(size=(8, 8, 3))
    assert np.allclose(gradient_weighted_sum(cube, [0, 1, 0]), gradient_marginal(cube, 1))
    edges = np.zeros((8, 8, 2))
    edges[:, 4:, 0] = 1.0
    edges[4:, :, 1] = 3.0
    noisy = np.concatenate([edges, rng.normal(size=(8, 8, 1))], axis=-1)
    assert np.array_equal(gradient_weighted_sum(noisy, [0.6, 0.4, 0.0]),
                          gradient_weighted_sum(edges, [0.6, 0.4]))
    with pytest.raises(DataError):
        gradient_weighted_sum(cube, [1, 1])
    with pytest.raises(ConfigError):
        gradient_weighted_sum(cube, [0, 0, 0])


def test_channel_permutation_invariance(rng):
    cube = rng.normal(size=(9, 9, 3))
    perm = [2, 0, 1]
    w = np.array([0.2, 0.5, 0.3])
    assert np.array_equal(gradient_sup(cube), gradient_sup(cube[:, :, perm]))
    assert np.allclose(gradient_weighted_sum(cube, w), gradient_weighted_sum(cube[:, :, perm], w[perm]))


def test_compute_gradient_dispatch(rng):
    cube = rng.uniform(1, 2, size=(6, 6, 2))
    assert np.array_equal(compute_gradient(cube, GradientSpec("marginal", channel=1)),
                          gradient_marginal(cube, 1))
    assert np.array_equal(compute_gradient(cube, GradientSpec("metric", distance=ChiSquared())),
                          gradient_metric(cube, ChiSquared()))
    with pytest.raises(ConfigError):
        GradientSpec("laplacian")
