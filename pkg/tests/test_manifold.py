import numpy as np
import pytest
import scipy.optimize

from intentflow.errors import ParameterError
from intentflow.manifold import (
    BANDWIDTH_FLOOR,
    NeighborGraph,
    ReductionParams,
    fit_ab,
    fuzzy_graph,
    knn_graph,
    reduce,
    smooth_bandwidths,
)

from conftest import gaussian_blobs


def brute_force_knn(points, k, metric):
    """Oracle: full sort by (distance, index) per row."""
    n = len(points)
    if metric == "euclidean":
        d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    else:
        norms = np.linalg.norm(points, axis=1, keepdims=True)
        unit = np.divide(points, norms, out=np.zeros_like(points), where=norms > 0)
        d = np.clip(1.0 - unit @ unit.T, 0.0, 2.0)
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    for i in range(n):
        order = sorted((j for j in range(n) if j != i), key=lambda j: (d[i, j], j))
        idx[i] = order[:k]
        dist[i] = d[i, idx[i]]
    return idx, dist


@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
def test_knn_matches_brute_force(metric):
    rng = np.random.default_rng(7)
    points = rng.normal(size=(60, 6))
    graph = knn_graph(points, 8, metric=metric)
    idx, dist = brute_force_knn(points, 8, metric)
    assert np.array_equal(graph.indices, idx)
    assert np.allclose(graph.distances, dist, atol=1e-12)


def test_knn_tie_break_prefers_lower_index():
    points = np.array([[0.0], [1.0], [2.0]])
    graph = knn_graph(points, 1, metric="euclidean")
    # point 1 is equidistant from 0 and 2; the tie goes to index 0
    assert graph.indices[1, 0] == 0


def test_knn_rejects_bad_k():
    points = np.zeros((5, 2))
    with pytest.raises(ParameterError):
        knn_graph(points, 5)
    with pytest.raises(ParameterError):
        knn_graph(points, 0)


def test_smooth_bandwidths_solves_log2k():
    distances = np.array([[1.0, 2.0, 3.0, 4.0]])
    rho, sigma = smooth_bandwidths(distances)
    assert rho[0] == 1.0
    # oracle: sum exp(-(d - rho)/s) = log2(4) solved independently
    target = np.log2(4)

    def f(s):
        return np.exp(-(distances[0] - rho[0]).clip(min=0) / s).sum() - target

    expect = scipy.optimize.brentq(f, 1e-6, 100.0, xtol=1e-12)
    assert sigma[0] == pytest.approx(expect, abs=1e-4)
    # and substitution really lands on the target
    got = np.exp(-(distances[0] - rho[0]) / sigma[0]).sum()
    assert got == pytest.approx(target, abs=1e-4)


def test_smooth_bandwidths_floor_on_degenerate_rows():
    rho, sigma = smooth_bandwidths(np.ones((1, 4)))
    assert rho[0] == 1.0
    assert sigma[0] == BANDWIDTH_FLOOR


def test_smooth_bandwidths_vectorized_matches_rowwise():
    rng = np.random.default_rng(0)
    d = np.sort(rng.uniform(0.1, 5.0, size=(20, 10)), axis=1)
    rho_all, sigma_all = smooth_bandwidths(d)
    for i in range(len(d)):
        rho_i, sigma_i = smooth_bandwidths(d[i : i + 1])
        assert rho_all[i] == rho_i[0]
        assert sigma_all[i] == pytest.approx(sigma_i[0], abs=1e-9)


def test_fuzzy_graph_symmetric_unit_interval():
    rng = np.random.default_rng(1)
    points = rng.normal(size=(50, 4))
    graph = fuzzy_graph(knn_graph(points, 6))
    dense = graph.toarray()
    assert np.array_equal(dense, dense.T)
    assert dense.min() >= 0.0
    assert dense.max() <= 1.0 + 1e-12
    assert np.all(dense.diagonal() == 0.0)
    # each point's nearest neighbour sits at full membership
    assert np.allclose(dense.max(axis=1), 1.0)


def test_fit_ab_reproduces_target_curve():
    a, b = fit_ab(spread=1.0, min_dist=0.1)
    assert a > 0 and b > 0
    x = np.linspace(0.0, 3.0, 300)
    target = np.where(x <= 0.1, 1.0, np.exp(-(x - 0.1)))
    fitted = 1.0 / (1.0 + a * x ** (2.0 * b))
    assert np.mean((fitted - target) ** 2) < 1e-3


def test_fit_ab_tracks_min_dist():
    a_tight, _ = fit_ab(min_dist=0.01)
    a_loose, _ = fit_ab(min_dist=0.5)
    # looser min_dist flattens the curve near zero, which needs smaller a
    assert a_tight > a_loose


def test_reduce_shape_and_determinism():
    points, _ = gaussian_blobs(40, np.eye(3) * 8.0, 0.5, seed=3)
    params = ReductionParams(
        n_neighbors=10, target_dim=2, n_epochs=60, metric="euclidean", seed=9
    )
    out1 = reduce(points, params)
    out2 = reduce(points, params)
    assert out1.shape == (120, 2)
    assert np.isfinite(out1).all()
    assert np.array_equal(out1, out2)
    out3 = reduce(points, ReductionParams(
        n_neighbors=10, target_dim=2, n_epochs=60, metric="euclidean", seed=10
    ))
    assert not np.array_equal(out1, out3)


def test_reduce_handles_duplicate_rows():
    rng = np.random.default_rng(4)
    base = rng.normal(size=(30, 5))
    points = np.vstack([base, base[:5]])  # exact duplicates
    out = reduce(points, ReductionParams(
        n_neighbors=5, target_dim=2, n_epochs=40, metric="euclidean", seed=0
    ))
    assert np.isfinite(out).all()


def test_reduce_preserves_blob_neighborhoods():
    from sklearn.manifold import trustworthiness

    rng = np.random.default_rng(12)
    centers = rng.normal(0.0, 8.0, size=(3, 10))
    points, _ = gaussian_blobs(60, centers, 1.0, seed=12)
    out = reduce(points, ReductionParams(
        n_neighbors=15, target_dim=2, n_epochs=150, metric="euclidean", seed=42
    ))
    score = trustworthiness(points, out, n_neighbors=15)
    assert score >= 0.90


def test_params_validation():
    with pytest.raises(ParameterError):
        ReductionParams(n_neighbors=1).validate()
    with pytest.raises(ParameterError):
        ReductionParams(metric="manhattan").validate()
    with pytest.raises(ParameterError):
        ReductionParams(min_dist=0.0).validate()
    with pytest.raises(ParameterError):
        ReductionParams(n_epochs=0).validate()
