"""Nonlinear dimensionality reduction for utterance embeddings.

Exact k-nearest-neighbour graph, a fuzzy simplicial weighting of the
neighbourhood distances, and a low-dimensional layout optimized by
negative-sampling SGD. The construction is intentionally simple and fully
deterministic for a given seed: exact neighbours (no approximate index),
single-threaded optimization, fixed sampling order.

Defaults suit pre-clustering reduction (target_dim=5); 2-d layouts for
plotting use the same code path with target_dim=2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg

from .errors import ParameterError

SMOOTH_TOL = 1e-5
SMOOTH_MAX_ITER = 64
BANDWIDTH_FLOOR = 1e-3


@dataclass
class ReductionParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int = 200
    target_dim: int = 5
    metric: str = "cosine"
    seed: int = 42
    spread: float = 1.0
    negative_sample_rate: int = 5
    repulsion_strength: float = 1.0
    learning_rate: float = 1.0

    def validate(self) -> None:
        if self.n_neighbors < 2:
            raise ParameterError("n_neighbors must be >= 2")
        if self.target_dim < 1:
            raise ParameterError("target_dim must be >= 1")
        if self.n_epochs < 1:
            raise ParameterError("n_epochs must be >= 1")
        if not 0.0 < self.min_dist < self.spread * 3:
            raise ParameterError("min_dist must be in (0, 3*spread)")
        if self.metric not in ("euclidean", "cosine"):
            raise ParameterError(f"unknown metric {self.metric!r}")
        if self.negative_sample_rate < 0 or self.learning_rate <= 0:
            raise ParameterError("bad optimizer parameters")


@dataclass
class NeighborGraph:
    """Exact k-NN: row i holds i's neighbours by ascending distance."""

    indices: np.ndarray  # (n, k) int64, self excluded
    distances: np.ndarray  # (n, k) float64, sorted ascending


def _pairwise_block(block: np.ndarray, points: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        sq = (
            (block * block).sum(axis=1)[:, None]
            + (points * points).sum(axis=1)[None, :]
            - 2.0 * block @ points.T
        )
        return np.sqrt(np.maximum(sq, 0.0))
    # cosine distance; zero-norm rows sit at distance 1 from everything
    def unit(x):
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)

    d = 1.0 - unit(block) @ unit(points).T
    return np.clip(d, 0.0, 2.0)


def knn_graph(
    points: np.ndarray, n_neighbors: int, metric: str = "euclidean"
) -> NeighborGraph:
    """Exact k nearest neighbours, ties broken towards the lower index."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= n_neighbors <= n - 1:
        raise ParameterError(f"n_neighbors={n_neighbors} needs 2 <= k+1 <= n={n}")
    if not np.all(np.isfinite(points)):
        raise ParameterError("points must be finite")
    indices = np.empty((n, n_neighbors), dtype=np.int64)
    distances = np.empty((n, n_neighbors), dtype=np.float64)
    chunk = max(1, min(n, 2**22 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d = _pairwise_block(points[start:stop], points, metric)
        for r in range(stop - start):
            d[r, start + r] = np.inf  # never one's own neighbour
        order = np.argsort(d, axis=1, kind="stable")[:, :n_neighbors]
        indices[start:stop] = order
        distances[start:stop] = np.take_along_axis(d, order, axis=1)
    return NeighborGraph(indices=indices, distances=distances)


def smooth_bandwidths(distances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (rho, sigma) normalizing neighbour distances.

    rho is the distance to the nearest neighbour. sigma solves

        sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)

    by bisection to within 1e-5 (at most 64 iterations), with sigma floored
    at 1e-3 so all-equal distance rows stay well defined.
    """
    distances = np.asarray(distances, dtype=np.float64)
    n, k = distances.shape
    rho = distances[:, 0].copy()
    target = np.log2(k)

    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    shifted = np.maximum(distances - rho[:, None], 0.0)
    for _ in range(SMOOTH_MAX_ITER):
        psum = np.exp(-shifted / mid[:, None]).sum(axis=1)
        err = psum - target
        undone = np.abs(err) >= SMOOTH_TOL
        if not undone.any():
            break
        high = undone & (err > 0)
        low = undone & ~high
        hi[high] = mid[high]
        mid[high] = (lo[high] + hi[high]) / 2.0
        lo[low] = mid[low]
        unbounded = low & np.isinf(hi)
        mid[unbounded] = mid[unbounded] * 2.0
        bounded = low & ~np.isinf(hi)
        mid[bounded] = (lo[bounded] + hi[bounded]) / 2.0
    return rho, np.maximum(mid, BANDWIDTH_FLOOR)


def fuzzy_graph(knn: NeighborGraph) -> scipy.sparse.csr_matrix:
    """Symmetric fuzzy weights: w = a + b - a*b over directed memberships."""
    n, k = knn.indices.shape
    rho, sigma = smooth_bandwidths(knn.distances)
    w = np.exp(-np.maximum(knn.distances - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    directed = scipy.sparse.coo_matrix(
        (w.ravel(), (rows, knn.indices.ravel())), shape=(n, n)
    ).tocsr()
    transpose = directed.T.tocsr()
    sym = directed + transpose - directed.multiply(transpose)
    sym.eliminate_zeros()
    return sym.tocsr()


def fit_ab(spread: float = 1.0, min_dist: float = 0.1) -> tuple[float, float]:
    """Least-squares (a, b) for the low-dimensional kernel 1/(1 + a d^2b).

    Fit against the target curve that is 1 below min_dist and decays as
    exp(-(d - min_dist)/spread) beyond it.
    """
    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    (a, b), _ = scipy.optimize.curve_fit(curve, xv, yv)
    return float(a), float(b)


def _spectral_init(
    graph: scipy.sparse.csr_matrix, dim: int, rng: np.random.Generator
) -> np.ndarray | None:
    """Eigenvectors of the normalized graph Laplacian, or None on failure."""
    n = graph.shape[0]
    k = dim + 1
    if k >= n:
        return None
    deg = np.asarray(graph.sum(axis=1)).ravel()
    deg[deg == 0] = 1.0
    inv_sqrt = scipy.sparse.diags(1.0 / np.sqrt(deg))
    lap = scipy.sparse.identity(n, format="csr") - inv_sqrt @ graph @ inv_sqrt
    try:
        if n <= 512:
            vals, vecs = np.linalg.eigh(lap.toarray())
        else:
            vals, vecs = scipy.sparse.linalg.eigsh(
                lap,
                k,
                which="SM",
                tol=1e-4,
                v0=np.full(n, 1.0 / np.sqrt(n)),
                maxiter=n * 5,
                ncv=min(n - 1, max(2 * k + 1, 20)),
            )
    except Exception:
        return None
    order = np.argsort(vals)
    coords = vecs[:, order[1 : dim + 1]]
    if coords.shape[1] < dim or not np.all(np.isfinite(coords)):
        return None
    scale = np.abs(coords).max()
    if scale == 0:
        return None
    coords = coords * (10.0 / scale)
    return coords + rng.normal(0.0, 1e-4, coords.shape)


def _optimize_layout(
    coords: np.ndarray,
    heads: np.ndarray,
    tails: np.ndarray,
    intervals: np.ndarray,
    params: ReductionParams,
    a: float,
    b: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Negative-sampling SGD with per-edge sampling intervals.

    Each directed edge fires whenever its schedule comes due; the attractive
    update moves both endpoints and each firing draws a fixed number of
    uniform negative samples that repel the head only. Gradient components
    clip to [-4, 4]; the learning rate decays linearly to zero.
    """
    n = coords.shape[0]
    gamma = params.repulsion_strength
    next_due = intervals.copy()
    for epoch in range(params.n_epochs):
        alpha = params.learning_rate * (1.0 - epoch / float(params.n_epochs))
        due = next_due <= epoch
        if due.any():
            h = heads[due]
            t = tails[due]
            delta = coords[h] - coords[t]
            d2 = (delta * delta).sum(axis=1)
            coeff = np.zeros_like(d2)
            pos = d2 > 0
            coeff[pos] = (-2.0 * a * b * d2[pos] ** (b - 1.0)) / (
                a * d2[pos] ** b + 1.0
            )
            grad = np.clip(coeff[:, None] * delta, -4.0, 4.0)
            np.add.at(coords, h, alpha * grad)
            np.add.at(coords, t, -alpha * grad)
            next_due[due] += intervals[due]

            for _ in range(params.negative_sample_rate):
                neg = rng.integers(0, n, size=h.shape[0])
                delta = coords[h] - coords[neg]
                d2 = (delta * delta).sum(axis=1)
                coeff = np.zeros_like(d2)
                pos = d2 > 0
                coeff[pos] = (2.0 * gamma * b) / (
                    (0.001 + d2[pos]) * (a * d2[pos] ** b + 1.0)
                )
                # coincident non-self pairs get the maximal push apart
                grad = np.where(
                    coeff[:, None] > 0,
                    np.clip(coeff[:, None] * delta, -4.0, 4.0),
                    4.0,
                )
                grad[neg == h] = 0.0
                np.add.at(coords, h, alpha * grad)
        if __debug__:
            assert np.all(np.isfinite(coords)), "non-finite layout coordinate"
    return coords


def reduce(points: np.ndarray, params: ReductionParams) -> np.ndarray:
    """Embed ``points`` into ``params.target_dim`` dimensions.

    Deterministic for fixed inputs and seed. Returns float64 (n, target_dim).
    """
    params.validate()
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ParameterError("points must be a 2-d array")
    n = points.shape[0]
    if n <= params.n_neighbors:
        raise ParameterError(
            f"need more points ({n}) than n_neighbors ({params.n_neighbors})"
        )

    knn = knn_graph(points, params.n_neighbors, params.metric)
    graph = fuzzy_graph(knn)
    a, b = fit_ab(params.spread, params.min_dist)
    rng = np.random.default_rng(params.seed)

    coords = _spectral_init(graph, params.target_dim, rng)
    if coords is None:
        coords = rng.uniform(-10.0, 10.0, size=(n, params.target_dim))
    coords = np.ascontiguousarray(coords, dtype=np.float64)

    coo = graph.tocoo()
    weights = coo.data
    keep = weights >= weights.max() / float(params.n_epochs)
    heads = coo.row[keep].astype(np.int64)
    tails = coo.col[keep].astype(np.int64)
    intervals = weights.max() / weights[keep]  # epochs between firings

    return _optimize_layout(coords, heads, tails, intervals, params, a, b, rng)
