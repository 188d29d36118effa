"""Hierarchical density-based clustering with soft memberships.

The pipeline is the classic one: core distances -> mutual reachability ->
minimum spanning tree (Prim's over the dense graph) -> single-linkage
hierarchy -> condensed tree at min_cluster_size -> excess-of-mass cluster
selection. On top of the hard labels it derives per-point membership
probabilities, outlier scores, soft membership vectors against cluster
exemplars, per-cluster persistence, and a density-based relative validity
score used for parameter selection.

Density is expressed throughout as lambda = 1/distance, so clusters are
born at low lambda and lose points at higher lambda. A zero distance maps
to lambda = inf; the degenerate arithmetic this creates (duplicate points)
is guarded explicitly rather than left to IEEE rules.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UndefinedScoreError, ValidationError

# Dense pairwise matrices are precomputed below this size; above it Prim's
# recomputes one distance row per step to keep memory at O(n).
_DENSE_LIMIT = 4096


@dataclass
class ClusterParams:
    min_cluster_size: int = 15
    min_samples: int | None = None  # defaults to min_cluster_size

    def resolved_min_samples(self) -> int:
        return self.min_cluster_size if self.min_samples is None else self.min_samples

    def validate(self) -> None:
        if self.min_cluster_size < 2:
            raise ParameterError("min_cluster_size must be >= 2")
        if self.resolved_min_samples() < 1:
            raise ParameterError("min_samples must be >= 1")


def core_distances(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance to each point's min_samples-th nearest neighbour (self excluded)."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= min_samples <= n - 1:
        raise ParameterError(f"min_samples={min_samples} needs 1 <= m <= n-1={n - 1}")
    out = np.empty(n, dtype=np.float64)
    chunk = max(1, min(n, 2**22 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d = _euclidean_block(points[start:stop], points)
        for r in range(stop - start):
            d[r, start + r] = np.inf
        out[start:stop] = np.partition(d, min_samples - 1, axis=1)[:, min_samples - 1]
    return out


def mutual_reachability(d_ab: float, core_a: float, core_b: float) -> float:
    """max of the direct distance and both core distances; symmetric."""
    return max(float(d_ab), float(core_a), float(core_b))


def mutual_reachability_matrix(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Dense mutual-reachability matrix (test/desk scale)."""
    points = np.asarray(points, dtype=np.float64)
    core = core_distances(points, min_samples)
    d = _euclidean_block(points, points)
    return np.maximum(np.maximum(d, core[:, None]), core[None, :])


def _euclidean_block(block: np.ndarray, points: np.ndarray) -> np.ndarray:
    sq = (
        (block * block).sum(axis=1)[:, None]
        + (points * points).sum(axis=1)[None, :]
        - 2.0 * block @ points.T
    )
    return np.sqrt(np.maximum(sq, 0.0))


def _mst_edges(points: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Prim's MST of the mutual-reachability graph; rows (u, v, weight).

    One distance row is materialized per step, so memory stays O(n)
    regardless of n; small inputs use a precomputed matrix instead.
    """
    n = points.shape[0]
    dense = _euclidean_block(points, points) if n <= _DENSE_LIMIT else None

    def mr_row(i: int) -> np.ndarray:
        row = dense[i] if dense is not None else np.sqrt(
            ((points - points[i]) ** 2).sum(axis=1)
        )
        return np.maximum(np.maximum(row, core), core[i])

    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    source = np.zeros(n, dtype=np.int64)
    edges = np.empty((n - 1, 3), dtype=np.float64)
    current = 0
    in_tree[0] = True
    for step in range(n - 1):
        row = mr_row(current)
        better = (row < best) & ~in_tree
        best[better] = row[better]
        source[better] = current
        candidate = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidate))
        edges[step] = (source[nxt], nxt, best[nxt])
        in_tree[nxt] = True
        current = nxt
    return edges


def _single_linkage(edges: np.ndarray) -> np.ndarray:
    """Merge MST edges by ascending weight into a dendrogram.

    Output row i is (child_a, child_b, weight, size); the merge created by
    row i gets node id n+i, points are 0..n-1. Ties keep tree-growth order.
    """
    n = edges.shape[0] + 1
    order = np.argsort(edges[:, 2], kind="stable")
    parent = np.arange(2 * n - 1, dtype=np.int64)
    size = np.ones(2 * n - 1, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:  # path compression
            parent[x], x = root, parent[x]
        return root

    out = np.empty((n - 1, 4), dtype=np.float64)
    for i, e in enumerate(order):
        u, v, w = int(edges[e, 0]), int(edges[e, 1]), edges[e, 2]
        a, b = find(u), find(v)
        assert a != b, "MST edge inside one component"
        new = n + i
        out[i] = (a, b, w, size[a] + size[b])
        parent[a] = parent[b] = new
        size[new] = size[a] + size[b]
    return out


@dataclass
class CondensedTree:
    """Flat condensed hierarchy: each row records a child leaving a node.

    Children with fewer than min_cluster_size points leave as single points
    at lambda = 1/edge-weight; larger children split off as new cluster
    nodes. Points are ids < n_points, cluster nodes are contiguous ids from
    n_points (the root). Every point appears exactly once as a child.
    """

    parent: np.ndarray  # int64
    child: np.ndarray  # int64
    lam: np.ndarray  # float64
    size: np.ndarray  # int64
    n_points: int

    @property
    def root(self) -> int:
        return self.n_points

    def cluster_nodes(self) -> np.ndarray:
        """All cluster node ids, root included, ascending."""
        nodes = set(self.parent.tolist())
        nodes.update(c for c in self.child.tolist() if c >= self.n_points)
        return np.array(sorted(nodes), dtype=np.int64)

    def birth_lambda(self) -> dict[int, float]:
        births = {self.root: 0.0}
        mask = self.child >= self.n_points
        for c, l in zip(self.child[mask], self.lam[mask]):
            births[int(c)] = float(l)
        return births

    def death_lambda(self) -> dict[int, float]:
        deaths: dict[int, float] = {}
        for p, l in zip(self.parent, self.lam):
            deaths[int(p)] = max(deaths.get(int(p), 0.0), float(l))
        return deaths

    def stability(self) -> dict[int, float]:
        """Per-node excess of mass: sum over exits of (lambda_exit - birth).

        A child exiting at the same lambda the node was born at contributes
        zero, which also defines inf - inf as zero for duplicate-point
        degeneracies.
        """
        births = self.birth_lambda()
        birth_arr = np.array([births[int(p)] for p in self.parent])
        diff = np.where(self.lam == birth_arr, 0.0, self.lam - birth_arr)
        contrib = diff * self.size
        out: dict[int, float] = {node: 0.0 for node in births}
        for p, c in zip(self.parent, contrib):
            out[int(p)] += float(c)
        return out

    def cluster_children(self) -> dict[int, list[int]]:
        kids: dict[int, list[int]] = {}
        mask = self.child >= self.n_points
        for p, c in zip(self.parent[mask], self.child[mask]):
            kids.setdefault(int(p), []).append(int(c))
        return kids

    def point_exits(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(point, node it fell from, lambda) for every point row."""
        mask = self.child < self.n_points
        return self.child[mask], self.parent[mask], self.lam[mask]


def _bfs_hierarchy(hierarchy: np.ndarray, start: int) -> list[int]:
    n = hierarchy.shape[0] + 1
    out = []
    queue = deque([start])
    while queue:
        node = queue.popleft()
        out.append(node)
        if node >= n:
            queue.append(int(hierarchy[node - n, 0]))
            queue.append(int(hierarchy[node - n, 1]))
    return out


def condense_tree(hierarchy: np.ndarray, min_cluster_size: int) -> CondensedTree:
    """Collapse a single-linkage dendrogram at min_cluster_size."""
    n = hierarchy.shape[0] + 1
    root = 2 * n - 2
    relabel = np.full(2 * n - 1, -1, dtype=np.int64)
    relabel[root] = n
    next_label = n + 1
    ignore = np.zeros(2 * n - 1, dtype=bool)
    parents: list[int] = []
    children: list[int] = []
    lams: list[float] = []
    sizes: list[int] = []

    def node_size(node: int) -> int:
        return 1 if node < n else int(hierarchy[node - n, 3])

    def shed(node: int, into: int, lam: float) -> None:
        for sub in _bfs_hierarchy(hierarchy, node):
            ignore[sub] = True
            if sub < n:
                parents.append(into)
                children.append(sub)
                lams.append(lam)
                sizes.append(1)

    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node < n or ignore[node]:
            continue
        left = int(hierarchy[node - n, 0])
        right = int(hierarchy[node - n, 1])
        dist = hierarchy[node - n, 2]
        lam = 1.0 / dist if dist > 0.0 else np.inf
        label = int(relabel[node])
        counts = (node_size(left), node_size(right))
        if counts[0] >= min_cluster_size and counts[1] >= min_cluster_size:
            for side, count in zip((left, right), counts):
                relabel[side] = next_label
                next_label += 1
                parents.append(label)
                children.append(int(relabel[side]))
                lams.append(lam)
                sizes.append(count)
                queue.append(side)
        elif counts[0] < min_cluster_size and counts[1] < min_cluster_size:
            shed(left, label, lam)
            shed(right, label, lam)
        elif counts[0] < min_cluster_size:
            relabel[right] = label
            queue.append(right)
            shed(left, label, lam)
        else:
            relabel[left] = label
            queue.append(left)
            shed(right, label, lam)

    return CondensedTree(
        parent=np.array(parents, dtype=np.int64),
        child=np.array(children, dtype=np.int64),
        lam=np.array(lams, dtype=np.float64),
        size=np.array(sizes, dtype=np.int64),
        n_points=n,
    )


def select_excess_of_mass(
    tree: CondensedTree, stability: dict[int, float]
) -> tuple[int, ...]:
    """Pick the flattening that maximizes total stability.

    Processing leaves upward, a node keeps its children's selection only if
    their combined stability strictly exceeds its own; otherwise the node is
    selected and every descendant deselected. The root is never a cluster.
    """
    kids = tree.cluster_children()
    nodes = sorted(stability, reverse=True)
    selected = {node: True for node in nodes}
    selected[tree.root] = False
    running = dict(stability)

    def descendants(node: int) -> list[int]:
        out = []
        queue = deque(kids.get(node, []))
        while queue:
            c = queue.popleft()
            out.append(c)
            queue.extend(kids.get(c, []))
        return out

    for node in nodes:
        if node == tree.root:
            continue
        child_total = sum(running[c] for c in kids.get(node, []))
        if child_total > running[node]:
            selected[node] = False
            running[node] = child_total
        else:
            for d in descendants(node):
                selected[d] = False
    return tuple(sorted(node for node, keep in selected.items() if keep))


@dataclass
class ClusterResult:
    labels: np.ndarray  # (n,) int64; -1 is noise
    probabilities: np.ndarray  # (n,) float64 in [0, 1]; 0 for noise
    memberships: np.ndarray  # (n, k) float64, rows sum to 1 when k > 0
    outlier_scores: np.ndarray  # (n,) float64 in [0, 1]
    persistence: np.ndarray  # (k,) float64 in [0, 1]
    relative_validity: float | None  # None when k == 0
    k: int
    tree: CondensedTree
    selected_nodes: tuple[int, ...]
    exemplars: list[np.ndarray] = field(default_factory=list)
    point_lambdas: np.ndarray | None = None

    def validate(self) -> None:
        n = self.labels.shape[0]
        present = set(np.unique(self.labels).tolist())
        if not present <= ({-1} | set(range(self.k))):
            raise ValidationError(f"labels outside -1..k-1: {sorted(present)}")
        if self.k > 0 and set(range(self.k)) - present:
            raise ValidationError("cluster ids must be contiguous from 0")
        for name, arr, span in (
            ("probabilities", self.probabilities, (0.0, 1.0)),
            ("outlier_scores", self.outlier_scores, (0.0, 1.0)),
            ("persistence", self.persistence, (0.0, 1.0)),
        ):
            if arr.size and (arr.min() < span[0] or arr.max() > span[1]):
                raise ValidationError(f"{name} outside {span}")
        if np.any(self.probabilities[self.labels == -1] != 0.0):
            raise ValidationError("noise points must have probability 0")
        if self.memberships.shape != (n, self.k):
            raise ValidationError("memberships must be (n, k)")
        if self.k > 0:
            sums = self.memberships.sum(axis=1)
            if np.abs(sums - 1.0).max() > 1e-6 or self.memberships.min() < 0:
                raise ValidationError("membership rows must sum to 1")
        if self.persistence.shape != (self.k,):
            raise ValidationError("persistence must have one entry per cluster")
        if self.relative_validity is not None and not (
            -1.0 <= self.relative_validity <= 1.0
        ):
            raise ValidationError("relative_validity outside [-1, 1]")


def _selected_ancestors(
    tree: CondensedTree, selected: tuple[int, ...]
) -> dict[int, int]:
    """Map every cluster node to its selected ancestor-or-self, else -1."""
    chosen = set(selected)
    parent_of: dict[int, int] = {}
    mask = tree.child >= tree.n_points
    for p, c in zip(tree.parent[mask], tree.child[mask]):
        parent_of[int(c)] = int(p)
    out: dict[int, int] = {}
    for node in tree.cluster_nodes():
        node = int(node)
        path = []
        cursor: int | None = node
        while cursor is not None and cursor not in out:
            if cursor in chosen:
                out[cursor] = cursor
                break
            path.append(cursor)
            cursor = parent_of.get(cursor)
        anchor = out.get(cursor, -1) if cursor is not None else -1
        for seen in path:
            out[seen] = anchor
    return out


def _cluster_exemplars(
    tree: CondensedTree, selected: tuple[int, ...]
) -> list[np.ndarray]:
    """Per cluster: members of its leaf nodes at the leaves' maximal lambda."""
    kids = tree.cluster_children()
    points, fell_from, lams = tree.point_exits()
    by_node: dict[int, list[int]] = {}
    for i, node in enumerate(fell_from):
        by_node.setdefault(int(node), []).append(i)
    out = []
    for s in selected:
        subtree = [s]
        queue = deque(kids.get(s, []))
        while queue:
            c = queue.popleft()
            subtree.append(c)
            queue.extend(kids.get(c, []))
        leaves = [c for c in subtree if not kids.get(c)]
        chosen: list[int] = []
        for leaf in leaves:
            rows = by_node.get(leaf, [])
            if not rows:
                continue
            top = max(lams[r] for r in rows)
            chosen.extend(int(points[r]) for r in rows if lams[r] == top)
        out.append(np.array(sorted(chosen), dtype=np.int64))
    return out


def soft_memberships(result: ClusterResult, points: np.ndarray) -> np.ndarray:
    """Distance-to-exemplar affinities scaled by inlierness, row-normalized.

    affinity(p, c) = 1/(1 + d(p, exemplars_c)) * (1 - outlier_score(p)),
    normalized to sum to one. Noise points get vectors too; a row that
    collapses to zero falls back to uniform. k = 0 yields an (n, 0) matrix.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if result.k == 0:
        return np.zeros((n, 0), dtype=np.float64)
    raw = np.empty((n, result.k), dtype=np.float64)
    for c, exemplar_idx in enumerate(result.exemplars):
        ex = points[exemplar_idx]
        d = np.sqrt(
            np.maximum(
                ((points[:, None, :] - ex[None, :, :]) ** 2).sum(axis=2), 0.0
            )
        ).min(axis=1)
        raw[:, c] = 1.0 / (1.0 + d)
    raw *= (1.0 - result.outlier_scores)[:, None]
    sums = raw.sum(axis=1)
    ok = sums > 0
    raw[ok] /= sums[ok, None]
    raw[~ok] = 1.0 / result.k
    return raw


def relative_validity(
    points: np.ndarray, labels: np.ndarray, min_samples: int = 5
) -> float:
    """Density-based validity of a labelling, in [-1, 1].

    Per cluster, sparseness is the largest edge of the minimum spanning
    tree over the cluster's points in mutual-reachability space, and
    separation is the smallest mutual-reachability distance to any other
    cluster's point; the cluster scores (sep - sparse)/max(sep, sparse)
    and the result is the cluster-size-weighted mean over non-noise
    points. Core distances are estimated once on the full point set. A
    single cluster scores 0 by convention; all-noise is undefined.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if points.shape[0] != labels.shape[0]:
        raise ValidationError("points and labels must align")
    ids = sorted(int(c) for c in np.unique(labels) if c >= 0)
    if not ids:
        raise UndefinedScoreError("validity undefined: all points are noise")
    if len(ids) == 1:
        return 0.0
    n = points.shape[0]
    core = core_distances(points, min(min_samples, n - 1))

    sparseness = {}
    for c in ids:
        idx = np.flatnonzero(labels == c)
        if idx.size == 1:
            sparseness[c] = 0.0
            continue
        sub = points[idx]
        mr = np.maximum(
            np.maximum(_euclidean_block(sub, sub), core[idx][:, None]),
            core[idx][None, :],
        )
        sparseness[c] = _dense_mst_max_edge(mr)

    separation = {c: np.inf for c in ids}
    clustered = labels >= 0
    chunk = max(1, min(n, 2**22 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block_labels = labels[start:stop]
        rows = np.flatnonzero(block_labels >= 0)
        if rows.size == 0:
            continue
        d = _euclidean_block(points[start:stop][rows], points)
        mr = np.maximum(np.maximum(d, core[None, :]), core[start:stop][rows][:, None])
        for ridx, i in enumerate(rows):
            c = int(block_labels[i])
            other = clustered & (labels != c)
            if other.any():
                separation[c] = min(separation[c], float(mr[ridx][other].min()))

    total = int(clustered.sum())
    score = 0.0
    for c in ids:
        size = int((labels == c).sum())
        sep, spar = separation[c], sparseness[c]
        denom = max(sep, spar)
        v = 0.0 if denom == 0 else (sep - spar) / denom
        score += (size / total) * v
    return float(score)


def _dense_mst_max_edge(matrix: np.ndarray) -> float:
    """Largest edge of Prim's MST over a dense distance matrix."""
    m = matrix.shape[0]
    in_tree = np.zeros(m, dtype=bool)
    best = np.full(m, np.inf)
    in_tree[0] = True
    current = 0
    largest = 0.0
    for _ in range(m - 1):
        row = matrix[current]
        better = (row < best) & ~in_tree
        best[better] = row[better]
        candidate = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidate))
        largest = max(largest, float(best[nxt]))
        in_tree[nxt] = True
        current = nxt
    return largest


def cluster(points: np.ndarray, params: ClusterParams) -> ClusterResult:
    """Full clustering of ``points``; see the module docstring for the path.

    min_samples is capped at n-1 so that small inputs degrade to the
    documented all-noise result instead of erroring; min_cluster_size
    larger than n yields k=0 with every point labelled noise.
    """
    params.validate()
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ParameterError("need a 2-d array with at least two points")
    if not np.all(np.isfinite(points)):
        raise ParameterError("points must be finite")
    n = points.shape[0]
    min_samples = min(params.resolved_min_samples(), n - 1)

    core = core_distances(points, min_samples)
    mst = _mst_edges(points, core)
    hierarchy = _single_linkage(mst)
    tree = condense_tree(hierarchy, params.min_cluster_size)
    stability = tree.stability()
    selected = select_excess_of_mass(tree, stability)
    k = len(selected)
    cluster_index = {node: i for i, node in enumerate(selected)}

    anchors = _selected_ancestors(tree, selected)
    labels = np.full(n, -1, dtype=np.int64)
    point_lambdas = np.zeros(n, dtype=np.float64)
    pts, fell_from, lams = tree.point_exits()
    fall_node = np.zeros(n, dtype=np.int64)
    for p, node, lam in zip(pts, fell_from, lams):
        anchor = anchors.get(int(node), -1)
        labels[p] = cluster_index.get(anchor, -1)
        point_lambdas[p] = lam
        fall_node[p] = node

    # lambda range actually reached inside each selected cluster
    lam_max = np.zeros(k, dtype=np.float64)
    for c in range(k):
        members = labels == c
        lam_max[c] = point_lambdas[members].max() if members.any() else 0.0

    probabilities = np.zeros(n, dtype=np.float64)
    for p in range(n):
        c = labels[p]
        if c == -1:
            continue
        lp, lm = point_lambdas[p], lam_max[c]
        if np.isinf(lp):
            probabilities[p] = 1.0
        elif lm == 0.0:
            probabilities[p] = 1.0
        elif np.isinf(lm):
            probabilities[p] = 0.0
        else:
            probabilities[p] = min(lp, lm) / lm

    # subtree-wide maximal point lambda per cluster node, for outlier scores
    subtree_max: dict[int, float] = {}
    for node, lam in zip(fell_from, lams):
        node = int(node)
        subtree_max[node] = max(subtree_max.get(node, 0.0), float(lam))
    kids = tree.cluster_children()
    for node in sorted(tree.cluster_nodes(), reverse=True):
        node = int(node)
        for child in kids.get(node, []):
            subtree_max[node] = max(
                subtree_max.get(node, 0.0), subtree_max.get(child, 0.0)
            )

    outlier_scores = np.zeros(n, dtype=np.float64)
    for p in range(n):
        lp = point_lambdas[p]
        node = int(fall_node[p])
        anchor = anchors.get(node, -1)
        reference = subtree_max.get(anchor if anchor != -1 else node, 0.0)
        if np.isinf(lp) or reference == 0.0:
            outlier_scores[p] = 0.0
        elif np.isinf(reference):
            outlier_scores[p] = 1.0
        else:
            outlier_scores[p] = min(max((reference - lp) / reference, 0.0), 1.0)

    persistence = np.zeros(k, dtype=np.float64)
    for c, node in enumerate(selected):
        size = int((labels == c).sum())
        stab = stability[node]
        lm = lam_max[c]
        if size == 0 or lm == 0.0:
            persistence[c] = 0.0
        elif np.isinf(lm):
            persistence[c] = 1.0 if np.isinf(stab) else 0.0
        else:
            persistence[c] = min(max(stab / (lm * size), 0.0), 1.0)

    result = ClusterResult(
        labels=labels,
        probabilities=probabilities,
        memberships=np.zeros((n, 0), dtype=np.float64),
        outlier_scores=outlier_scores,
        persistence=persistence,
        relative_validity=None,
        k=k,
        tree=tree,
        selected_nodes=selected,
        exemplars=_cluster_exemplars(tree, selected),
        point_lambdas=point_lambdas,
    )
    result.memberships = soft_memberships(result, points)
    if k >= 1:
        result.relative_validity = relative_validity(points, labels, min_samples)
    result.validate()
    return result
