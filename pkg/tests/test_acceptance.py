"""Release gate: each test checks one headline guarantee end to end and
announces the verdict as an ``ACCEPTANCE <name>: PASS/FAIL`` line.

These deliberately re-test behavior covered piecemeal elsewhere; the point
is a single file whose output states whether the toolkit's contract holds.
"""

import itertools
import json
import time
from collections import Counter
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score
from sklearn.manifold import trustworthiness as sk_trustworthiness

from conftest import ACCEPTANCE_LINES, gaussian_blobs
from intentflow import clustering, flows, manifold
from intentflow.errors import UndefinedScoreError
from intentflow.evaluate import LabeledItem, bcubed
from intentflow.mask import DbFileSpec, build_gazetteer, mask_text
from intentflow.corpus import iter_utterances, load_corpus
from intentflow.pipeline import PipelineConfig, run_pipeline

REPO = Path(__file__).resolve().parent.parent
MINI = REPO / "data" / "mini"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        ACCEPTANCE_LINES.append(f"ACCEPTANCE {name}: FAIL")
        raise
    else:
        print(f"ACCEPTANCE {name}: PASS")
        ACCEPTANCE_LINES.append(f"ACCEPTANCE {name}: PASS")


def check_result_invariants(result, params, n):
    assert result.labels.shape == (n,)
    assert result.k >= 0
    non_noise = set(result.labels[result.labels >= 0].tolist())
    if result.k > 0:
        assert non_noise == set(range(result.k))
    else:
        assert non_noise == set()
    for label in range(result.k):
        assert np.sum(result.labels == label) >= params.min_cluster_size
    assert result.memberships.shape == (n, result.k)
    if result.k > 0:
        sums = result.memberships.sum(axis=1)
        assert np.all(np.abs(sums - 1.0) <= 1e-6)
    assert np.all(result.probabilities >= 0.0) and np.all(result.probabilities <= 1.0)
    assert np.all(result.outlier_scores >= 0.0) and np.all(result.outlier_scores <= 1.0)
    assert result.persistence.shape == (result.k,)
    assert np.all(result.persistence >= 0.0)


def test_hdbscan_blob_fixture():
    with criterion("hdbscan-fixture"):
        centers = np.zeros((3, 5))
        centers[1, 0] = 10.0
        centers[2, 1] = 10.0
        points, truth = gaussian_blobs(100, centers, scale=1.0, seed=11)
        start = time.perf_counter()
        result = clustering.cluster(
            points, clustering.ClusterParams(min_cluster_size=15, min_samples=5)
        )
        elapsed = time.perf_counter() - start
        assert result.k == 3
        assert adjusted_rand_score(truth, result.labels) >= 0.95
        assert np.mean(result.labels == -1) <= 0.10
        assert elapsed < 5.0


def test_hdbscan_invariants_on_random_data():
    with criterion("hdbscan-invariants"):
        rng = np.random.default_rng(20240818)
        for trial in range(50):
            n = int(rng.integers(20, 201))
            d = int(rng.integers(2, 7))
            if trial % 2 == 0:
                points = rng.normal(0.0, 1.0, (n, d))
            else:
                k_true = int(rng.integers(2, 5))
                centers = rng.uniform(-8.0, 8.0, (k_true, d))
                points = centers[rng.integers(0, k_true, n)] + rng.normal(
                    0.0, 0.5, (n, d)
                )
            params = clustering.ClusterParams(
                min_cluster_size=int(rng.integers(2, 21)),
                min_samples=int(rng.integers(1, 11)),
            )
            result = clustering.cluster(points, params)
            check_result_invariants(result, params, n)

        triples = np.random.default_rng(99).uniform(0.0, 50.0, (10_000, 3))
        for d_ab, ca, cb in triples:
            assert clustering.mutual_reachability(d_ab, ca, cb) == max(d_ab, ca, cb)


def test_bcubed_exactness():
    with criterion("bcubed-exactness"):
        items = [
            LabeledItem(f"u{i}", 0, frozenset({cat}))
            for i, cat in enumerate("AAABB")
        ]
        scores = bcubed(items)
        assert scores.precision == pytest.approx(0.52, abs=1e-9)
        assert scores.recall == pytest.approx(1.0, abs=1e-9)

        perfect = [
            LabeledItem("a", 0, frozenset({"A"})),
            LabeledItem("b", 0, frozenset({"A"})),
            LabeledItem("c", 1, frozenset({"B"})),
        ]
        p = bcubed(perfect)
        assert (p.precision, p.recall, p.harmonic_mean) == (1.0, 1.0, 1.0)

        mixed = [
            LabeledItem("a", 0, frozenset({"A"})),
            LabeledItem("b", 0, frozenset({"A", "B"})),
            LabeledItem("c", 0, frozenset({"C"})),
            LabeledItem("d", 1, frozenset({"B"})),
        ]
        doubled = mixed + [
            LabeledItem(item.item_id + "_copy", item.cluster, item.categories)
            for item in mixed
        ]
        one, two = bcubed(mixed), bcubed(doubled)
        assert one.precision == pytest.approx(two.precision, abs=1e-9)
        assert one.recall == pytest.approx(two.recall, abs=1e-9)


def subsequence_supports(db):
    """Support of every pattern, by exhaustive per-sequence enumeration."""
    support = Counter()
    for seq in db.sequences:
        seen = set()
        for length in range(1, len(seq) + 1):
            for positions in itertools.combinations(range(len(seq)), length):
                seen.add(tuple(seq[p] for p in positions))
        support.update(seen)
    return support


def test_prefixspan_matches_exhaustive_enumeration():
    with criterion("prefixspan-oracle"):
        rng = np.random.default_rng(4242)
        for trial in range(100):
            n_seq = int(rng.integers(1, 26))
            alphabet = int(rng.integers(2, 7))
            db = flows.SequenceDB(
                sequences=[
                    tuple(
                        int(s)
                        for s in rng.integers(0, alphabet, int(rng.integers(1, 9)))
                    )
                    for _ in range(n_seq)
                ]
            )
            min_support = 2 + trial % 4
            want = sorted(
                (
                    flows.SequentialPattern(p, s)
                    for p, s in subsequence_supports(db).items()
                    if s >= min_support
                ),
                key=lambda e: (-e.support, len(e.pattern), e.pattern),
            )
            assert flows.frequent(db, min_support) == want


def test_reduction_fidelity():
    with criterion("reduction-fidelity"):
        centers = np.zeros((3, 10))
        centers[1, 0] = 12.0
        centers[2, 1] = 12.0
        points, _ = gaussian_blobs(50, centers, scale=1.0, seed=5)
        params = manifold.ReductionParams(
            target_dim=2, n_neighbors=15, n_epochs=150, metric="euclidean", seed=3
        )
        coords = manifold.reduce(points, params)
        assert sk_trustworthiness(points, coords, n_neighbors=15) >= 0.90
        assert np.array_equal(coords, manifold.reduce(points, params))

        for fixture, metric in (
            (points, "euclidean"),
            (points, "cosine"),
            (np.random.default_rng(1).uniform(size=(40, 6)), "euclidean"),
        ):
            graph = manifold.knn_graph(fixture, n_neighbors=5, metric=metric)
            for i in range(len(fixture)):
                if metric == "euclidean":
                    dists = np.linalg.norm(fixture - fixture[i], axis=1)
                else:
                    norms = np.linalg.norm(fixture, axis=1) * np.linalg.norm(
                        fixture[i]
                    )
                    dists = 1.0 - (fixture @ fixture[i]) / norms
                order = sorted(
                    (d, j) for j, d in enumerate(dists) if j != i
                )[:5]
                assert [j for _, j in order] == graph.indices[i].tolist()


def test_relative_validity_fixture():
    with criterion("relative-validity"):
        centers = np.zeros((2, 4))
        centers[1, 0] = 20.0
        points, truth = gaussian_blobs(40, centers, scale=0.5, seed=7)
        good = clustering.relative_validity(points, truth)
        assert good > 0.5

        rng = np.random.default_rng(13)
        shuffled = rng.permutation(truth)
        assert clustering.relative_validity(points, shuffled) < 0.1

        for seed in range(20):
            labels = np.random.default_rng(seed).integers(-1, 3, len(points))
            try:
                value = clustering.relative_validity(points, labels)
            except UndefinedScoreError:
                continue
            assert -1.0 <= value <= 1.0


def test_masking_idempotence_and_examples():
    with criterion("masking-idempotence"):
        gazetteer = build_gazetteer(
            db_files=[DbFileSpec(path=str(MINI / "hotel_db.json"), fields={"name": "[HOTEL_NAME]"})]
        )
        assert (
            mask_text(gazetteer, "I want the Acorn Guest House")
            == "I want the [HOTEL_NAME]"
        )
        assert mask_text(gazetteer, "two of two") == "[CARDINAL] of [CARDINAL]"
        for text in ("I want the Acorn Guest House", "two of two"):
            once = mask_text(gazetteer, text)
            assert mask_text(gazetteer, once) == once

        corpus = load_corpus(MINI / "corpus.json")
        texts = [utt.text for _, utt in iter_utterances(corpus)]
        rng = np.random.default_rng(20240819)
        for idx in rng.integers(0, len(texts), 1000):
            once = mask_text(gazetteer, texts[idx])
            assert mask_text(gazetteer, once) == once


def _mini_config(out_dir):
    raw = json.loads((MINI / "config.json").read_text())
    raw["corpus"] = str(MINI / "corpus.json")
    raw["embeddings"] = {
        "matrix": str(MINI / "utterances.emb"),
        "keys": str(MINI / "utterances.keys"),
    }
    raw["mask"]["db_files"][0]["path"] = str(MINI / "hotel_db.json")
    raw["out_dir"] = str(out_dir)
    return PipelineConfig.from_dict(raw)


def test_pipeline_smoke(tmp_path):
    with criterion("pipeline-smoke"):
        out = tmp_path / "run"
        start = time.perf_counter()
        run_pipeline(_mini_config(out))
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0

        for name in (
            "grid.csv",
            "clusters.csv",
            "summary.csv",
            "flows.csv",
            "plot2d.csv",
            "manifest.json",
        ):
            assert (out / name).exists(), name

        manifest = json.loads((out / "manifest.json").read_text())
        best = manifest["best_cell"]
        assert best is not None
        grid_rows = (out / "grid.csv").read_text().splitlines()
        header = grid_rows[0].split(",")
        rows = [dict(zip(header, line.split(","))) for line in grid_rows[1:]]
        best_row = next(
            r
            for r in rows
            if int(r["min_samples"]) == best["min_samples"]
            and int(r["min_cluster_size"]) == best["min_cluster_size"]
        )
        assert best_row["best"] == "true"
        assert int(best_row["k"]) >= 2

        study = json.loads((out / "study_summary.json").read_text())["categories"]
        assert study["domain_intent"]["mean"] >= study["random"]["mean"]


def test_pipeline_determinism(tmp_path):
    with criterion("pipeline-determinism"):
        out1, out2 = tmp_path / "one", tmp_path / "two"
        run_pipeline(_mini_config(out1))
        run_pipeline(_mini_config(out2))
        m1 = json.loads((out1 / "manifest.json").read_text())
        m2 = json.loads((out2 / "manifest.json").read_text())
        assert m1["artifacts"] == m2["artifacts"]
        assert (out1 / "manifest.json").read_bytes() == (
            out2 / "manifest.json"
        ).read_bytes()
        for name in m1["artifacts"]:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
