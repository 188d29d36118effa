"""Class-based TF-IDF keywords and reference labels per cluster.

All member texts of a cluster are concatenated into one cluster-document.
A word scores tf(w, c) * log(1 + A / f(w)) in cluster c, where tf is the
count in c's document, f(w) the count across all cluster-documents, and A
the mean cluster-document token count. Texts pass through the masking
tokenizer, so entity tags surface as plain lowercase words; single-letter
tokens and a fixed 50-word stopword list (shipped as data) are dropped.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .errors import ValidationError
from .mask import tokenize

_STOPWORDS: frozenset[str] | None = None


def stopwords() -> frozenset[str]:
    global _STOPWORDS
    if _STOPWORDS is None:
        text = (
            resources.files("intentflow").joinpath("data/stopwords.txt").read_text()
        )
        _STOPWORDS = frozenset(text.split())
    return _STOPWORDS


def content_tokens(text: str) -> list[str]:
    """Masking-tokenizer tokens minus stopwords and single characters."""
    drop = stopwords()
    return [t for t in tokenize(text) if len(t) > 1 and t not in drop]


@dataclass
class ClusterSummary:
    cluster: int
    length: int
    persistence: float
    top_words: list[tuple[str, float]]
    reference_label: str


def top_words(
    cluster_texts: dict[int, list[str]], n_words: int = 5
) -> dict[int, list[tuple[str, float]]]:
    """Highest-scoring words per cluster; score ties break alphabetically."""
    if n_words < 1:
        raise ValidationError("n_words must be >= 1")
    tf: dict[int, Counter[str]] = {
        c: Counter(t for text in texts for t in content_tokens(text))
        for c, texts in cluster_texts.items()
    }
    overall: Counter[str] = Counter()
    for counts in tf.values():
        overall.update(counts)
    if not tf:
        return {}
    mean_tokens = sum(sum(c.values()) for c in tf.values()) / len(tf)

    out: dict[int, list[tuple[str, float]]] = {}
    for c, counts in tf.items():
        scored = [
            (word, count * math.log(1.0 + mean_tokens / overall[word]))
            for word, count in counts.items()
        ]
        scored.sort(key=lambda ws: (-ws[1], ws[0]))
        out[c] = scored[:n_words]
    return out


def reference_label(annotation_sets: list[frozenset[str]]) -> str:
    """Most frequent full annotation combination among members.

    A combination is the sorted set joined by spaces; members without
    annotations count as "(none)". Frequency ties break lexicographically.
    """
    if not annotation_sets:
        return "(none)"
    combos = Counter(
        " ".join(sorted(s)) if s else "(none)" for s in annotation_sets
    )
    top_count = max(combos.values())
    return min(c for c, n in combos.items() if n == top_count)


def summarize_clusters(
    labels,
    texts: list[str],
    annotation_sets: list[frozenset[str]],
    persistence,
    n_words: int = 5,
) -> list[ClusterSummary]:
    """One summary per cluster id 0..k-1; noise points take no part."""
    if not (len(labels) == len(texts) == len(annotation_sets)):
        raise ValidationError("labels, texts and annotations must align")
    k = len(persistence)
    members: dict[int, list[int]] = {c: [] for c in range(k)}
    for i, raw_label in enumerate(labels):
        label = int(raw_label)
        if label >= 0:
            members[label].append(i)
    words = top_words(
        {c: [texts[i] for i in idx] for c, idx in members.items() if idx},
        n_words=n_words,
    )
    return [
        ClusterSummary(
            cluster=c,
            length=len(members[c]),
            persistence=float(persistence[c]),
            top_words=words.get(c, []),
            reference_label=reference_label(
                [annotation_sets[i] for i in members[c]]
            ),
        )
        for c in range(k)
    ]
