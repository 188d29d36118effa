"""Extended BCubed scoring of cluster assignments against annotations.

Items carry a hard cluster id and a non-empty set of category labels
(utterances are frequently annotated with several domains or intents, so
the multiplicity-aware extended formulation is the default). For a pair of
items e, e' let C and L be their cluster and label sets; the pairwise
scores are

    precision(e, e') = min(|C & C'|, |L & L'|) / |C & C'|
    recall(e, e')    = min(|C & C'|, |L & L'|) / |L & L'|

averaged per item over the pairs that share a cluster (precision) or a
category (recall), always including the item itself, then averaged over
items. With hard clusterings C is a singleton, so the extension shows up
in recall. Item order never matters, and duplicating every item leaves all
scores unchanged.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, UtteranceKey
from .errors import UndefinedScoreError, ValidationError

NOISE_POLICIES = ("exclude", "singletons")
VARIANTS = ("extended", "classic-first-label")
LEVELS = ("domain", "intent")
MODES = ("hard", "soft_argmax")


@dataclass(frozen=True)
class LabeledItem:
    item_id: str
    cluster: int  # -1 marks noise
    categories: frozenset[str]


@dataclass
class BCubedScores:
    precision: float
    recall: float
    harmonic_mean: float
    n_items: int  # items actually scored, after the noise policy
    noise_policy: str
    variant: str


def bcubed(
    items: list[LabeledItem],
    noise_policy: str = "exclude",
    variant: str = "extended",
) -> BCubedScores:
    """Score a hard clustering; see the module docstring for the formulas.

    ``noise_policy`` decides what happens to items with cluster -1:
    "exclude" drops them, "singletons" gives each its own fresh cluster.
    ``variant="classic-first-label"`` first reduces every category set to
    its lexicographically smallest element (the classic single-label
    metric as a special case).
    """
    if noise_policy not in NOISE_POLICIES:
        raise ValidationError(f"unknown noise_policy {noise_policy!r}")
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    seen = set()
    for item in items:
        if not item.categories:
            raise ValidationError(f"item {item.item_id!r} has no categories")
        if item.item_id in seen:
            raise ValidationError(f"duplicate item id {item.item_id!r}")
        seen.add(item.item_id)

    if variant == "classic-first-label":
        items = [
            LabeledItem(i.item_id, i.cluster, frozenset({min(i.categories)}))
            for i in items
        ]

    if noise_policy == "exclude":
        items = [i for i in items if i.cluster != -1]
    else:
        fresh = max((i.cluster for i in items), default=-1) + 1
        relabeled = []
        for item in items:
            if item.cluster == -1:
                relabeled.append(LabeledItem(item.item_id, fresh, item.categories))
                fresh += 1
            else:
                relabeled.append(item)
        items = relabeled
    if not items:
        raise UndefinedScoreError("no items left to score")

    # Items with identical (cluster, categories) signatures are
    # interchangeable, so score signature groups weighted by multiplicity.
    groups: Counter[tuple[int, frozenset[str]]] = Counter()
    for item in items:
        groups[(item.cluster, item.categories)] += 1
    glist = [(c, labels, m) for (c, labels), m in groups.items()]
    cluster_totals: Counter[int] = Counter()
    for c, _, m in glist:
        cluster_totals[c] += m

    n = len(items)
    precision_total = 0.0
    recall_total = 0.0
    for c1, l1, m1 in glist:
        same_cluster_overlap = 0.0
        recall_num = 0.0
        sharing = 0.0
        for c2, l2, m2 in glist:
            overlap = len(l1 & l2)
            if overlap == 0:
                continue
            sharing += m2
            if c1 == c2:
                same_cluster_overlap += m2
                recall_num += m2 / overlap
        precision_total += m1 * (same_cluster_overlap / cluster_totals[c1])
        recall_total += m1 * (recall_num / sharing)

    precision = precision_total / n
    recall = recall_total / n
    harmonic = 2.0 * precision * recall / (precision + recall)
    return BCubedScores(
        precision=precision,
        recall=recall,
        harmonic_mean=harmonic,
        n_items=n,
        noise_policy=noise_policy,
        variant=variant,
    )


def evaluate_clustering(
    result,
    corpus: Corpus,
    keys: list[str],
    level: str = "domain",
    mode: str = "hard",
    noise_policy: str = "exclude",
    variant: str = "extended",
) -> BCubedScores:
    """BCubed scores for a ClusterResult against corpus annotations.

    ``keys[i]`` names the utterance behind result row i. ``level`` picks
    the annotation (domain or intent sets); every scored utterance must be
    annotated at that level. ``mode="hard"`` uses the labels as-is (noise
    handled by the policy); ``mode="soft_argmax"`` assigns every point,
    noise included, to its strongest soft membership.
    """
    if level not in LEVELS:
        raise ValidationError(f"unknown level {level!r}")
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}")
    if len(keys) != result.labels.shape[0]:
        raise ValidationError("keys must align with result rows")

    if mode == "soft_argmax":
        if result.k == 0:
            raise UndefinedScoreError("soft_argmax needs at least one cluster")
        labels = np.argmax(result.memberships, axis=1)
    else:
        labels = result.labels

    items = []
    for i, key_text in enumerate(keys):
        utt = corpus.utterance(UtteranceKey.parse(key_text))
        categories = utt.domains if level == "domain" else utt.intents
        if not categories:
            raise ValidationError(
                f"utterance {key_text!r} has no {level} annotation"
            )
        items.append(LabeledItem(key_text, int(labels[i]), categories))
    return bcubed(items, noise_policy=noise_policy, variant=variant)
