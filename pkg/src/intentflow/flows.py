"""Frequent intent flows: prefix-projected sequential pattern mining.

Each dialogue becomes one sequence of cluster ids in turn order; a pattern
is a (not necessarily contiguous) subsequence. Default support counts the
sequences containing a pattern at least once; the "occurrences" variant
counts greedy non-overlapping matches, so one long dialogue can contribute
several. Both are anti-monotone, which is what lets the prefix-growth
search prune.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, iter_utterances
from .errors import (
    MissingAssignmentError,
    ParameterError,
    UndefinedScoreError,
    ValidationError,
)

COUNT_SEMANTICS = ("sequences", "occurrences")
SOURCES = ("hard", "soft_argmax")


@dataclass
class SequenceDB:
    sequences: list[tuple[int, ...]]
    dialogue_ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sequences)


@dataclass(frozen=True)
class SequentialPattern:
    pattern: tuple[int, ...]
    support: int


def build_sequence_db(
    result,
    corpus: Corpus,
    keys: list[str],
    source: str = "hard",
    include_noise: bool = False,
    collapse_repeats: bool = False,
) -> SequenceDB:
    """Dialogue-order cluster-id sequences for every corpus dialogue.

    ``keys[i]`` names the utterance behind result row i; every corpus
    utterance must be covered. ``source="soft_argmax"`` assigns each point
    its strongest soft membership (no noise); with "hard" labels, noise
    turns are dropped unless ``include_noise``. ``collapse_repeats`` merges
    consecutive equal ids. Dialogues left empty are omitted.
    """
    if source not in SOURCES:
        raise ValidationError(f"unknown source {source!r}")
    if source == "soft_argmax":
        if result.k == 0:
            raise UndefinedScoreError("soft_argmax needs at least one cluster")
        labels = np.argmax(result.memberships, axis=1)
    else:
        labels = result.labels
    row_for = {key: i for i, key in enumerate(keys)}

    sequences: list[tuple[int, ...]] = []
    dialogue_ids: list[str] = []
    current: list[int] = []
    current_id: str | None = None

    def flush():
        if current_id is not None and current:
            sequences.append(tuple(current))
            dialogue_ids.append(current_id)

    for key, utt in iter_utterances(corpus):
        if utt.dialogue_id != current_id:
            flush()
            current_id = utt.dialogue_id
            current = []
        row = row_for.get(key.canonical())
        if row is None:
            raise MissingAssignmentError(
                f"utterance {key.canonical()!r} has no cluster assignment"
            )
        label = int(labels[row])
        if label == -1 and not include_noise:
            continue
        if collapse_repeats and current and current[-1] == label:
            continue
        current.append(label)
    flush()
    return SequenceDB(sequences=sequences, dialogue_ids=dialogue_ids)


def _greedy_occurrences(pattern: tuple[int, ...], seq: tuple[int, ...]) -> int:
    """Number of greedy leftmost non-overlapping subsequence matches."""
    count = 0
    pos = 0
    n = len(seq)
    while True:
        j = 0
        while pos < n and j < len(pattern):
            if seq[pos] == pattern[j]:
                j += 1
            pos += 1
        if j == len(pattern):
            count += 1
        else:
            return count


def _pattern_order(entry: SequentialPattern):
    return (-entry.support, len(entry.pattern), entry.pattern)


def _check_bounds(min_len: int, max_len: int | None) -> None:
    if min_len < 1:
        raise ParameterError("min_len must be >= 1")
    if max_len is not None and max_len < min_len:
        raise ParameterError("max_len must be >= min_len")


class _Miner:
    """Shared prefix-growth machinery for threshold and top-k mining."""

    def __init__(self, db: SequenceDB, count: str):
        if count not in COUNT_SEMANTICS:
            raise ValidationError(f"unknown count semantics {count!r}")
        self.sequences = db.sequences
        self.count = count

    def _extensions(self, projection: list[tuple[int, int]]):
        """symbol -> projected positions (first occurrence per sequence)."""
        occ: dict[int, list[tuple[int, int]]] = {}
        for seq_idx, pos in projection:
            seq = self.sequences[seq_idx]
            seen: set[int] = set()
            for p in range(pos, len(seq)):
                s = seq[p]
                if s not in seen:
                    seen.add(s)
                    occ.setdefault(s, []).append((seq_idx, p + 1))
        return occ

    def _support(self, pattern: tuple[int, ...], projection) -> int:
        if self.count == "sequences":
            return len(projection)  # one projected entry per sequence
        return sum(
            _greedy_occurrences(pattern, self.sequences[seq_idx])
            for seq_idx, _ in projection
        )

    def initial_projection(self) -> list[tuple[int, int]]:
        return [(i, 0) for i in range(len(self.sequences))]


def frequent(
    db: SequenceDB,
    min_support: int,
    min_len: int = 1,
    max_len: int | None = None,
    count: str = "sequences",
) -> list[SequentialPattern]:
    """Every pattern with support >= min_support and length in bounds.

    Sorted by descending support, then ascending length, then
    lexicographically.
    """
    if min_support < 1:
        raise ParameterError("min_support must be >= 1")
    _check_bounds(min_len, max_len)
    miner = _Miner(db, count)
    found: list[SequentialPattern] = []

    def grow(prefix: tuple[int, ...], projection) -> None:
        for symbol, nxt in sorted(miner._extensions(projection).items()):
            pattern = prefix + (symbol,)
            support = miner._support(pattern, nxt)
            if support < min_support:
                continue
            if len(pattern) >= min_len:
                found.append(SequentialPattern(pattern, support))
            if max_len is None or len(pattern) < max_len:
                grow(pattern, nxt)

    grow((), miner.initial_projection())
    found.sort(key=_pattern_order)
    return found


def topk(
    db: SequenceDB,
    k: int,
    min_len: int = 1,
    max_len: int | None = None,
    count: str = "sequences",
) -> list[SequentialPattern]:
    """The k best patterns under the same ordering as ``frequent``.

    Depth-first growth with an adaptive support threshold: once k
    candidates are known, branches that cannot reach the running k-th
    support are pruned (support is anti-monotone under extension).
    """
    import heapq

    if k < 1:
        raise ParameterError("k must be >= 1")
    _check_bounds(min_len, max_len)
    miner = _Miner(db, count)
    collected: list[SequentialPattern] = []
    kth: list[int] = []  # min-heap of the k best supports seen

    def threshold() -> int:
        return kth[0] if len(kth) == k else 1

    def grow(prefix: tuple[int, ...], projection) -> None:
        scored = []
        for symbol, nxt in miner._extensions(projection).items():
            pattern = prefix + (symbol,)
            scored.append((miner._support(pattern, nxt), symbol, pattern, nxt))
        scored.sort(key=lambda t: (-t[0], t[1]))
        for support, _, pattern, nxt in scored:
            if support < threshold():
                break  # the rest only have smaller supports
            if len(pattern) >= min_len:
                collected.append(SequentialPattern(pattern, support))
                if len(kth) < k:
                    heapq.heappush(kth, support)
                elif support > kth[0]:
                    heapq.heapreplace(kth, support)
            if max_len is None or len(pattern) < max_len:
                grow(pattern, nxt)

    grow((), miner.initial_projection())
    collected.sort(key=_pattern_order)
    return collected[:k]
