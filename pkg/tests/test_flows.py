import itertools
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_from_plan
from intentflow.errors import (
    MissingAssignmentError,
    ParameterError,
    UndefinedScoreError,
    ValidationError,
)
from intentflow.flows import (
    SequenceDB,
    SequentialPattern,
    build_sequence_db,
    frequent,
    topk,
)


def is_subsequence(pattern, seq):
    it = iter(seq)
    return all(any(s == p for s in it) for p in pattern)


def greedy_count(pattern, seq):
    count = 0
    i = 0
    while True:
        for sym in pattern:
            while i < len(seq) and seq[i] != sym:
                i += 1
            if i == len(seq):
                return count
            i += 1
        count += 1


def oracle_frequent(db, min_support, min_len, max_len, count):
    """Enumerate every pattern over the alphabet and count its support."""
    alphabet = sorted({s for seq in db.sequences for s in seq})
    out = []
    for length in range(min_len, max_len + 1):
        for pattern in itertools.product(alphabet, repeat=length):
            if count == "sequences":
                support = sum(
                    1 for seq in db.sequences if is_subsequence(pattern, seq)
                )
            else:
                support = sum(greedy_count(pattern, seq) for seq in db.sequences)
            if support >= min_support:
                out.append(SequentialPattern(pattern, support))
    out.sort(key=lambda e: (-e.support, len(e.pattern), e.pattern))
    return out


def test_single_sequence_hand_case():
    db = SequenceDB(sequences=[(1, 2, 1, 2)])
    got = frequent(db, min_support=1, max_len=2)
    by_pattern = {p.pattern: p.support for p in got}
    assert by_pattern[(1,)] == 1
    assert by_pattern[(1, 2)] == 1
    occ = {p.pattern: p.support for p in frequent(db, 1, max_len=2, count="occurrences")}
    assert occ[(1,)] == 2
    assert occ[(2,)] == 2
    assert occ[(1, 2)] == 2  # greedy pairs (0,1) and (2,3)
    assert occ[(2, 1)] == 1
    assert occ[(1, 1)] == 1
    assert occ[(2, 2)] == 1


def test_repeat_run_occurrences_are_non_overlapping():
    db = SequenceDB(sequences=[(7, 7, 7, 7, 7)])
    occ = {p.pattern: p.support for p in frequent(db, 1, max_len=3, count="occurrences")}
    assert occ[(7,)] == 5
    assert occ[(7, 7)] == 2
    assert occ[(7, 7, 7)] == 1


def test_support_counts_sequences_once():
    db = SequenceDB(sequences=[(3, 3, 3), (3,), (1,)])
    got = {p.pattern: p.support for p in frequent(db, 1, max_len=1)}
    assert got[(3,)] == 2
    assert got[(1,)] == 1


def test_ordering_support_then_length_then_lex():
    db = SequenceDB(sequences=[(1, 2), (1, 2), (2,)])
    got = frequent(db, min_support=1, max_len=2)
    assert [p.pattern for p in got] == [(2,), (1,), (1, 2)]
    assert [p.support for p in got] == [3, 2, 2]


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.lists(st.integers(0, 3), min_size=1, max_size=8).map(tuple),
        min_size=1,
        max_size=8,
    ),
    st.integers(1, 4),
    st.sampled_from(["sequences", "occurrences"]),
)
def test_frequent_matches_exhaustive_oracle(seqs, min_support, count):
    db = SequenceDB(sequences=seqs)
    got = frequent(db, min_support, min_len=1, max_len=3, count=count)
    want = oracle_frequent(db, min_support, 1, 3, count)
    assert got == want


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.lists(st.integers(0, 3), min_size=1, max_size=8).map(tuple),
        min_size=1,
        max_size=8,
    ),
    st.integers(1, 12),
    st.sampled_from(["sequences", "occurrences"]),
)
def test_topk_is_head_of_full_ranking(seqs, k, count):
    db = SequenceDB(sequences=seqs)
    got = topk(db, k, min_len=1, max_len=3, count=count)
    want = oracle_frequent(db, 1, 1, 3, count)[:k]
    assert got == want


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.lists(st.integers(0, 2), min_size=1, max_size=8).map(tuple),
        min_size=1,
        max_size=6,
    ),
    st.sampled_from(["sequences", "occurrences"]),
)
def test_support_is_anti_monotone(seqs, count):
    db = SequenceDB(sequences=seqs)
    support = {
        p.pattern: p.support for p in frequent(db, 1, max_len=3, count=count)
    }
    for pattern, sup in support.items():
        if len(pattern) > 1:
            assert sup <= support[pattern[:-1]]


def test_length_bounds():
    db = SequenceDB(sequences=[(1, 2, 3)])
    got = frequent(db, 1, min_len=2, max_len=2)
    assert all(len(p.pattern) == 2 for p in got)
    assert frequent(db, 1, min_len=4, max_len=4) == []


def test_parameter_validation():
    db = SequenceDB(sequences=[(1,)])
    with pytest.raises(ParameterError):
        frequent(db, 0)
    with pytest.raises(ParameterError):
        frequent(db, 1, min_len=0)
    with pytest.raises(ParameterError):
        frequent(db, 1, min_len=3, max_len=2)
    with pytest.raises(ParameterError):
        topk(db, 0)
    with pytest.raises(ValidationError):
        frequent(db, 1, count="votes")


def _fake_result(labels, memberships=None):
    labels = np.asarray(labels)
    if memberships is None:
        k = int(labels.max()) + 1 if labels.size and labels.max() >= 0 else 0
        memberships = np.zeros((len(labels), k))
        for i, lab in enumerate(labels):
            if lab >= 0:
                memberships[i, lab] = 1.0
    else:
        memberships = np.asarray(memberships)
        k = memberships.shape[1]
    return SimpleNamespace(labels=labels, memberships=memberships, k=k)


def _two_dialogue_corpus():
    return corpus_from_plan(
        {
            "d1": [
                ("user", "find a hotel", ["hotel"], ["inform"]),
                ("system", "sure", ["hotel"], ["inform"]),
                ("user", "book it", ["hotel"], ["book"]),
            ],
            "d2": [
                ("user", "restaurant please", ["restaurant"], ["inform"]),
                ("system", "done", ["restaurant"], ["book"]),
            ],
        }
    )


def _keys_for(corpus):
    from intentflow.corpus import iter_utterances

    return [key.canonical() for key, _ in iter_utterances(corpus)]


def test_build_sequence_db_hard_labels():
    corpus = _two_dialogue_corpus()
    keys = _keys_for(corpus)
    result = _fake_result([0, 0, 1, 2, -1])
    db = build_sequence_db(result, corpus, keys)
    assert db.dialogue_ids == ["d1", "d2"]
    assert db.sequences == [(0, 0, 1), (2,)]

    with_noise = build_sequence_db(result, corpus, keys, include_noise=True)
    assert with_noise.sequences == [(0, 0, 1), (2, -1)]

    collapsed = build_sequence_db(result, corpus, keys, collapse_repeats=True)
    assert collapsed.sequences == [(0, 1), (2,)]


def test_build_sequence_db_soft_argmax():
    corpus = _two_dialogue_corpus()
    keys = _keys_for(corpus)
    memberships = np.array(
        [
            [0.9, 0.1],
            [0.2, 0.8],
            [0.6, 0.4],
            [0.1, 0.9],
            [0.5, 0.5],  # argmax takes the first on ties
        ]
    )
    result = _fake_result([0, 1, 0, 1, -1], memberships)
    db = build_sequence_db(result, corpus, keys, source="soft_argmax")
    assert db.sequences == [(0, 1, 0), (1, 0)]


def test_build_sequence_db_all_noise_dialogue_is_omitted():
    corpus = _two_dialogue_corpus()
    keys = _keys_for(corpus)
    result = _fake_result([-1, -1, -1, 0, 0])
    db = build_sequence_db(result, corpus, keys)
    assert db.dialogue_ids == ["d2"]
    assert db.sequences == [(0, 0)]


def test_build_sequence_db_guards():
    corpus = _two_dialogue_corpus()
    keys = _keys_for(corpus)
    result = _fake_result([0, 0, 1, 2, -1])
    with pytest.raises(ValidationError):
        build_sequence_db(result, corpus, keys, source="softmax")
    with pytest.raises(MissingAssignmentError):
        build_sequence_db(result, corpus, keys[:-1])
    all_noise = _fake_result([-1] * 5)
    with pytest.raises(UndefinedScoreError):
        build_sequence_db(all_noise, corpus, keys, source="soft_argmax")
