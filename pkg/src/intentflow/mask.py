"""Gazetteer entity masking and the annotation/similarity sanity study.

Masking is deliberately dumb and deterministic: surface forms harvested from
database files (plus built-in numeral and place lexicons) are replaced by
bracketed tags with case-insensitive, token-boundary, longest-match-first,
non-overlapping, left-to-right matching. Tokens are maximal runs of
characters that are neither Unicode whitespace nor Unicode punctuation; the
same tokenizer is reused by the cluster summarizer so that tags like
``[CARDINAL]`` later surface as plain words.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Dialogue, Utterance, iter_utterances
from .embed import EmbeddingMatrix, cosine_similarity
from .errors import GazetteerError, ValidationError

_TAG_RE = re.compile(r"^\[[A-Z][A-Z0-9_]*\]$")


def _is_delimiter(ch: str) -> bool:
    return ch.isspace() or unicodedata.category(ch).startswith("P")


def tokenize_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) of each maximal non-delimiter run, left to right."""
    spans = []
    start = None
    for i, ch in enumerate(text):
        if _is_delimiter(ch):
            if start is not None:
                spans.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        spans.append((start, len(text)))
    return spans


def tokenize(text: str) -> list[str]:
    """Lowercased tokens of ``text``."""
    return [text[a:b].lower() for a, b in tokenize_spans(text)]


# Built-in lexicons. Numerals cover the written forms plus digit strings;
# places are a small fixed list of proper names (not compass areas).
_NUMERAL_WORDS = (
    "one two three four five six seven eight nine ten eleven twelve thirteen "
    "fourteen fifteen sixteen seventeen eighteen nineteen twenty thirty forty "
    "fifty sixty seventy eighty ninety hundred"
).split()
_NUMERAL_DIGITS = [str(i) for i in range(0, 101)]
_PLACE_NAMES = [
    "cambridge", "london", "birmingham", "peterborough", "stansted",
    "stevenage", "norwich", "ely", "broxbourne", "leicester",
    "bishops stortford", "kings lynn", "liverpool", "manchester",
    "oxford", "glasgow", "edinburgh",
]

BUILTIN_LEXICONS: dict[str, list[str]] = {
    "[CARDINAL]": _NUMERAL_WORDS + _NUMERAL_DIGITS,
    "[GPE]": _PLACE_NAMES,
}


@dataclass(frozen=True)
class DbFileSpec:
    """One database file plus its field-name -> tag harvest mapping."""

    path: str
    fields: dict[str, str] = field(default_factory=dict)


@dataclass
class Gazetteer:
    """Surface-form table: token tuple -> tag, plus a first-token index."""

    entries: dict[tuple[str, ...], str]
    tags: frozenset[str] = field(init=False)
    _index: dict[str, list[tuple[tuple[str, ...], str]]] = field(
        init=False, repr=False
    )

    def __post_init__(self):
        self.tags = frozenset(self.entries.values())
        index: dict[str, list] = defaultdict(list)
        for surface, tag in self.entries.items():
            index[surface[0]].append((surface, tag))
        for candidates in index.values():
            candidates.sort(key=lambda e: (-len(e[0]), e[1], e[0]))
        self._index = dict(index)

    def __len__(self) -> int:
        return len(self.entries)


def _validate_entry(surface: tuple[str, ...], tag: str, tags: Iterable[str]):
    if not _TAG_RE.match(tag):
        raise GazetteerError(f"tag {tag!r} is not of the form [UPPER_SNAKE]")
    if not surface:
        raise GazetteerError(f"empty surface form for tag {tag}")
    joined = " ".join(surface)
    for t in tags:
        # No surface form may collide with a tag, either verbatim or as the
        # tag's own tokenization; this is what makes masking idempotent.
        if joined == t.lower() or surface == tuple(tokenize(t)):
            raise GazetteerError(
                f"surface {joined!r} collides with tag {t}; masking "
                "would not be idempotent"
            )


def build_gazetteer(
    db_files: Sequence[DbFileSpec] = (),
    extra_lexicons: dict[str, Sequence[str]] | None = None,
    include_builtins: bool = True,
) -> Gazetteer:
    """Harvest surface forms from db files, extra lexicons and built-ins.

    DB files are JSON arrays of records; only string values of the fields
    named in each spec's mapping are harvested. The same surface form may
    be contributed many times with one tag, but two different tags for one
    surface is an error.
    """
    raw: list[tuple[str, str]] = []
    for spec in db_files:
        with open(spec.path, encoding="utf-8") as fh:
            records = json.load(fh)
        if not isinstance(records, list):
            raise GazetteerError(f"{spec.path}: expected a JSON array of records")
        for record in records:
            if not isinstance(record, dict):
                continue
            for fieldname, tag in spec.fields.items():
                value = record.get(fieldname)
                if isinstance(value, str) and value.strip():
                    raw.append((value, tag))
    for tag, words in (extra_lexicons or {}).items():
        for word in words:
            raw.append((word, tag))
    if include_builtins:
        for tag, words in BUILTIN_LEXICONS.items():
            for word in words:
                raw.append((word, tag))

    entries: dict[tuple[str, ...], str] = {}
    all_tags = {tag for _, tag in raw}
    for surface_text, tag in raw:
        surface = tuple(tokenize(surface_text))
        if not surface:
            continue  # surface was all punctuation
        _validate_entry(surface, tag, all_tags)
        if entries.get(surface, tag) != tag:
            raise GazetteerError(
                f"surface {' '.join(surface)!r} mapped to both "
                f"{entries[surface]} and {tag}"
            )
        entries[surface] = tag
    return Gazetteer(entries=entries)


def _frozen_ranges(text: str, tags: Iterable[str]) -> list[tuple[int, int]]:
    """Character ranges already occupied by a verbatim tag occurrence."""
    ranges = []
    for tag in tags:
        start = text.find(tag)
        while start != -1:
            ranges.append((start, start + len(tag)))
            start = text.find(tag, start + len(tag))
    return ranges


def mask_text(gazetteer: Gazetteer, text: str) -> str:
    """Replace every gazetteer match in ``text`` by its tag.

    Matching is case-insensitive and token-aligned; multi-token surfaces
    match runs of tokens separated by whitespace only. Existing tag
    occurrences are left untouched, so masking is idempotent. All
    characters outside matches are preserved verbatim.
    """
    spans = tokenize_spans(text)
    if not spans:
        return text
    tokens = [text[a:b].lower() for a, b in spans]
    frozen_ranges = _frozen_ranges(text, gazetteer.tags)
    frozen = [
        any(a < fr_end and fr_start < b for fr_start, fr_end in frozen_ranges)
        for a, b in spans
    ]

    out: list[str] = []
    copied = 0
    i = 0
    n = len(spans)
    while i < n:
        matched = False
        if not frozen[i]:
            for surface, tag in gazetteer._index.get(tokens[i], ()):
                width = len(surface)
                if i + width > n:
                    continue
                ok = True
                for offset in range(width):
                    j = i + offset
                    if frozen[j] or tokens[j] != surface[offset]:
                        ok = False
                        break
                    if offset and not text[spans[j - 1][1] : spans[j][0]].isspace():
                        ok = False  # tokens joined by punctuation do not match
                        break
                if not ok:
                    continue
                start = spans[i][0]
                end = spans[i + width - 1][1]
                out.append(text[copied:start])
                out.append(tag)
                copied = end
                i += width
                matched = True
                break
        if not matched:
            i += 1
    out.append(text[copied:])
    return "".join(out)


def mask_corpus(gazetteer: Gazetteer, corpus: Corpus) -> Corpus:
    """A new corpus with every utterance text masked; annotations kept."""
    masked = Corpus()
    for dialogue_id, dialogue in corpus.dialogues.items():
        turns = [
            Utterance(
                dialogue_id=t.dialogue_id,
                turn_index=t.turn_index,
                speaker=t.speaker,
                text=mask_text(gazetteer, t.text),
                domains=t.domains,
                intents=t.intents,
            )
            for t in dialogue.turns
        ]
        masked.dialogues[dialogue_id] = Dialogue(dialogue_id, turns)
    return masked


# -- pair similarity study ---------------------------------------------------

STUDY_CATEGORIES = ("domain", "domain_intent", "followed", "random")


@dataclass
class CategoryReport:
    name: str
    eligible_pairs: int
    similarities: list[float]

    @property
    def sample_count(self) -> int:
        return len(self.similarities)

    @property
    def mean(self) -> float | None:
        return float(np.mean(self.similarities)) if self.similarities else None

    @property
    def std(self) -> float | None:
        return float(np.std(self.similarities)) if self.similarities else None


@dataclass
class SimilarityStudyReport:
    n_pairs: int
    seed: int
    match_mode: str
    categories: dict[str, CategoryReport]


def _unrank_pair(p: int) -> tuple[int, int]:
    """Index p in [0, C(m,2)) -> pair (i, j), i < j, ordered by j then i."""
    j = (1 + math.isqrt(1 + 8 * p)) // 2
    if j * (j - 1) // 2 > p:
        j -= 1
    return p - j * (j - 1) // 2, j


def _sample_indices(rng: np.random.Generator, total: int, size: int) -> list[int]:
    """``size`` distinct draws from range(total), all of it when it fits."""
    if total <= size:
        return list(range(total))
    if total <= 4 * size:
        return [int(x) for x in rng.permutation(total)[:size]]
    seen: set[int] = set()
    out: list[int] = []
    while len(out) < size:
        x = int(rng.integers(0, total))
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _grouped_pairs(groups: list[list[int]]) -> tuple[list[int], list[int]]:
    """Group sizes -> cumulative pair-count offsets for unranking."""
    counts = [len(g) * (len(g) - 1) // 2 for g in groups]
    offsets = np.cumsum([0] + counts).tolist()
    return counts, offsets


def pair_similarity_study(
    corpus: Corpus,
    emb: EmbeddingMatrix,
    n_pairs: int = 1000,
    seed: int = 0,
    match_mode: str = "identical",
) -> SimilarityStudyReport:
    """Cosine similarity of utterance pairs sampled by annotation category.

    Categories: ``domain`` (same non-empty domain set), ``domain_intent``
    (same domain and intent sets), ``followed`` (adjacent turns of one
    dialogue), ``random`` (any distinct pair). Pairs are drawn uniformly
    without replacement from the eligible pairs of each category, capped at
    availability. ``match_mode="intersecting"`` relaxes set equality to
    non-empty intersection. Only utterances with an embedding row take part.
    """
    if match_mode not in ("identical", "intersecting"):
        raise ValidationError(f"unknown match_mode {match_mode!r}")
    if n_pairs < 1:
        raise ValidationError("n_pairs must be >= 1")

    items: list[tuple[int, Utterance]] = []  # (embedding row, utterance)
    positions: dict[tuple[str, int], int] = {}
    for key, utt in iter_utterances(corpus):
        row = emb.key_to_row.get(key.canonical())
        if row is None:
            continue
        positions[(utt.dialogue_id, utt.turn_index)] = len(items)
        items.append((row, utt))
    m = len(items)
    rng = np.random.default_rng(seed)

    def sim(i: int, j: int) -> float:
        return cosine_similarity(emb.values[items[i][0]], emb.values[items[j][0]])

    def sample_grouped(signature) -> CategoryReport:
        groups_map: dict = defaultdict(list)
        for idx, (_, utt) in enumerate(items):
            sig = signature(utt)
            if sig is not None:
                groups_map[sig].append(idx)
        if match_mode == "identical":
            groups = [g for _, g in sorted(groups_map.items()) if len(g) >= 2]
            counts, offsets = _grouped_pairs(groups)
            total = offsets[-1]
            sims = []
            for p in _sample_indices(rng, total, n_pairs):
                g = int(np.searchsorted(offsets, p, side="right")) - 1
                a, b = _unrank_pair(p - offsets[g])
                sims.append(sim(groups[g][a], groups[g][b]))
            return CategoryReport("", total, sims)
        # intersecting mode: materialize eligible pairs via an inverted index
        pair_set: set[tuple[int, int]] = set()
        inverted: dict = defaultdict(list)
        for idx, (_, utt) in enumerate(items):
            sig = signature(utt)
            if sig is None:
                continue
            for part in _signature_parts(sig):
                inverted[part].append(idx)
        for sig_items in inverted.values():
            for a_pos, a in enumerate(sig_items):
                for b in sig_items[a_pos + 1 :]:
                    if _signatures_intersect(items[a][1], items[b][1], signature):
                        pair_set.add((a, b))
        pairs = sorted(pair_set)
        sims = [sim(a, b) for p in _sample_indices(rng, len(pairs), n_pairs)
                for a, b in [pairs[p]]]
        return CategoryReport("", len(pairs), sims)

    def domain_sig(utt: Utterance):
        return tuple(sorted(utt.domains)) if utt.domains else None

    def domain_intent_sig(utt: Utterance):
        if utt.domains and utt.intents:
            return tuple(sorted(utt.domains)), tuple(sorted(utt.intents))
        return None

    reports: dict[str, CategoryReport] = {}
    reports["domain"] = sample_grouped(domain_sig)
    reports["domain_intent"] = sample_grouped(domain_intent_sig)

    followed_pairs = []
    for idx, (_, utt) in enumerate(items):
        nxt = positions.get((utt.dialogue_id, utt.turn_index + 1))
        if nxt is not None:
            followed_pairs.append((idx, nxt))
    chosen = _sample_indices(rng, len(followed_pairs), n_pairs)
    reports["followed"] = CategoryReport(
        "", len(followed_pairs), [sim(*followed_pairs[p]) for p in chosen]
    )

    total_random = m * (m - 1) // 2
    sims = []
    for p in _sample_indices(rng, total_random, n_pairs):
        a, b = _unrank_pair(p)
        sims.append(sim(a, b))
    reports["random"] = CategoryReport("", total_random, sims)

    for name in STUDY_CATEGORIES:
        reports[name].name = name
    return SimilarityStudyReport(
        n_pairs=n_pairs, seed=seed, match_mode=match_mode, categories=reports
    )


def _signature_parts(sig):
    """Atoms of a signature for the intersecting-mode inverted index."""
    if isinstance(sig, tuple) and sig and isinstance(sig[0], tuple):
        return [("d", x) for x in sig[0]] + [("i", x) for x in sig[1]]
    return [("d", x) for x in sig]


def _signatures_intersect(a: Utterance, b: Utterance, signature) -> bool:
    sig_a, sig_b = signature(a), signature(b)
    if sig_a is None or sig_b is None:
        return False
    if isinstance(sig_a[0], tuple):  # (domains, intents) pair
        return bool(
            set(sig_a[0]) & set(sig_b[0]) and set(sig_a[1]) & set(sig_b[1])
        )
    return bool(set(sig_a) & set(sig_b))
