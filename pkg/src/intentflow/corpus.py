"""Canonical dialogue corpus: schema, loading, statistics, filtering.

A corpus file is a single JSON object mapping dialogue id to::

    {"turns": [{"speaker": "user"|"system", "text": "...",
                "domains": ["hotel", ...], "intents": ["inform", ...]}]}

Turn order in the array is turn order in the dialogue; ``domains`` and
``intents`` are optional (default empty). Dialogue iteration order is file
order, which every downstream consumer treats as the canonical traversal.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .errors import CorpusError, ValidationError

SPEAKERS = ("user", "system", "unknown")

# Annotation domains that do not identify a task; a dialogue is
# "single-domain" when the union of its turns' domains minus these
# has size <= 1.
NON_TASK_DOMAINS = frozenset({"general", "booking"})


@dataclass(frozen=True)
class UtteranceKey:
    """Identifies one utterance as ``<dialogue_id>:<turn_index>``."""

    dialogue_id: str
    turn_index: int

    def canonical(self) -> str:
        return f"{self.dialogue_id}:{self.turn_index}"

    @classmethod
    def parse(cls, text: str) -> "UtteranceKey":
        head, sep, tail = text.rpartition(":")
        if not sep or not tail.isdigit():
            raise ValidationError(f"not a canonical utterance key: {text!r}")
        return cls(head, int(tail))


@dataclass(frozen=True)
class Utterance:
    dialogue_id: str
    turn_index: int
    speaker: str
    text: str
    domains: frozenset[str] = frozenset()
    intents: frozenset[str] = frozenset()

    @property
    def key(self) -> UtteranceKey:
        return UtteranceKey(self.dialogue_id, self.turn_index)


@dataclass
class Dialogue:
    dialogue_id: str
    turns: list[Utterance] = field(default_factory=list)

    def task_domains(self) -> frozenset[str]:
        """Union of turn domains with non-task domains removed."""
        out: set[str] = set()
        for turn in self.turns:
            out |= turn.domains
        return frozenset(out - NON_TASK_DOMAINS)


@dataclass
class Corpus:
    dialogues: dict[str, Dialogue] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.dialogues)

    @property
    def n_utterances(self) -> int:
        return sum(len(d.turns) for d in self.dialogues.values())

    def utterance(self, key: UtteranceKey) -> Utterance:
        dialogue = self.dialogues.get(key.dialogue_id)
        if dialogue is None or not 0 <= key.turn_index < len(dialogue.turns):
            raise ValidationError(f"no utterance {key.canonical()!r} in corpus")
        return dialogue.turns[key.turn_index]


@dataclass
class CorpusStats:
    n_dialogues: int
    n_utterances: int
    n_single_domain: int
    n_multi_domain: int
    mean_turns_single_domain: float | None
    mean_turns_multi_domain: float | None


def iter_utterances(corpus: Corpus) -> Iterator[tuple[UtteranceKey, Utterance]]:
    """Canonical traversal: dialogues in file order, turns in turn order."""
    for dialogue in corpus.dialogues.values():
        for turn in dialogue.turns:
            yield turn.key, turn


def _reject_duplicate_keys(pairs):
    obj = {}
    for k, v in pairs:
        if k in obj:
            raise CorpusError(f"duplicate key {k!r} in corpus file")
        obj[k] = v
    return obj


def _string_set(raw, what: str, where: str) -> frozenset[str]:
    if raw is None:
        return frozenset()
    if not isinstance(raw, list) or not all(isinstance(x, str) and x for x in raw):
        raise CorpusError(f"{where}: {what} must be a list of non-empty strings")
    return frozenset(raw)


def _parse_turn(dialogue_id: str, index: int, raw) -> Utterance:
    where = f"dialogue {dialogue_id!r} turn {index}"
    if not isinstance(raw, dict):
        raise CorpusError(f"{where}: turn must be an object")
    speaker = raw.get("speaker", "unknown")
    if speaker not in SPEAKERS:
        raise CorpusError(f"{where}: speaker {speaker!r} not one of {SPEAKERS}")
    text = raw.get("text")
    if not isinstance(text, str) or not text.strip():
        raise CorpusError(f"{where}: text missing or blank")
    return Utterance(
        dialogue_id=dialogue_id,
        turn_index=index,
        speaker=speaker,
        text=text,
        domains=_string_set(raw.get("domains"), "domains", where),
        intents=_string_set(raw.get("intents"), "intents", where),
    )


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a canonical corpus file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise CorpusError(f"{path}: top level must be an object")
    corpus = Corpus()
    for dialogue_id, body in raw.items():
        if not isinstance(body, dict) or not isinstance(body.get("turns"), list):
            raise CorpusError(f"dialogue {dialogue_id!r}: missing turns array")
        turns = [
            _parse_turn(dialogue_id, i, t) for i, t in enumerate(body["turns"])
        ]
        corpus.dialogues[dialogue_id] = Dialogue(dialogue_id, turns)
    return corpus


def corpus_to_dict(corpus: Corpus) -> dict:
    out: dict = {}
    for dialogue_id, dialogue in corpus.dialogues.items():
        out[dialogue_id] = {
            "turns": [
                {
                    "speaker": t.speaker,
                    "text": t.text,
                    "domains": sorted(t.domains),
                    "intents": sorted(t.intents),
                }
                for t in dialogue.turns
            ]
        }
    return out


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write canonical JSON; load_corpus(write_corpus(c)) == c."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_dict(corpus), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Dialogue/turn counts split by the single-vs-multi-domain partition."""
    single_lengths: list[int] = []
    multi_lengths: list[int] = []
    for dialogue in corpus.dialogues.values():
        n = len(dialogue.turns)
        if len(dialogue.task_domains()) <= 1:
            single_lengths.append(n)
        else:
            multi_lengths.append(n)

    def mean(xs: list[int]) -> float | None:
        return sum(xs) / len(xs) if xs else None

    return CorpusStats(
        n_dialogues=len(corpus),
        n_utterances=corpus.n_utterances,
        n_single_domain=len(single_lengths),
        n_multi_domain=len(multi_lengths),
        mean_turns_single_domain=mean(single_lengths),
        mean_turns_multi_domain=mean(multi_lengths),
    )


def filter_utterances(
    corpus: Corpus,
    keep_domains: set[str] | None = None,
    drop_domains: set[str] | None = None,
) -> list[tuple[UtteranceKey, Utterance]]:
    """Select utterances by domain annotation, preserving corpus order.

    Exactly one of ``keep_domains`` (keep when the annotation intersects)
    and ``drop_domains`` (drop when the annotation intersects) may be given;
    neither means keep everything.
    """
    if keep_domains is not None and drop_domains is not None:
        raise ValidationError("pass keep_domains or drop_domains, not both")
    out = []
    for key, utt in iter_utterances(corpus):
        if keep_domains is not None:
            if utt.domains & keep_domains:
                out.append((key, utt))
        elif drop_domains is not None:
            if not utt.domains & drop_domains:
                out.append((key, utt))
        else:
            out.append((key, utt))
    return out


def domain_combination_histogram(
    corpus: Corpus, min_count: int = 1
) -> list[tuple[tuple[str, ...], int]]:
    """Count utterances per sorted domain combination.

    Sorted by descending count, then lexicographically; combinations with
    fewer than ``min_count`` utterances are omitted. Counts over all
    combinations (before omission) sum to the utterance total.
    """
    counts: Counter[tuple[str, ...]] = Counter()
    for _, utt in iter_utterances(corpus):
        counts[tuple(sorted(utt.domains))] += 1
    items = [(combo, n) for combo, n in counts.items() if n >= min_count]
    items.sort(key=lambda item: (-item[1], item[0]))
    return items


# -- raw MultiWOZ conversion -------------------------------------------------

def _acts_to_annotations(acts) -> tuple[frozenset[str], frozenset[str]]:
    """Map a dialogue-act dict to (domains, intents) by splitting act names."""
    domains: set[str] = set()
    intents: set[str] = set()
    if not isinstance(acts, dict):  # "No Annotation" placeholder strings
        return frozenset(), frozenset()
    for name in acts:
        head, sep, tail = str(name).partition("-")
        domains.add(head.lower())
        if sep:
            intents.add(tail.lower())
    return frozenset(domains), frozenset(intents)


def convert_multiwoz(
    data_path: str | Path, acts_path: str | Path | None = None
) -> Corpus:
    """Convert a raw MultiWOZ-style data.json to the canonical schema.

    Speakers alternate user/system starting from user. Per-turn acts are
    read from an inline "dialog_act" object when present, otherwise from
    the separate acts file, which maps dialogue id (with or without a
    ".json" suffix) to 1-based system-turn numbers: turn t covers log
    entry 2t-1. Act names split on "-" into (domain, intent).
    """
    with open(data_path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise CorpusError(f"{data_path}: top level must be an object")

    acts_by_id: dict = {}
    if acts_path is not None:
        with open(acts_path, encoding="utf-8") as fh:
            acts_by_id = json.load(fh)

    def file_acts(dialogue_id: str, log_index: int):
        entry = acts_by_id.get(dialogue_id)
        if entry is None:
            entry = acts_by_id.get(dialogue_id.removesuffix(".json"), {})
        if log_index % 2 == 0:  # acts files annotate system turns only
            return None
        return entry.get(str((log_index + 1) // 2))

    corpus = Corpus()
    for dialogue_id, body in data.items():
        log = body.get("log") if isinstance(body, dict) else None
        if not isinstance(log, list) or not log:
            raise CorpusError(f"dialogue {dialogue_id!r}: missing log")
        turns = []
        for i, entry in enumerate(log):
            text = entry.get("text")
            if not isinstance(text, str) or not text.strip():
                raise CorpusError(f"dialogue {dialogue_id!r} log {i}: blank text")
            acts = entry.get("dialog_act")
            if acts is None:
                acts = file_acts(dialogue_id, i)
            domains, intents = _acts_to_annotations(acts)
            turns.append(
                Utterance(
                    dialogue_id=dialogue_id,
                    turn_index=i,
                    speaker="user" if i % 2 == 0 else "system",
                    text=text,
                    domains=domains,
                    intents=intents,
                )
            )
        corpus.dialogues[dialogue_id] = Dialogue(dialogue_id, turns)
    return corpus
