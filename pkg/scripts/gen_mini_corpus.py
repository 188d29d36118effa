#!/usr/bin/env python3
"""Generate the bundled mini corpus plus synthetic embeddings.

Deterministic: 25 dialogues x 8 turns over three task domains (hotel,
restaurant, attraction) with a sprinkle of general chit-chat turns, a few
multi-domain dialogues and a few unannotated system turns. Embeddings are
structured noise, one domain center plus half an intent center, so the
geometry mirrors the annotation without any model in the loop:

    vec = c_domain + 0.5 * c_intent + 0.05 * noise      (d = 32)

Writes corpus.json, utterances.emb, utterances.keys, hotel_db.json and
config.json into data/mini/ (or --out).
"""

import argparse
import json
from pathlib import Path

import numpy as np

from intentflow.corpus import Corpus, Dialogue, Utterance, iter_utterances, write_corpus
from intentflow.embed import EmbeddingMatrix, write_embeddings

DIM = 32
SEED = 20240817

HOTELS = [
    {"name": "acorn guest house", "area": "north", "stars": "4"},
    {"name": "alexander bed and breakfast", "area": "centre", "stars": "4"},
    {"name": "gonville hotel", "area": "centre", "stars": "3"},
    {"name": "huntingdon marriott hotel", "area": "west", "stars": "4"},
    {"name": "leverton house", "area": "east", "stars": "4"},
]

# template pools per (domain, intent); {e} cycles through the entity column
TEMPLATES = {
    ("hotel", "inform"): (
        ["i need a hotel in the north with {e} stars",
         "looking for a cheap hotel in cambridge with {e} stars",
         "i want a guesthouse with free parking and {e} stars",
         "we need a place to stay in the east with {e} stars"],
        ["2", "3", "four", "2"],
    ),
    ("hotel", "request"): (
        ["what is the phone number of the {e}",
         "can you give me the address of the {e}",
         "does the {e} have free wifi",
         "what area is the {e} in"],
        ["acorn guest house", "gonville hotel", "leverton house",
         "alexander bed and breakfast"],
    ),
    ("hotel", "book"): (
        ["please book the {e} for 3 nights",
         "book it for {e} people starting tuesday",
         "i would like to book the {e} for two nights",
         "reserve the {e} for 5 people please"],
        ["acorn guest house", "6", "huntingdon marriott hotel",
         "gonville hotel"],
    ),
    ("restaurant", "inform"): (
        ["i am looking for a cheap restaurant in the centre",
         "i want some indian food in the south",
         "find me an expensive restaurant serving chinese food",
         "is there a moderately priced italian place in town"],
        [""] * 4,
    ),
    ("restaurant", "request"): (
        ["what is the postcode of the restaurant",
         "could i get the phone number please",
         "what kind of food do they serve",
         "what is the price range of that place"],
        [""] * 4,
    ),
    ("restaurant", "book"): (
        ["book a table for {e} people at 7 pm",
         "reserve it for {e} on friday night",
         "i need a reservation for {e} people",
         "table for {e} at noon please"],
        ["2", "four", "8", "3"],
    ),
    ("attraction", "inform"): (
        ["i want to visit a museum in the centre",
         "are there any colleges in the west",
         "looking for some entertainment in the east",
         "i would like to see some architecture in town"],
        [""] * 4,
    ),
    ("attraction", "request"): (
        ["what is the entrance fee",
         "can i get the postcode of the museum",
         "how do i get there from cambridge",
         "what are the opening hours"],
        [""] * 4,
    ),
    ("attraction", "recommend"): (
        ["you should visit the fitzwilliam museum",
         "i recommend the scott polar museum",
         "clare college is lovely this time of year",
         "the botanic gardens are worth a visit"],
        [""] * 4,
    ),
    ("general", "greet"): (
        ["hello i need some help planning a trip",
         "hi there can you help me",
         "good morning i have a question",
         "hello are you there"],
        [""] * 4,
    ),
    ("general", "bye"): (
        ["thank you goodbye",
         "thanks that is all i needed",
         "great thank you for the help bye",
         "that will be all thanks"],
        [""] * 4,
    ),
}

UNANNOTATED_TEXT = "anything else i can help you with today"

# user/system turn script for a task dialogue: (speaker, intent slot)
TURN_SCRIPT = [
    ("user", "inform"),
    ("system", "request"),
    ("user", "inform"),
    ("system", "inform"),
    ("user", "request"),
    ("system", "inform"),
    ("user", "book"),
    ("system", "book"),
]

DOMAIN_OF = (
    ["hotel"] * 8 + ["restaurant"] * 8 + ["attraction"] * 7 + ["multi"] * 2
)
# attraction has no "book" act; swap in its own third intent
INTENT_ALIAS = {("attraction", "book"): "recommend"}


def pick_text(domain: str, intent: str, serial: int) -> str:
    templates, entities = TEMPLATES[(domain, intent)]
    i = serial % len(templates)
    return templates[i].format(e=entities[i])


def build_corpus() -> Corpus:
    corpus = Corpus()
    serial = 0
    for d in range(25):
        did = f"mini{d:04d}"
        dialogue = Dialogue(did)
        domain_plan = DOMAIN_OF[d]
        for t, (speaker, slot) in enumerate(TURN_SCRIPT):
            if domain_plan == "multi":
                # hotel then restaurant for 23, attraction then hotel for 24
                first, second = (
                    ("hotel", "restaurant") if d == 23 else ("attraction", "hotel")
                )
                domain = first if t < 4 else second
            else:
                domain = domain_plan
            intent = INTENT_ALIAS.get((domain, slot), slot)
            if d % 4 == 0 and t == 0:
                domain, intent = "general", "greet"
            elif d % 4 == 0 and t == 7:
                domain, intent = "general", "bye"
            if d % 7 == 3 and t == 5:
                # a system turn the annotators skipped
                dialogue.turns.append(
                    Utterance(did, t, speaker, UNANNOTATED_TEXT)
                )
                continue
            dialogue.turns.append(
                Utterance(
                    did,
                    t,
                    speaker,
                    pick_text(domain, intent, serial),
                    domains=frozenset({domain}),
                    intents=frozenset({intent}),
                )
            )
            serial += 1
        corpus.dialogues[did] = dialogue
    return corpus


def build_embeddings(corpus: Corpus) -> EmbeddingMatrix:
    rng = np.random.default_rng(SEED)
    domain_centers = {
        name: rng.normal(0.0, 1.0, DIM)
        for name in ("hotel", "restaurant", "attraction", "general")
    }
    intent_centers = {}
    for (domain, intent) in sorted(TEMPLATES):
        intent_centers[(domain, intent)] = rng.normal(0.0, 1.0, DIM)
    misc = rng.normal(0.0, 1.0, DIM)

    keys, rows = [], []
    for key, utt in iter_utterances(corpus):
        if utt.domains:
            domain = min(utt.domains)
            intent = min(utt.intents)
            center = domain_centers[domain] + 0.5 * intent_centers[(domain, intent)]
        else:
            # unannotated turns still live near their dialogue's topic
            dialogue = corpus.dialogues[utt.dialogue_id]
            domain = min(dialogue.task_domains() or {"general"})
            center = domain_centers[domain] + 0.5 * misc
        keys.append(key.canonical())
        rows.append(center + 0.05 * rng.normal(0.0, 1.0, DIM))
    values = np.asarray(rows, dtype=np.float32)
    return EmbeddingMatrix(values, keys)


CONFIG = {
    "corpus": "data/mini/corpus.json",
    "embeddings": {
        "matrix": "data/mini/utterances.emb",
        "keys": "data/mini/utterances.keys",
    },
    "out_dir": "runs/mini",
    "mask": {
        "db_files": [
            {"path": "data/mini/hotel_db.json", "fields": {"name": "[HOTEL_NAME]"}}
        ]
    },
    "reduce": {"n_neighbors": 10, "n_epochs": 150, "target_dim": 5, "seed": 42},
    "grid": {"min_samples": [3, 5], "min_cluster_size": [5, 10, 15]},
    "cluster": {"min_cluster_size": 10, "min_samples": 5},
    "flows": {"min_len": 2, "max_len": 3, "topk": 15},
    "study": {"n_pairs": 300, "seed": 7},
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/mini", help="output directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    corpus = build_corpus()
    write_corpus(corpus, out / "corpus.json")
    emb = build_embeddings(corpus)
    write_embeddings(emb, out / "utterances.emb", out / "utterances.keys")
    with open(out / "hotel_db.json", "w", encoding="utf-8") as fh:
        json.dump(HOTELS, fh, indent=2)
        fh.write("\n")
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(CONFIG, fh, indent=2)
        fh.write("\n")
    print(
        f"wrote {corpus.n_utterances} utterances "
        f"({len(corpus)} dialogues, d={emb.dim}) to {out}"
    )


if __name__ == "__main__":
    main()
