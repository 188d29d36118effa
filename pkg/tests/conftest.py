import numpy as np
import pytest

from intentflow.corpus import Corpus, Dialogue, Utterance

# One line per acceptance criterion, echoed after the test summary so they
# survive output capture (see test_acceptance.py).
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def corpus_from_plan(plan: dict) -> Corpus:
    """Build a corpus from {dialogue_id: [(speaker, text, domains, intents)]}."""
    corpus = Corpus()
    for did, turns in plan.items():
        dialogue = Dialogue(did)
        for i, (speaker, text, domains, intents) in enumerate(turns):
            dialogue.turns.append(
                Utterance(
                    dialogue_id=did,
                    turn_index=i,
                    speaker=speaker,
                    text=text,
                    domains=frozenset(domains),
                    intents=frozenset(intents),
                )
            )
        corpus.dialogues[did] = dialogue
    return corpus


def gaussian_blobs(
    n_per: int, centers: np.ndarray, scale: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Points drawn around each center, plus true labels."""
    rng = np.random.default_rng(seed)
    points = np.vstack(
        [c + rng.normal(0.0, scale, size=(n_per, centers.shape[1])) for c in centers]
    )
    labels = np.repeat(np.arange(len(centers)), n_per)
    return points, labels


@pytest.fixture
def small_corpus() -> Corpus:
    return corpus_from_plan(
        {
            "d1": [
                ("user", "i need a hotel", {"hotel"}, {"inform"}),
                ("system", "what area", {"hotel"}, {"request"}),
                ("user", "the north please", {"hotel"}, {"inform"}),
                ("system", "booked", {"hotel", "booking"}, {"book"}),
            ],
            "d2": [
                ("user", "find a restaurant", {"restaurant"}, {"inform"}),
                ("system", "any preference", {"restaurant"}, {"request"}),
                ("user", "thanks bye", {"general"}, {"bye"}),
            ],
            "d3": [
                ("user", "hotel then a taxi", {"hotel", "taxi"}, {"inform"}),
                ("system", "sure", {"taxi"}, {"inform"}),
            ],
        }
    )
