"""Gold-knowledge classifier backends and a synthetic corruption generator.

The oracle backends answer relevance by allow-list membership and temporal
order by gold-position comparison. They make the pipeline exactly invertible
on synthetically corrupted ESDs, which is how the pipeline's correctness is
checked end to end without any trained model.

The same verdict rules are implemented by external rule-based workers, so
in-process and out-of-process runs must agree verdict for verdict.
"""

from __future__ import annotations

import random
from typing import Iterable, Mapping, Sequence

from .classifiers import (
    TASK_RELEVANCE,
    TASK_TEMPORAL,
    ClassifierVerdict,
    split_serialized_input,
)
from .core import Corpus, EventSequence, Provenance, Scenario, normalize_event


class OracleClassifier:
    """Answers both tasks from scenario -> (allow-list, gold order) rules.

    Relevance: label 1 iff the event is in the scenario's allow-list.
    Temporal: label 1 iff e1 comes before e2 in the scenario's gold order;
    events missing from the order rank last, and ties keep the queried
    orientation (label 1).
    """

    def __init__(self, rules: Mapping[str, Mapping[str, Sequence[str]]]):
        self._allowed = {name: set(spec.get("events", ())) for name, spec in rules.items()}
        self._position = {
            name: {event: i for i, event in enumerate(spec.get("order", ()))}
            for name, spec in rules.items()
        }

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> OracleClassifier:
        """Allow-list = all gold events of the scenario; order = first ESD."""
        rules = {}
        for scenario in corpus.scenarios:
            esds = corpus.esds_for(scenario.id)
            events = sorted({t for esd in esds for t in esd.texts()})
            rules[scenario.name] = {"events": events, "order": esds[0].texts()}
        return cls(rules)

    @classmethod
    def from_sequences(cls, sequences: Iterable[EventSequence]) -> OracleClassifier:
        rules = {}
        for esd in sequences:
            rules[esd.scenario.name] = {"events": esd.texts(), "order": esd.texts()}
        return cls(rules)

    def predict(self, task: str, inputs: Sequence[str]) -> list[ClassifierVerdict]:
        verdicts = []
        for serialized in inputs:
            scenario, events = split_serialized_input(serialized)
            if task == TASK_RELEVANCE:
                label = int(events[0] in self._allowed.get(scenario, set()))
            elif task == TASK_TEMPORAL:
                positions = self._position.get(scenario, {})
                fallback = len(positions)
                first = positions.get(events[0], fallback)
                second = positions.get(events[1], fallback)
                label = int(first <= second)
            else:
                raise ValueError(f"unknown task {task!r}")
            verdicts.append(ClassifierVerdict(label=label, score=float(label)))
        return verdicts

    def to_rules_document(self) -> dict:
        """Rules file payload for external rule-based workers."""
        names = set(self._allowed) | set(self._position)
        return {
            name: {
                "events": sorted(self._allowed.get(name, set())),
                "order": [
                    event
                    for event, _ in sorted(
                        self._position.get(name, {}).items(), key=lambda kv: kv[1]
                    )
                ],
            }
            for name in names
        }


class ConstantClassifier:
    """Always answers the same label; the identity backend for both steps.

    Label 1 keeps every event in Step 1 and endorses the queried orientation
    of every pair in Step 3, so the whole pipeline becomes the identity on a
    duplicate-free ESD.
    """

    def __init__(self, label: int = 1):
        self._verdict = ClassifierVerdict(label=label, score=float(label))

    def predict(self, task: str, inputs: Sequence[str]) -> list[ClassifierVerdict]:
        return [self._verdict] * len(inputs)


_FOREIGN_POOL = (
    "tip the waiter",
    "board the spaceship",
    "feed the parrot",
    "sharpen the skates",
    "fold the parachute",
    "tune the violin",
    "water the cactus",
    "polish the trophy",
    "shuffle the deck",
    "wax the surfboard",
    "paint the fence",
    "wind the clock",
)

# disjoint from the foreign pool's vocabulary, so corruption is invertible
_GOLD_VERBS = (
    "grab", "rinse", "stack", "carry", "open", "close",
    "wipe", "shake", "lift", "turn", "pack", "scrub",
)
_GOLD_NOUNS = (
    "kettle", "ladder", "basket", "jacket", "mirror", "bucket",
    "candle", "pillow", "wallet", "napkin", "helmet", "carpet",
)


def make_gold_esd(rng: random.Random, scenario_index: int, n_events: int) -> EventSequence:
    """A synthetic gold ESD with ``n_events`` pairwise-distinct events.

    Events are lexically varied verb-noun phrases, so surface n-grams carry
    the event order (a permuted sequence scores below an identical one).
    """
    scenario = Scenario.from_name(f"synthetic scenario {scenario_index}")
    pairs = rng.sample(
        [(v, n) for v in _GOLD_VERBS for n in _GOLD_NOUNS], n_events
    )
    events = tuple(
        normalize_event(f"{verb} the {noun}", i)
        for i, (verb, noun) in enumerate(pairs)
    )
    return EventSequence(scenario, events, Provenance.GOLD, f"syn-{scenario_index}")


def corrupt(
    esd: EventSequence,
    rng: random.Random,
    n_foreign: int = 2,
    n_duplicates: int = 1,
    shuffle: bool = True,
    foreign_pool: Sequence[str] = _FOREIGN_POOL,
) -> EventSequence:
    """Inject foreign events, duplicate some events exactly, and shuffle.

    The corruption is invertible by the full pipeline with oracle
    classifiers, provided the gold events are pairwise distinct and the
    foreign pool is disjoint from them.
    """
    texts = esd.texts()
    gold_set = set(texts)
    foreign = [t for t in foreign_pool if t not in gold_set]
    corrupted = list(texts)
    for _ in range(n_foreign):
        corrupted.append(rng.choice(foreign))
    for _ in range(min(n_duplicates, len(texts))):
        corrupted.append(rng.choice(texts))
    if shuffle:
        rng.shuffle(corrupted)
    events = tuple(normalize_event(t, i) for i, t in enumerate(corrupted))
    return EventSequence(
        esd.scenario, events, Provenance.GENERATED, f"{esd.esd_id}-corrupted"
    )
