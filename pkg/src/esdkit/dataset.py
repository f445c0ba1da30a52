"""Corpus ingestion, fold partitioning, fine-tuning export, and training-set
construction for the relevance and temporal classifiers.

Scenarios are split into k disjoint folds for cross-validation; each fold
additionally names one held-out scenario drawn from the *other* folds, whose
ESDs are reserved for classifier validation. The canonical 8-fold plan for
the 40-scenario corpus ships as a data file.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .classifiers import serialize_input
from .core import Corpus, EventSequence, Provenance, read_records, record_to_sequence
from .errors import (
    DuplicateEsdIdError,
    IndivisiblePartitionError,
    InsufficientScenariosError,
)
from .prompts import BOS, EOS, PromptVariant, encode

DEFAULT_SEED = 1729


@dataclass(frozen=True)
class Fold:
    index: int
    scenarios: tuple[str, ...]
    heldout: str


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[Fold, ...]
    seed: int | str

    def __post_init__(self):
        seen: set[str] = set()
        for fold in self.folds:
            overlap = seen & set(fold.scenarios)
            if overlap:
                raise ValueError(f"scenario in two folds: {sorted(overlap)}")
            seen.update(fold.scenarios)
        for fold in self.folds:
            others = seen - set(fold.scenarios)
            if fold.heldout not in others:
                raise ValueError(
                    f"fold {fold.index} held-out {fold.heldout!r} is not a"
                    " training-fold scenario"
                )

    def all_scenarios(self) -> set[str]:
        return {name for fold in self.folds for name in fold.scenarios}

    def fold(self, index: int) -> Fold:
        for fold in self.folds:
            if fold.index == index:
                return fold
        raise KeyError(f"no fold {index}")

    def training_scenarios(self, test_fold: int) -> list[str]:
        """Scenarios used to train classifiers when ``test_fold`` is held out.

        All scenarios outside the test fold, minus the test fold's held-out
        validation scenario.
        """
        fold = self.fold(test_fold)
        return [
            name
            for other in self.folds
            if other.index != test_fold
            for name in other.scenarios
            if name != fold.heldout
        ]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "folds": [
                {"fold": f.index, "scenarios": list(f.scenarios), "heldout": f.heldout}
                for f in self.folds
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> FoldPlan:
        folds = tuple(
            Fold(int(f["fold"]), tuple(f["scenarios"]), f["heldout"])
            for f in data["folds"]
        )
        return cls(folds=folds, seed=data.get("seed", "fixed"))


@dataclass(frozen=True)
class RelevanceExample:
    scenario: str
    event: str
    label: int

    @property
    def serialized_input(self) -> str:
        return serialize_input(self.scenario, [self.event])


@dataclass(frozen=True)
class TemporalExample:
    scenario: str
    event_a: str
    event_b: str
    label: int

    @property
    def serialized_input(self) -> str:
        return serialize_input(self.scenario, [self.event_a, self.event_b])


def load_corpus(path) -> Corpus:
    """Load a canonical line-record corpus file as gold ESDs.

    Events are normalized (lowercased, numbering stripped) on the way in.
    """
    scenarios = {}
    esds: dict[str, list[EventSequence]] = {}
    seen_ids: set[str] = set()
    for line_number, record in read_records(path):
        seq = record_to_sequence(record, Provenance.GOLD)
        if seq.esd_id in seen_ids:
            raise DuplicateEsdIdError(f"duplicate esd_id {seq.esd_id!r} at line {line_number}")
        seen_ids.add(seq.esd_id)
        scenarios[seq.scenario.id] = seq.scenario
        esds.setdefault(seq.scenario.id, []).append(seq)
    return Corpus(scenarios.values(), esds)


def load_generated(path) -> list[tuple[EventSequence, str]]:
    """Load generated ESDs plus their prompt-variant tag (default "-")."""
    out = []
    for _, record in read_records(path):
        seq = record_to_sequence(record, Provenance.GENERATED)
        out.append((seq, str(record.get("variant", "-"))))
    return out


def partition_folds(corpus: Corpus, k: int = 8, seed: int = DEFAULT_SEED) -> FoldPlan:
    """Randomly partition scenarios into k equal folds (seeded).

    Each fold's held-out validation scenario is drawn uniformly from the
    other folds' scenarios.
    """
    names = corpus.scenario_names()
    if k <= 0 or len(names) % k != 0:
        raise IndivisiblePartitionError(
            f"{len(names)} scenarios cannot be split into {k} equal folds"
        )
    rng = random.Random(seed)
    shuffled = names[:]
    rng.shuffle(shuffled)
    size = len(names) // k
    groups = [shuffled[i * size:(i + 1) * size] for i in range(k)]
    folds = []
    for i, group in enumerate(groups, start=1):
        others = [n for j, g in enumerate(groups, start=1) if j != i for n in g]
        folds.append(Fold(i, tuple(group), rng.choice(others)))
    return FoldPlan(folds=tuple(folds), seed=seed)


def load_fixed_plan() -> FoldPlan:
    """The canonical 8-fold plan for the 40-scenario corpus."""
    data = json.loads(
        resources.files("esdkit.data").joinpath("fixed_fold_plan.json").read_text("utf-8")
    )
    return FoldPlan.from_dict(data)


def export_finetune_lines(
    corpus: Corpus, variant: PromptVariant, scenarios: Sequence[str] | None = None
) -> list[str]:
    """One training line per gold ESD: "<BOS> <encoded> <EOS>".

    Scenario order follows ``scenarios`` (or corpus order), ESDs keep corpus
    order, so output is reproducible byte for byte.
    """
    names = list(scenarios) if scenarios is not None else corpus.scenario_names()
    lines = []
    for name in names:
        for esd in corpus.esds_for(name):
            lines.append(f"{BOS} {encode(esd.scenario, esd.events, variant)} {EOS}")
    return lines


def _deduped_texts(esd: EventSequence) -> list[str]:
    # exact duplicates within one gold ESD are collapsed before example
    # construction (keeps counts stable)
    seen: set[str] = set()
    out = []
    for event in esd.events:
        if event.text not in seen:
            seen.add(event.text)
            out.append(event.text)
    return out


def build_relevance_set(
    corpus: Corpus,
    scenarios: Sequence[str] | None = None,
    neg_per_pos: int = 1,
    seed: int = DEFAULT_SEED,
    negative_pool: Sequence[str] | None = None,
) -> list[RelevanceExample]:
    """Positive (scenario, event) pairs plus sampled cross-scenario negatives.

    One positive per event occurrence (after per-ESD exact dedup). Each
    negative pairs the scenario with an event drawn uniformly from a
    different scenario of ``negative_pool`` (default: the training
    scenarios themselves); draws that would collide with a genuine positive
    of the target scenario are rejected and resampled.
    """
    names = list(scenarios) if scenarios is not None else corpus.scenario_names()
    pool = list(negative_pool) if negative_pool is not None else names
    if len(set(pool) | set(names)) < 2:
        raise InsufficientScenariosError("negative sampling needs >= 2 scenarios")
    rng = random.Random(seed)

    events_by_scenario = {
        name: [t for esd in corpus.esds_for(name) for t in _deduped_texts(esd)]
        for name in set(names) | set(pool)
    }
    vocab_by_scenario = {name: set(evts) for name, evts in events_by_scenario.items()}

    examples: list[RelevanceExample] = []
    for name in names:
        others = [n for n in pool if n != name]
        if not others:
            raise InsufficientScenariosError(
                f"no scenario to draw negatives for {name!r} from"
            )
        for text in events_by_scenario[name]:
            examples.append(RelevanceExample(name, text, 1))
            for _ in range(neg_per_pos):
                while True:
                    other = rng.choice(others)
                    candidate = rng.choice(events_by_scenario[other])
                    if candidate not in vocab_by_scenario[name]:
                        break
                examples.append(RelevanceExample(name, candidate, 0))
    return examples


def build_temporal_set(
    corpus: Corpus,
    scenarios: Sequence[str] | None = None,
    max_pairs_per_esd: int | None = 50,
    seed: int = DEFAULT_SEED,
) -> list[TemporalExample]:
    """Ordered event pairs from gold ESDs, each with its reversal.

    Every in-order pair (i < j) of an ESD is a candidate; up to
    ``max_pairs_per_esd`` are sampled without replacement. Each sampled pair
    yields a label-1 example and its reversed label-0 twin.
    """
    names = list(scenarios) if scenarios is not None else corpus.scenario_names()
    rng = random.Random(seed)
    examples: list[TemporalExample] = []
    for name in names:
        for esd in corpus.esds_for(name):
            texts = _deduped_texts(esd)
            pairs = [
                (texts[i], texts[j])
                for i in range(len(texts))
                for j in range(i + 1, len(texts))
            ]
            if max_pairs_per_esd is not None and len(pairs) > max_pairs_per_esd:
                pairs = rng.sample(pairs, max_pairs_per_esd)
            for a, b in pairs:
                examples.append(TemporalExample(name, a, b, 1))
                examples.append(TemporalExample(name, b, a, 0))
    return examples


def examples_to_records(
    examples: Iterable[RelevanceExample | TemporalExample],
) -> list[dict]:
    """Serialize training examples as canonical line records."""
    records = []
    for ex in examples:
        if isinstance(ex, RelevanceExample):
            record = {"scenario": ex.scenario, "text_a": ex.event, "text_b": None}
        else:
            record = {"scenario": ex.scenario, "text_a": ex.event_a, "text_b": ex.event_b}
        record["label"] = ex.label
        record["serialized_input"] = ex.serialized_input
        records.append(record)
    return records


def records_to_labeled_inputs(records: Iterable[dict]) -> list[tuple[str, int]]:
    return [(r["serialized_input"], int(r["label"])) for r in records]
