from __future__ import annotations

import json

import pytest

from esdkit.core import Corpus, Provenance, sequence_from_texts

TOY_SCENARIOS = {
    "washing dishes": [
        ["fill the sink", "add soap", "scrub the plates", "rinse the plates", "dry the plates"],
        ["collect dirty dishes", "fill the sink", "scrub the plates", "rinse the plates"],
        ["put on gloves", "fill the sink", "add soap", "scrub the plates", "dry the plates"],
    ],
    "making coffee": [
        ["boil water", "grind the beans", "add grounds to filter", "pour water", "drink the coffee"],
        ["grind the beans", "boil water", "pour water", "drink the coffee"],
        ["fill the kettle", "boil water", "add grounds to filter", "pour water"],
    ],
    "planting a tree": [
        ["dig a hole", "place the sapling", "fill the hole", "water the tree"],
        ["choose a spot", "dig a hole", "place the sapling", "water the tree"],
        ["dig a hole", "add compost", "place the sapling", "fill the hole"],
    ],
    "taking a taxi": [
        ["hail a taxi", "get in the taxi", "tell the driver the address", "pay the fare", "get out"],
        ["call a taxi", "wait for the taxi", "get in the taxi", "pay the fare", "get out"],
        ["hail a taxi", "get in the taxi", "pay the fare", "thank the driver", "get out"],
    ],
}


def build_corpus(data: dict[str, list[list[str]]]) -> Corpus:
    scenarios = []
    esds = {}
    for name, esd_lists in data.items():
        seqs = [
            sequence_from_texts(name, texts, Provenance.GOLD, f"{name}-{k}")
            for k, texts in enumerate(esd_lists)
        ]
        scenarios.append(seqs[0].scenario)
        esds[seqs[0].scenario.id] = seqs
    return Corpus(scenarios, esds)


@pytest.fixture
def toy_corpus() -> Corpus:
    return build_corpus(TOY_SCENARIOS)


@pytest.fixture
def toy_corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for name, esd_lists in TOY_SCENARIOS.items():
            for k, events in enumerate(esd_lists):
                handle.write(
                    json.dumps(
                        {"scenario": name, "esd_id": f"{name}-{k}", "events": events}
                    )
                    + "\n"
                )
    return path
