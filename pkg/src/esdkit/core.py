"""Domain types and canonical textual forms for event sequence descriptions.

An event sequence description (ESD) is one telling of an everyday scenario
("baking a cake") as an ordered list of short event phrases. Everything later
in the toolkit (prompt rendering, classifier training, post-processing,
evaluation) consumes the types defined here.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator, Mapping

from .errors import CorpusParseError, EmptyEventError, EmptySequenceError

_NUMBERING_PREFIX = re.compile(r"^\s*\d+\.\s*")


class Provenance(str, Enum):
    GOLD = "gold"
    GENERATED = "generated"
    POSTPROCESSED = "postprocessed"


@dataclass(frozen=True)
class Scenario:
    """A named everyday activity, as a gerund phrase ("baking a cake")."""

    name: str
    id: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("scenario name must be non-empty")
        if self.name != " ".join(self.name.split()) or self.name != self.name.lower():
            raise ValueError(
                f"scenario name must be lowercase and single-spaced: {self.name!r}"
            )

    @classmethod
    def from_name(cls, name: str) -> Scenario:
        """Build a scenario whose id is its (normalized) name."""
        clean = " ".join(name.split()).lower()
        return cls(name=clean, id=clean)


@dataclass(frozen=True)
class Event:
    """One event phrase with its position in the sequence it was parsed from."""

    text: str
    original_index: int

    def __post_init__(self):
        if not self.text:
            raise ValueError("event text must be non-empty")
        if self.text != self.text.strip():
            raise ValueError(f"event text has surrounding whitespace: {self.text!r}")
        if _NUMBERING_PREFIX.match(self.text):
            raise ValueError(f"event text carries a numbering prefix: {self.text!r}")
        if self.original_index < 0:
            raise ValueError("original_index must be non-negative")


@dataclass(frozen=True)
class EventSequence:
    """A scenario plus an ordered list of events, with provenance.

    Gold sequences are never empty; generated and postprocessed ones may be
    (a filtering step can remove every event). A postprocessed sequence keeps
    the report describing what was done to it.
    """

    scenario: Scenario
    events: tuple[Event, ...]
    provenance: Provenance
    esd_id: str
    report: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.provenance is Provenance.GOLD and not self.events:
            raise ValueError(f"gold ESD {self.esd_id!r} has no events")
        indices = [e.original_index for e in self.events]
        if len(set(indices)) != len(indices):
            raise ValueError(f"ESD {self.esd_id!r} has duplicate original indices")
        if self.provenance is Provenance.POSTPROCESSED and self.report is None:
            raise ValueError("postprocessed ESD must carry a pipeline report")

    def texts(self) -> list[str]:
        return [e.text for e in self.events]

    def __len__(self) -> int:
        return len(self.events)


class Corpus:
    """Scenarios and their gold ESDs, immutable after construction."""

    def __init__(self, scenarios: Iterable[Scenario], esds: Mapping[str, Iterable[EventSequence]]):
        self._scenarios: dict[str, Scenario] = {s.id: s for s in scenarios}
        self._esds: dict[str, tuple[EventSequence, ...]] = {
            sid: tuple(seqs) for sid, seqs in esds.items()
        }
        for sid, seqs in self._esds.items():
            if sid not in self._scenarios:
                raise ValueError(f"ESDs reference unknown scenario id {sid!r}")
            if not seqs:
                raise ValueError(f"scenario {sid!r} has no gold ESDs")
            for seq in seqs:
                if seq.scenario.id != sid:
                    raise ValueError(
                        f"ESD {seq.esd_id!r} filed under wrong scenario {sid!r}"
                    )
        missing = set(self._scenarios) - set(self._esds)
        if missing:
            raise ValueError(f"scenarios without ESDs: {sorted(missing)}")

    @property
    def scenarios(self) -> tuple[Scenario, ...]:
        return tuple(self._scenarios.values())

    def scenario_names(self) -> list[str]:
        return [s.name for s in self._scenarios.values()]

    def esds_for(self, scenario_id: str) -> tuple[EventSequence, ...]:
        return self._esds[scenario_id]

    def all_esds(self) -> Iterator[EventSequence]:
        for seqs in self._esds.values():
            yield from seqs

    def __contains__(self, scenario_id: str) -> bool:
        return scenario_id in self._scenarios

    def __len__(self) -> int:
        return len(self._scenarios)


def normalize_event(raw: str, index: int = 0) -> Event:
    """Normalize a raw event string into an :class:`Event`.

    Lowercases, strips leading numbering prefixes ("3." with optional
    following space; generators sometimes double them, so all leading
    numbering tokens go), and collapses internal whitespace. Digit-period
    tokens inside the text ("let it bake for 10 minutes") are preserved;
    only a prefix at the very start of the slot is numbering.

    Raises :class:`EmptyEventError` if nothing remains.
    """
    text = raw.strip()
    while True:
        stripped = _NUMBERING_PREFIX.sub("", text)
        if stripped == text:
            break
        text = stripped
    text = " ".join(text.lower().split())
    if not text:
        raise EmptyEventError(f"no event text in {raw!r}")
    return Event(text=text, original_index=index)


def canonical_numbered_form(esd: EventSequence) -> str:
    """Render an ESD as the numbered form "1. e1 2. e2 ... n. en".

    This is the common surface both generated and gold ESDs are converted to
    before BLEU scoring, so numbering tokens contribute symmetrically.
    """
    if not esd.events:
        raise EmptySequenceError(f"ESD {esd.esd_id!r} has no events")
    return " ".join(f"{i}. {e.text}" for i, e in enumerate(esd.events, start=1))


def sequence_from_texts(
    scenario: Scenario | str,
    texts: Iterable[str],
    provenance: Provenance = Provenance.GOLD,
    esd_id: str = "",
    report: Any = None,
) -> EventSequence:
    """Convenience constructor normalizing raw event strings."""
    scen = scenario if isinstance(scenario, Scenario) else Scenario.from_name(scenario)
    events = tuple(normalize_event(t, i) for i, t in enumerate(texts))
    return EventSequence(scen, events, provenance, esd_id or f"{scen.id}-0", report=report)


# ---------------------------------------------------------------------------
# Canonical corpus format: one JSON object per LF-terminated line with fields
# scenario (string), esd_id (string), events (array of strings); UTF-8.
# Generated-ESD files add a "variant" field.
# ---------------------------------------------------------------------------

def record_to_sequence(record: Mapping[str, Any], provenance: Provenance) -> EventSequence:
    scen = Scenario.from_name(str(record["scenario"]))
    events = tuple(
        normalize_event(t, i) for i, t in enumerate(record["events"])
    )
    return EventSequence(scen, events, provenance, str(record["esd_id"]))


def sequence_to_record(esd: EventSequence, variant: str | None = None) -> dict[str, Any]:
    record: dict[str, Any] = {
        "scenario": esd.scenario.name,
        "esd_id": esd.esd_id,
        "events": esd.texts(),
    }
    if variant is not None:
        record["variant"] = variant
    return record


def read_records(path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (line_number, record) pairs from a canonical line-record file."""
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(line_number, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusParseError(line_number, "record is not an object")
            for key in ("scenario", "esd_id", "events"):
                if key not in record:
                    raise CorpusParseError(line_number, f"missing field {key!r}")
            if not isinstance(record["events"], list):
                raise CorpusParseError(line_number, "events must be an array")
            yield line_number, record


def write_records(path, records: Iterable[Mapping[str, Any]]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def parse_text_corpus(text: str) -> list[dict[str, Any]]:
    """Convert the simple text layout into canonical records.

    Layout: blocks separated by blank lines; each block is one scenario
    header line followed by its (optionally numbered) event lines. ESD ids
    are assigned as "<scenario>-<k>" in appearance order.
    """
    records: list[dict[str, Any]] = []
    counters: dict[str, int] = {}
    for block in re.split(r"\n\s*\n", text.strip()):
        lines = [ln.strip() for ln in block.splitlines() if ln.strip()]
        if len(lines) < 2:
            continue
        scenario = " ".join(lines[0].split()).lower().rstrip(":")
        events = [normalize_event(ln).text for ln in lines[1:]]
        k = counters.get(scenario, 0)
        counters[scenario] = k + 1
        records.append(
            {"scenario": scenario, "esd_id": f"{scenario}-{k}", "events": events}
        )
    return records
