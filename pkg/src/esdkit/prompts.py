"""Render scenarios and events into fixed prompt formulations, and parse
generated text back into event lists.

Seven formulations encode a (scenario, events) pair for fine-tuning export;
sixteen probing prompts (4 beginnings x 4 continuations) cover the zero-shot
setting. Templates are frozen lowercase string constants; scenario/event
markers use the literal ASCII spellings "<SCR>", "<ESCR>", "<BEVENT>",
"<EEVENT>", "<BOS>", "<EOS>".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

from .core import Event, Scenario, normalize_event
from .errors import EmptyEventError, InsufficientSeedEventsError, NoEventsFoundError

SCR = "<SCR>"
ESCR = "<ESCR>"
BEVENT = "<BEVENT>"
EEVENT = "<EEVENT>"
BOS = "<BOS>"
EOS = "<EOS>"


class PromptVariant(str, Enum):
    SEQUENCE = "SEQUENCE"
    EXPECT = "EXPECT"
    ORDERED = "ORDERED"
    DESCRIBE = "DESCRIBE"
    DIRECT = "DIRECT"
    TOKENS = "TOKENS"
    ALLTOKENS = "ALLTOKENS"


# Placeholders: {scenario} is the gerund name, {scenario_infinitive} its base
# form ("bake a cake"); {events_numbered} expands to "" or " 1. e1 2. e2 ..."
# (leading space included) and {events_tokened} to "" or
# " <BEVENT> e1 <EEVENT> ..." so rendering is bit-exact for empty event lists.
TEMPLATES: dict[PromptVariant, str] = {
    PromptVariant.SEQUENCE: (
        "here is a sequence of events that happen while {scenario}:{events_numbered}"
    ),
    PromptVariant.EXPECT: (
        "these are the things that happen when you {scenario_infinitive}:{events_numbered}"
    ),
    PromptVariant.ORDERED: (
        "here is an ordered sequence of events that occur when you"
        " {scenario_infinitive}:{events_numbered}"
    ),
    PromptVariant.DESCRIBE: (
        "describe {scenario} in small sequences of short sentences:{events_numbered}"
    ),
    PromptVariant.DIRECT: "{scenario}:{events_numbered}",
    PromptVariant.TOKENS: (
        f"{SCR} {{scenario}} {ESCR}:{{events_numbered}}"
    ),
    PromptVariant.ALLTOKENS: (
        f"{SCR} {{scenario}} {ESCR}:{{events_tokened}}"
    ),
}


class InfinitiveForm(NamedTuple):
    text: str
    confident: bool


# Head verbs the suffix rules get wrong. Seeded from the scenario inventory
# used throughout: irregular -ie stems and stems whose spelling is ambiguous
# after stripping.
_GERUND_EXCEPTIONS = {
    "tying": "tie",
    "dying": "die",
    "lying": "lie",
    "changing": "change",
    "adding": "add",
    "egging": "egg",
}

_VOWELS = set("aeiou")
_DOUBLED_FINALS = set("bdgmnprt")


def _vowel_groups(stem: str) -> int:
    return len(re.findall(r"[aeiou]+", stem))


def _strip_gerund(word: str) -> str | None:
    """Return the base form of a single -ing word, or None if not a gerund."""
    if word in _GERUND_EXCEPTIONS:
        return _GERUND_EXCEPTIONS[word]
    if not word.endswith("ing") or len(word) < 5 or not word.isalpha():
        return None
    stem = word[:-3]
    last = stem[-1]
    if len(stem) >= 2 and last == stem[-2] and last in _DOUBLED_FINALS:
        return stem[:-1]  # getting -> get
    if last in _VOWELS or last in "wxy":
        return stem  # go, borrow, fix, play
    if last == "v":
        return stem + "e"  # have, leave
    if stem[-2] in _VOWELS and (len(stem) == 2 or stem[-3] not in _VOWELS):
        # single vowel before the final consonant
        if _vowel_groups(stem) == 1:
            return stem + "e"  # bake, ride, take
        if stem.endswith("at"):
            return stem + "e"  # renovate, operate
    return stem


def infinitive_form(scenario_name: str) -> InfinitiveForm:
    """Convert a gerund scenario name to its base form ("bake a cake").

    Only the head word is touched. Non-gerund inputs come back unchanged
    with ``confident=False``; the function is total and idempotent.
    """
    words = scenario_name.split()
    if not words:
        return InfinitiveForm(scenario_name, False)
    base = _strip_gerund(words[0])
    if base is None:
        return InfinitiveForm(scenario_name, False)
    return InfinitiveForm(" ".join([base] + words[1:]), True)


def _events_numbered(events: Sequence[Event]) -> str:
    return "".join(f" {i}. {e.text}" for i, e in enumerate(events, start=1))


def _events_tokened(events: Sequence[Event]) -> str:
    return "".join(f" {BEVENT} {e.text} {EEVENT}" for e in events)


def encode(scenario: Scenario, events: Sequence[Event], variant: PromptVariant) -> str:
    """Render (scenario, events) under one prompt formulation.

    With an empty event list, only the prompt head is rendered (used to
    prompt a generator for a fresh ESD).
    """
    return TEMPLATES[variant].format(
        scenario=scenario.name,
        scenario_infinitive=infinitive_form(scenario.name).text,
        events_numbered=_events_numbered(events),
        events_tokened=_events_tokened(events),
    )


_NUMBER_SLOT = re.compile(r"\s*\b\d+\.(?:\s+|$)")
_TOKENED_SLOT = re.compile(
    rf"{re.escape(BEVENT)}\s*(.*?)\s*(?:{re.escape(EEVENT)}|$)", re.S
)


def decode(text: str, variant: PromptVariant) -> list[Event]:
    """Parse generated text back into a normalized event list.

    Generation output may carry the prompt prefix, begin/end-of-scenario
    markers, and a fragment truncated mid-event. Everything from the first
    "<EOS>" on is discarded. Event slots are taken in surface order; the
    numbers written by the generator are not trusted (they repeat and skip).
    Slots that normalize to nothing, including an empty truncated tail, are
    dropped.
    """
    if EOS in text:
        text = text[: text.index(EOS)]
    text = text.strip()
    if text.startswith(BOS):
        text = text[len(BOS):].strip()

    if variant is PromptVariant.ALLTOKENS:
        slots = _TOKENED_SLOT.findall(text)
    else:
        # Everything before the first numbering token is the prompt prefix.
        slots = _NUMBER_SLOT.split(text)[1:]

    events: list[Event] = []
    for slot in slots:
        try:
            events.append(normalize_event(slot, len(events)))
        except EmptyEventError:
            continue
    if not events:
        raise NoEventsFoundError(f"no events in {text!r}")
    return events


# The four probing-prompt beginnings, in the grid order used everywhere.
PROBE_BEGINNINGS: tuple[str, ...] = (
    "these are the things that happen when you {scenario_infinitive}:",
    "here is an ordered sequence of events that occur when you {scenario_infinitive}:",
    "describe {scenario} in small sequences of short sentences:",
    "here is a sequence of events that happen while {scenario}:",
)


@dataclass(frozen=True)
class ProbingPrompt:
    beginning_index: int
    continuation_index: int
    text: str


def probing_prompts(scenario: Scenario, seed_events: Sequence[Event]) -> list[ProbingPrompt]:
    """Build the 16 zero-shot probes: 4 beginnings x 4 continuations.

    Continuations condition the generator progressively: nothing, a bare
    "1.", the first seed event, then the first two seed events. Order is
    beginning-major and deterministic.
    """
    if len(seed_events) < 2:
        raise InsufficientSeedEventsError(
            f"need 2 seed events, got {len(seed_events)}"
        )
    e1, e2 = seed_events[0].text, seed_events[1].text
    continuations = ("", " 1.", f" 1. {e1}", f" 1. {e1} 2. {e2}")
    prompts = []
    for b, beginning in enumerate(PROBE_BEGINNINGS):
        head = beginning.format(
            scenario=scenario.name,
            scenario_infinitive=infinitive_form(scenario.name).text,
        )
        for c, continuation in enumerate(continuations):
            prompts.append(ProbingPrompt(b, c, head + continuation))
    return prompts


def template_manifest() -> dict:
    """Machine-readable template manifest for external generators."""
    return {
        "placeholders": {
            "{scenario}": "scenario name, lowercase gerund phrase",
            "{scenario_infinitive}": "scenario name with the head verb in base form",
            "{events_numbered}": "empty, or ' 1. <e1> 2. <e2> ...' with a leading space",
            "{events_tokened}": (
                f"empty, or ' {BEVENT} <e1> {EEVENT} {BEVENT} <e2> {EEVENT} ...'"
                " with a leading space"
            ),
        },
        "variants": {variant.value: TEMPLATES[variant] for variant in PromptVariant},
        "probe_beginnings": list(PROBE_BEGINNINGS),
        "probe_continuations": ["", " 1.", " 1. {e1}", " 1. {e1} 2. {e2}"],
        "finetune_line": f"{BOS} {{encoded}} {EOS}",
    }
