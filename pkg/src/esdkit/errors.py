"""Exception hierarchy shared across the toolkit.

Every error raised on a contract violation derives from :class:`EsdKitError`
so the CLI can map any failure to a machine-readable error record.
"""

from __future__ import annotations


class EsdKitError(Exception):
    """Base class for all toolkit errors."""


class EmptyEventError(EsdKitError):
    """Nothing remained after normalizing an event string."""


class EmptySequenceError(EsdKitError):
    """An operation required a non-empty event sequence."""


class NoEventsFoundError(EsdKitError):
    """No event slot could be extracted from generated text."""


class InsufficientSeedEventsError(EsdKitError):
    """Probing prompts need at least two seed events."""


class CorpusParseError(EsdKitError):
    """Malformed corpus record; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DuplicateEsdIdError(EsdKitError):
    """Two corpus records share an esd_id."""


class IndivisiblePartitionError(EsdKitError):
    """Scenario count is not divisible by the requested fold count."""


class InsufficientScenariosError(EsdKitError):
    """Negative sampling needs at least two training scenarios."""


class DegenerateLabelsError(EsdKitError):
    """A training set contains only one class."""


class EndpointTimeoutError(EsdKitError):
    """One or more requests got no response in time.

    ``unanswered_ids`` lists exactly the request ids still outstanding.
    """

    def __init__(self, unanswered_ids: list[str], message: str = ""):
        ids = ", ".join(unanswered_ids)
        super().__init__(message or f"no response for request ids: {ids}")
        self.unanswered_ids = list(unanswered_ids)


class EndpointProtocolError(EsdKitError):
    """Malformed or error response from a classifier worker."""

    def __init__(self, request_id: str | None, message: str):
        super().__init__(f"request {request_id!r}: {message}")
        self.request_id = request_id


class EmptyInputError(EsdKitError):
    """An aggregate was asked for over zero items."""


class MissingReferencesError(EsdKitError):
    """A generated scenario has no gold references."""


class EmptyReferencesError(EsdKitError):
    """BLEU needs at least one reference."""


class AlignmentError(EsdKitError):
    """Annotation records do not line up across annotators."""


class LengthMismatchError(EsdKitError):
    """Paired label lists have different lengths (or are empty)."""


class ZeroVarianceError(EsdKitError):
    """Rank correlation is undefined when one side is constant."""
