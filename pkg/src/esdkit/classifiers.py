"""Binary classifier backends for the relevance and temporal tasks.

Two interchangeable backends answer the same question interface:

* :class:`BaselineModel`, a sparse hashed-feature logistic model trained
  in-process. It exists so the whole pipeline runs hermetically; it makes no
  claim of parity with large fine-tuned classifiers.
* :class:`~esdkit.endpoint.EndpointClient` (separate module), which forwards
  batches to an external worker over a line-delimited wire protocol.

Any object with ``predict(task, inputs) -> list[ClassifierVerdict]`` can be
plugged into the post-processing pipeline.

Classifier inputs are single strings: "scenario </s> e" for relevance and
"scenario </s> e1 </s> e2" for temporal order, with the literal separator
token "</s>".
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DegenerateLabelsError

TASK_RELEVANCE = "relevance"
TASK_TEMPORAL = "temporal"
TASKS = (TASK_RELEVANCE, TASK_TEMPORAL)

SEPARATOR = "</s>"
DEFAULT_DIM = 1 << 18
DEFAULT_THRESHOLD = 0.5

MODEL_FORMAT = "esdkit-linear-v1"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(text: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 bytes of ``text``.

    This is the feature hash contract: reimplementations must reduce this
    value mod the feature dimension to land in the same bucket.
    """
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def serialize_input(scenario: str, events: Sequence[str]) -> str:
    return f" {SEPARATOR} ".join([scenario, *events])


def split_serialized_input(serialized: str) -> tuple[str, list[str]]:
    parts = [p.strip() for p in serialized.split(SEPARATOR)]
    return parts[0], parts[1:]


def featurize(serialized_input: str, dim: int = DEFAULT_DIM) -> dict[int, float]:
    """Hash word unigrams and bigrams into ``dim`` buckets, counts as values.

    Fields (the "</s>"-separated segments) stay distinct: every n-gram is
    tagged with its field index before hashing, so "scenario" tokens and
    "event" tokens never share a feature on purpose.
    """
    vector: dict[int, float] = {}
    fields = serialized_input.split(SEPARATOR)
    for field_index, chunk in enumerate(fields):
        tokens = chunk.lower().split()
        grams = [f"{field_index}:{t}" for t in tokens]
        grams += [
            f"{field_index}:{a}_{b}" for a, b in zip(tokens, tokens[1:])
        ]
        for gram in grams:
            bucket = fnv1a_64(gram) % dim
            vector[bucket] = vector.get(bucket, 0.0) + 1.0
    return vector


def _sigmoid(z: float) -> float:
    # clamp to keep exp() in range; scores saturate at the float boundary
    if z >= 0:
        return 1.0 if z > 500 else 1.0 / (1.0 + math.exp(-z))
    if z < -500:
        return 0.0
    ez = math.exp(z)
    return ez / (1.0 + ez)


@dataclass(frozen=True)
class ClassifierVerdict:
    """Binary label plus the probability assigned to label 1."""

    label: int
    score: float

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


def verdict_from_score(score: float, threshold: float = DEFAULT_THRESHOLD) -> ClassifierVerdict:
    return ClassifierVerdict(label=int(score >= threshold), score=score)


@dataclass
class BaselineModel:
    """Sparse logistic model over hashed n-gram features.

    Immutable after training by convention; predictions depend only on
    (weights, bias, dim, input).
    """

    task: str
    dim: int
    bias: float
    weights: dict[int, float]
    trained_on: str = ""
    validation_accuracy: float | None = None
    threshold: float = DEFAULT_THRESHOLD

    def score(self, serialized_input: str) -> float:
        margin = self.bias
        for bucket, value in featurize(serialized_input, self.dim).items():
            w = self.weights.get(bucket)
            if w is not None:
                margin += w * value
        return _sigmoid(margin)

    def predict(self, task: str, inputs: Sequence[str]) -> list[ClassifierVerdict]:
        if task != self.task:
            raise ValueError(f"model trained for {self.task!r}, asked for {task!r}")
        return [verdict_from_score(self.score(s), self.threshold) for s in inputs]

    def save(self, path) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "task": self.task,
            "dim": self.dim,
            "bias": self.bias,
            "weights": sorted(self.weights.items()),
            "trained_on": self.trained_on,
            "validation_accuracy": self.validation_accuracy,
            "threshold": self.threshold,
        }
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle)

    @classmethod
    def load(cls, path) -> BaselineModel:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"unknown model format {payload.get('format')!r}")
        return cls(
            task=payload["task"],
            dim=int(payload["dim"]),
            bias=float(payload["bias"]),
            weights={int(k): float(v) for k, v in payload["weights"]},
            trained_on=payload.get("trained_on", ""),
            validation_accuracy=payload.get("validation_accuracy"),
            threshold=float(payload.get("threshold", DEFAULT_THRESHOLD)),
        )


def accuracy(model: BaselineModel, examples: Iterable[tuple[str, int]]) -> float:
    pairs = list(examples)
    if not pairs:
        raise DegenerateLabelsError("cannot score an empty example set")
    hits = sum(
        1
        for text, label in pairs
        if verdict_from_score(model.score(text), model.threshold).label == label
    )
    return hits / len(pairs)


def train_baseline(
    examples: Sequence[tuple[str, int]],
    task: str,
    epochs: int = 5,
    learning_rate: float = 0.5,
    dim: int = DEFAULT_DIM,
    seed: int = 1729,
    validation: Sequence[tuple[str, int]] | None = None,
    trained_on: str = "",
) -> BaselineModel:
    """Train the logistic baseline with seeded SGD passes.

    Deterministic for a fixed (example order, hyperparameters, seed):
    weights start at zero and the per-epoch shuffle is driven by one RNG.
    Raises :class:`DegenerateLabelsError` unless both classes are present.
    """
    if not examples:
        raise DegenerateLabelsError("no training examples")
    labels = {label for _, label in examples}
    if labels != {0, 1}:
        raise DegenerateLabelsError(f"need both classes, got labels {sorted(labels)}")

    featurized = [(featurize(text, dim), label) for text, label in examples]
    rng = random.Random(seed)
    weights: dict[int, float] = {}
    bias = 0.0
    order = list(range(len(featurized)))
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            vector, label = featurized[i]
            margin = bias + sum(
                weights.get(bucket, 0.0) * value for bucket, value in vector.items()
            )
            gradient = _sigmoid(margin) - label
            step = learning_rate * gradient
            bias -= step
            for bucket, value in vector.items():
                weights[bucket] = weights.get(bucket, 0.0) - step * value

    model = BaselineModel(
        task=task, dim=dim, bias=bias, weights=weights, trained_on=trained_on
    )
    if validation:
        model.validation_accuracy = accuracy(model, validation)
    return model


def predict(backend, task: str, inputs: Sequence[str]) -> list[ClassifierVerdict]:
    """Run a batch through any classifier backend, order preserved."""
    if not inputs:
        raise ValueError("predict needs a non-empty batch")
    verdicts = backend.predict(task, list(inputs))
    if len(verdicts) != len(inputs):
        raise ValueError(
            f"backend returned {len(verdicts)} verdicts for {len(inputs)} inputs"
        )
    return verdicts
