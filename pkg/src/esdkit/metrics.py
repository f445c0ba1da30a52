"""Automatic and manual evaluation of generated event sequences.

Automatic: multi-reference BLEU with add-1 smoothing, n-grams up to 4, over
the canonical numbered form of candidate and references, aggregated per
scenario and per fold (fold mean/std on the 0-100 table scale; std is the
sample standard deviation, n-1 denominator).

Manual: aggregation of two annotators' judgments into R (% relevant events),
O (% correctly ordered consecutive pairs, restricted to pairs whose both
events both annotators marked relevant), and M (mean 1-4 missing-events
severity), plus Cohen's kappa and Spearman's rho for agreement.
"""

from __future__ import annotations

import logging
import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import EventSequence, canonical_numbered_form
from .errors import (
    AlignmentError,
    EmptyInputError,
    EmptyReferencesError,
    LengthMismatchError,
    MissingReferencesError,
    ZeroVarianceError,
)

logger = logging.getLogger(__name__)

MAX_NGRAM_ORDER = 4


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, references: Sequence[str], max_n: int = MAX_NGRAM_ORDER) -> float:
    """Multi-reference BLEU in [0, 1] over whitespace tokens.

    Modified n-gram precision clips each n-gram count by its maximum count
    across all references. Smoothing adds 1 to numerator and denominator for
    orders n >= 2 (unigram precision unsmoothed; a zero unigram overlap
    scores 0). Brevity penalty uses the reference length closest to the
    candidate length, ties resolved toward the shorter reference.

    An empty candidate scores 0 by convention (logged); empty references are
    an error.
    """
    if not references:
        raise EmptyReferencesError("bleu needs at least one reference")
    cand_tokens = candidate.split()
    if not cand_tokens:
        logger.warning("empty candidate scored as 0")
        return 0.0
    ref_token_lists = [r.split() for r in references]

    log_precision_sum = 0.0
    for n in range(1, max_n + 1):
        counts = _ngram_counts(cand_tokens, n)
        total = sum(counts.values())
        matches = 0
        for gram, count in counts.items():
            best = max(_ngram_counts(ref, n)[gram] for ref in ref_token_lists)
            matches += min(count, best)
        if n == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        else:
            precision = (matches + 1) / (total + 1)
        log_precision_sum += math.log(precision) / max_n

    c = len(cand_tokens)
    r = min((len(ref) for ref in ref_token_lists), key=lambda length: (abs(length - c), length))
    brevity = 1.0 if c > r else math.exp(1 - r / c)
    return brevity * math.exp(log_precision_sum)


@dataclass(frozen=True)
class BleuReport:
    """Per-ESD scores with scenario and fold aggregation.

    ``per_esd`` and ``per_scenario_mean`` hold raw scores in [0, 1];
    ``fold_mean``/``fold_std`` are the headline numbers on the 0-100 table
    scale (mean of per-fold means, sample std across folds; 0.0 for a single
    fold).
    """

    per_esd: tuple[tuple[str, str, float], ...]
    per_scenario_mean: dict[str, float]
    per_fold_mean: dict[int, float]
    fold_mean: float
    fold_std: float

    def to_record(self) -> dict:
        return {
            "per_esd": [[s, e, x] for s, e, x in self.per_esd],
            "per_scenario_mean": dict(self.per_scenario_mean),
            "per_fold_mean": {str(k): v for k, v in self.per_fold_mean.items()},
            "fold_mean": self.fold_mean,
            "fold_std": self.fold_std,
            "std_kind": "sample",
        }


def evaluate(
    generated: Mapping[str, Sequence[EventSequence]],
    gold: Mapping[str, Sequence[EventSequence]],
    fold_plan=None,
) -> BleuReport:
    """Score generated ESDs against all gold references of their scenario.

    Per-ESD BLEU is averaged into a per-scenario mean, scenario means into a
    per-fold mean (folds taken from ``fold_plan``; without one, everything is
    a single fold), and fold means into the headline mean/std.
    """
    per_esd: list[tuple[str, str, float]] = []
    per_scenario: dict[str, float] = {}
    for scenario, sequences in generated.items():
        if scenario not in gold or not gold[scenario]:
            raise MissingReferencesError(f"no gold references for {scenario!r}")
        references = [canonical_numbered_form(ref) for ref in gold[scenario]]
        scores = []
        for seq in sequences:
            candidate = canonical_numbered_form(seq) if seq.events else ""
            score = bleu(candidate, references)
            scores.append(score)
            per_esd.append((scenario, seq.esd_id, score))
        per_scenario[scenario] = statistics.fmean(scores) if scores else 0.0

    fold_of: dict[str, int] = {}
    if fold_plan is not None:
        for fold in fold_plan.folds:
            for name in fold.scenarios:
                fold_of[name] = fold.index
    by_fold: dict[int, list[float]] = {}
    for scenario, mean in per_scenario.items():
        by_fold.setdefault(fold_of.get(scenario, 0), []).append(mean)
    per_fold_mean = {index: statistics.fmean(vals) for index, vals in by_fold.items()}

    fold_means = list(per_fold_mean.values())
    headline_mean = 100.0 * statistics.fmean(fold_means) if fold_means else 0.0
    headline_std = (
        100.0 * statistics.stdev(fold_means) if len(fold_means) > 1 else 0.0
    )
    return BleuReport(
        per_esd=tuple(per_esd),
        per_scenario_mean=per_scenario,
        per_fold_mean=per_fold_mean,
        fold_mean=headline_mean,
        fold_std=headline_std,
    )


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's judgment of one generated ESD.

    ``event_relevance`` has one flag per event; ``pair_order_correct`` one
    per consecutive pair; ``missing`` is the 1-4 severity of missing events
    (1: none or almost none, 4: severe).
    """

    annotator: str
    scenario: str
    esd_id: str
    event_relevance: tuple[bool, ...]
    pair_order_correct: tuple[bool, ...]
    missing: int

    def __post_init__(self):
        expected_pairs = max(len(self.event_relevance) - 1, 0)
        if len(self.pair_order_correct) != expected_pairs:
            raise AlignmentError(
                f"{self.esd_id!r}/{self.annotator!r}: {len(self.event_relevance)}"
                f" events need {expected_pairs} pair judgments,"
                f" got {len(self.pair_order_correct)}"
            )
        if self.missing not in (1, 2, 3, 4):
            raise ValueError(f"missing must be 1..4, got {self.missing}")

    @classmethod
    def from_record(cls, record: Mapping) -> AnnotationRecord:
        return cls(
            annotator=str(record["annotator"]),
            scenario=str(record["scenario"]),
            esd_id=str(record["esd_id"]),
            event_relevance=tuple(bool(x) for x in record["relevance"]),
            pair_order_correct=tuple(bool(x) for x in record["order"]),
            missing=int(record["missing"]),
        )


def _paired_by_esd(
    records: Iterable[AnnotationRecord],
) -> dict[tuple[str, str], tuple[AnnotationRecord, AnnotationRecord]]:
    by_esd: dict[tuple[str, str], list[AnnotationRecord]] = {}
    for record in records:
        by_esd.setdefault((record.scenario, record.esd_id), []).append(record)
    paired = {}
    for key, group in by_esd.items():
        if len(group) != 2:
            raise AlignmentError(f"{key}: expected 2 annotators, got {len(group)}")
        first, second = group
        if len(first.event_relevance) != len(second.event_relevance):
            raise AlignmentError(f"{key}: annotators judged different event counts")
        paired[key] = (first, second)
    return paired


def manual_scores(records: Iterable[AnnotationRecord]) -> dict[str, float]:
    """Aggregate two annotators' judgments into R, O, and M.

    R: percentage of relevance judgments marked relevant, averaged across
    annotators. O: percentage of consecutive pairs judged correctly ordered,
    counting only pairs whose both events were marked relevant by both
    annotators, averaged across annotators. M: mean missing severity across
    annotators and ESDs.
    """
    paired = _paired_by_esd(records)
    if not paired:
        raise EmptyInputError("no annotation records")

    relevant = [0, 0]
    events_total = 0
    ordered = [0, 0]
    pairs_total = 0
    missing: list[int] = []
    for first, second in paired.values():
        events_total += len(first.event_relevance)
        relevant[0] += sum(first.event_relevance)
        relevant[1] += sum(second.event_relevance)
        missing.extend([first.missing, second.missing])
        for pair_index in range(len(first.pair_order_correct)):
            i, j = pair_index, pair_index + 1
            both_relevant = (
                first.event_relevance[i]
                and first.event_relevance[j]
                and second.event_relevance[i]
                and second.event_relevance[j]
            )
            if not both_relevant:
                continue
            pairs_total += 1
            ordered[0] += first.pair_order_correct[pair_index]
            ordered[1] += second.pair_order_correct[pair_index]

    r_score = (
        statistics.fmean(100.0 * r / events_total for r in relevant)
        if events_total
        else 0.0
    )
    o_score = (
        statistics.fmean(100.0 * o / pairs_total for o in ordered)
        if pairs_total
        else 0.0
    )
    return {"R": r_score, "O": o_score, "M": statistics.fmean(missing)}


def cohen_kappa(a: Sequence, b: Sequence) -> float:
    """Chance-corrected agreement between two categorical label lists.

    kappa = (p_o - p_e) / (1 - p_e). Degenerate guard: when chance agreement
    p_e is 1 (both annotators constant and identical marginals), kappa is 1
    for perfect agreement and 0 otherwise.
    """
    if len(a) != len(b) or not a:
        raise LengthMismatchError(f"need equal non-empty lists, got {len(a)} and {len(b)}")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    count_a = Counter(a)
    count_b = Counter(b)
    p_e = sum(
        (count_a[c] / n) * (count_b[c] / n) for c in set(count_a) | set(count_b)
    )
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def _fractional_ranks(values: Sequence[float]) -> list[float]:
    # ties share the average of the ranks they span
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of two paired samples."""
    if len(x) != len(y) or len(x) < 2:
        raise LengthMismatchError(f"need paired lists of length >= 2, got {len(x)}, {len(y)}")
    mean_x = statistics.fmean(x)
    mean_y = statistics.fmean(y)
    dx = [v - mean_x for v in x]
    dy = [v - mean_y for v in y]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise ZeroVarianceError("correlation undefined for a constant list")
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation: Pearson over fractional ranks (ties averaged)."""
    if len(x) != len(y) or len(x) < 2:
        raise LengthMismatchError(f"need paired lists of length >= 2, got {len(x)}, {len(y)}")
    return pearson(_fractional_ranks(x), _fractional_ranks(y))


def agreement_summary(records: Iterable[AnnotationRecord]) -> dict[str, float]:
    """Inter-annotator agreement: kappa for R and O, rho for M.

    Kappa for O is computed over the same restricted pair set that the O
    metric uses (both events relevant per both annotators).
    """
    paired = _paired_by_esd(records)
    if not paired:
        raise EmptyInputError("no annotation records")
    rel_a: list[int] = []
    rel_b: list[int] = []
    ord_a: list[int] = []
    ord_b: list[int] = []
    miss_a: list[int] = []
    miss_b: list[int] = []
    for first, second in paired.values():
        rel_a.extend(int(v) for v in first.event_relevance)
        rel_b.extend(int(v) for v in second.event_relevance)
        miss_a.append(first.missing)
        miss_b.append(second.missing)
        for pair_index in range(len(first.pair_order_correct)):
            i, j = pair_index, pair_index + 1
            if (
                first.event_relevance[i]
                and first.event_relevance[j]
                and second.event_relevance[i]
                and second.event_relevance[j]
            ):
                ord_a.append(int(first.pair_order_correct[pair_index]))
                ord_b.append(int(second.pair_order_correct[pair_index]))
    summary: dict[str, float] = {}
    summary["kappa_R"] = cohen_kappa(rel_a, rel_b) if rel_a else float("nan")
    summary["kappa_O"] = cohen_kappa(ord_a, ord_b) if ord_a else float("nan")
    try:
        summary["rho_M"] = spearman_rho(miss_a, miss_b)
    except (LengthMismatchError, ZeroVarianceError):
        summary["rho_M"] = float("nan")
    return summary
