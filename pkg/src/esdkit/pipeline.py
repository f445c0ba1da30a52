"""Three-step post-processing of generated event sequences.

Generated ESDs are corrected in a fixed order: irrelevant events are removed
(Step 1), exact repetitions are collapsed (Step 2), and the remaining events
are reordered (Step 3) by querying a temporal classifier on every unordered
pair, building a tournament graph, and topologically sorting it. If the
tournament is cyclic the incoming order is kept.

Every run is described by a :class:`PipelineReport`; the fraction of acyclic
tournaments across runs is a quality statistic of the temporal classifier.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .classifiers import TASK_RELEVANCE, TASK_TEMPORAL, serialize_input
from .core import Event, EventSequence, Provenance
from .errors import EmptyInputError


@dataclass(frozen=True)
class PipelineConfig:
    """Which steps run, and their knobs. Disabled steps are identity."""

    enable_relevance: bool = True
    enable_dedup: bool = True
    enable_reorder: bool = True
    relevance_threshold: float = 0.5
    dedup_max_distance: int = 0

    @classmethod
    def ablation(cls, name: str) -> PipelineConfig:
        """The four ablation presets: FT, +R, +R+D, SIF (all steps)."""
        presets = {
            "FT": (False, False, False),
            "+R": (True, False, False),
            "+R+D": (True, True, False),
            "SIF": (True, True, True),
        }
        relevance, dedup, reorder = presets[name]
        return cls(enable_relevance=relevance, enable_dedup=dedup, enable_reorder=reorder)


ABLATION_ORDER = ("FT", "+R", "+R+D", "SIF")


@dataclass(frozen=True)
class OrderGraph:
    """Tournament over one ESD's events: edge (u, v) means u precedes v.

    Nodes are original indices, listed in the sequence order the graph was
    built from. Exactly one edge per unordered pair, no self-loops.
    """

    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        n = len(self.nodes)
        if len(self.edges) != n * (n - 1) // 2:
            raise ValueError(
                f"not a tournament: {len(self.edges)} edges for {n} nodes"
            )
        node_set = set(self.nodes)
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if u not in node_set or v not in node_set:
                raise ValueError(f"edge ({u}, {v}) references unknown node")


@dataclass
class PipelineReport:
    """What each step did to one ESD."""

    removed_irrelevant: list[tuple[str, float]] = field(default_factory=list)
    removed_duplicates: list[tuple[str, int]] = field(default_factory=list)
    reorder_applied: bool = False
    graph_acyclic: bool = False
    pair_queries: int = 0
    final_permutation: list[int] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "removed_irrelevant": [[t, s] for t, s in self.removed_irrelevant],
            "removed_duplicates": [[t, k] for t, k in self.removed_duplicates],
            "reorder_applied": self.reorder_applied,
            "graph_acyclic": self.graph_acyclic,
            "pair_queries": self.pair_queries,
            "final_permutation": list(self.final_permutation),
        }


def levenshtein(a: str, b: str) -> int:
    """Minimum single-character edits (insert, delete, substitute) a -> b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,          # delete from a
                    current[j - 1] + 1,       # insert into a
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def step_relevance(
    esd: EventSequence, clf, threshold: float = 0.5
) -> tuple[EventSequence, list[tuple[str, float]]]:
    """Drop events the relevance classifier scores below threshold."""
    if not esd.events:
        return esd, []
    inputs = [serialize_input(esd.scenario.name, [e.text]) for e in esd.events]
    verdicts = clf.predict(TASK_RELEVANCE, inputs)
    kept, removed = [], []
    for event, verdict in zip(esd.events, verdicts):
        if verdict.score >= threshold:
            kept.append(event)
        else:
            removed.append((event.text, verdict.score))
    return replace(esd, events=tuple(kept)), removed


def step_dedup(
    esd: EventSequence, max_distance: int = 0
) -> tuple[EventSequence, list[tuple[str, int]]]:
    """Collapse repeated events, keeping the earliest occurrence.

    With the default distance 0 only exact copies are repetitions; nearby
    pairs like "open a faucet" / "close a faucet" are deliberately kept.
    """
    kept: list[Event] = []
    removed: list[tuple[str, int]] = []
    for event in esd.events:
        match = None
        if max_distance == 0:
            for survivor in kept:
                if survivor.text == event.text:
                    match = survivor
                    break
        else:
            for survivor in kept:
                if levenshtein(survivor.text, event.text) <= max_distance:
                    match = survivor
                    break
        if match is None:
            kept.append(event)
        else:
            removed.append((event.text, match.original_index))
    return replace(esd, events=tuple(kept)), removed


def build_order_graph(esd: EventSequence, clf) -> OrderGraph:
    """Query every unordered event pair once, in current-sequence orientation.

    A label-1 verdict on (e_i, e_j) with i < j keeps the edge i -> j,
    otherwise the edge flips. One query per pair guarantees a tournament.
    """
    events = esd.events
    nodes = tuple(e.original_index for e in events)
    pairs = [
        (i, j) for i in range(len(events)) for j in range(i + 1, len(events))
    ]
    if not pairs:
        return OrderGraph(nodes=nodes, edges=frozenset())
    inputs = [
        serialize_input(esd.scenario.name, [events[i].text, events[j].text])
        for i, j in pairs
    ]
    verdicts = clf.predict(TASK_TEMPORAL, inputs)
    edges = set()
    for (i, j), verdict in zip(pairs, verdicts):
        u, v = nodes[i], nodes[j]
        edges.add((u, v) if verdict.label == 1 else (v, u))
    return OrderGraph(nodes=nodes, edges=frozenset(edges))


def topological_order(graph: OrderGraph) -> tuple[int, ...] | None:
    """Unique total order of an acyclic tournament, or ``None`` if cyclic.

    Zero-in-degree elimination: a transitive tournament exposes exactly one
    source at every round, so the order is unique. Hypothetical ties (only
    possible for non-tournament inputs) break toward the smallest node.
    """
    in_degree = {node: 0 for node in graph.nodes}
    successors: dict[int, list[int]] = {node: [] for node in graph.nodes}
    for u, v in graph.edges:
        in_degree[v] += 1
        successors[u].append(v)
    order: list[int] = []
    ready = sorted(node for node, deg in in_degree.items() if deg == 0)
    while ready:
        node = ready.pop(0)
        order.append(node)
        for succ in sorted(successors[node]):
            in_degree[succ] -= 1
            if in_degree[succ] == 0:
                ready.append(succ)
        ready.sort()
    if len(order) != len(graph.nodes):
        return None
    return tuple(order)


def step_reorder(
    esd: EventSequence, clf
) -> tuple[EventSequence, bool, bool, int]:
    """Reorder events along the tournament's topological order.

    Returns (sequence, reorder_applied, graph_acyclic, pair_queries). On a
    cyclic tournament the incoming order is preserved.
    """
    graph = build_order_graph(esd, clf)
    queries = len(graph.edges)
    order = topological_order(graph)
    if order is None:
        return esd, False, False, queries
    by_index = {e.original_index: e for e in esd.events}
    reordered = tuple(by_index[node] for node in order)
    return replace(esd, events=reordered), True, True, queries


def run_pipeline(
    esd: EventSequence,
    config: PipelineConfig,
    relevance_clf=None,
    temporal_clf=None,
) -> tuple[EventSequence, PipelineReport]:
    """Apply the enabled steps in relevance -> dedup -> reorder order.

    The returned sequence has postprocessed provenance and carries the
    report. Classifiers are only required for their enabled steps.
    """
    report = PipelineReport()
    current = esd
    if current.provenance is Provenance.GOLD:
        # intermediate states may be empty, which gold forbids
        current = replace(current, provenance=Provenance.GENERATED)
    if config.enable_relevance:
        if relevance_clf is None:
            raise ValueError("relevance step enabled but no classifier given")
        current, report.removed_irrelevant = step_relevance(
            current, relevance_clf, config.relevance_threshold
        )
    if config.enable_dedup:
        current, report.removed_duplicates = step_dedup(
            current, config.dedup_max_distance
        )
    if config.enable_reorder:
        if temporal_clf is None:
            raise ValueError("reorder step enabled but no classifier given")
        current, applied, acyclic, queries = step_reorder(current, temporal_clf)
        report.reorder_applied = applied
        report.graph_acyclic = acyclic
        report.pair_queries = queries
    report.final_permutation = [e.original_index for e in current.events]
    result = replace(current, provenance=Provenance.POSTPROCESSED, report=report)
    return result, report


def acyclicity_rate(reports: Iterable[PipelineReport]) -> float:
    """Fraction of reorder-enabled runs whose tournament was acyclic."""
    reports = list(reports)
    if not reports:
        raise EmptyInputError("no reports")
    return sum(1 for r in reports if r.graph_acyclic) / len(reports)


def acyclicity_summary(
    groups: Mapping[object, Sequence[PipelineReport]]
) -> dict:
    """Acyclicity rate per group plus mean and sample std across groups.

    Groups are typically keyed by (variant, fold); the summary mirrors the
    "mean +/- std over variants and folds" aggregation shape.
    """
    if not groups:
        raise EmptyInputError("no groups")
    per_group = {key: acyclicity_rate(reports) for key, reports in groups.items()}
    rates = list(per_group.values())
    mean = statistics.fmean(rates)
    std = statistics.stdev(rates) if len(rates) > 1 else 0.0
    return {"per_group": per_group, "mean": mean, "std": std, "groups": len(rates)}
