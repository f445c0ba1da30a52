"""Toolkit for generating, post-processing, and evaluating event sequence
descriptions (ESDs) of everyday scenarios.

Pieces: domain types and canonical forms (:mod:`esdkit.core`), prompt
rendering and parsing (:mod:`esdkit.prompts`), corpus folds and classifier
training sets (:mod:`esdkit.dataset`), pluggable binary classifiers
(:mod:`esdkit.classifiers`, :mod:`esdkit.endpoint`), the three-step
correction pipeline (:mod:`esdkit.pipeline`), and evaluation metrics
(:mod:`esdkit.metrics`).
"""

from .classifiers import (
    BaselineModel,
    ClassifierVerdict,
    featurize,
    predict,
    serialize_input,
    train_baseline,
)
from .core import (
    Corpus,
    Event,
    EventSequence,
    Provenance,
    Scenario,
    canonical_numbered_form,
    normalize_event,
    sequence_from_texts,
)
from .dataset import (
    FoldPlan,
    build_relevance_set,
    build_temporal_set,
    export_finetune_lines,
    load_corpus,
    load_fixed_plan,
    partition_folds,
)
from .endpoint import EndpointClient, EndpointConfig
from .metrics import (
    AnnotationRecord,
    BleuReport,
    bleu,
    cohen_kappa,
    evaluate,
    manual_scores,
    pearson,
    spearman_rho,
)
from .pipeline import (
    OrderGraph,
    PipelineConfig,
    PipelineReport,
    acyclicity_rate,
    build_order_graph,
    levenshtein,
    run_pipeline,
    step_dedup,
    step_relevance,
    step_reorder,
    topological_order,
)
from .prompts import (
    ProbingPrompt,
    PromptVariant,
    decode,
    encode,
    infinitive_form,
    probing_prompts,
    template_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "BaselineModel",
    "BleuReport",
    "ClassifierVerdict",
    "Corpus",
    "EndpointClient",
    "EndpointConfig",
    "Event",
    "EventSequence",
    "FoldPlan",
    "OrderGraph",
    "PipelineConfig",
    "PipelineReport",
    "ProbingPrompt",
    "PromptVariant",
    "Provenance",
    "Scenario",
    "acyclicity_rate",
    "bleu",
    "build_order_graph",
    "build_relevance_set",
    "build_temporal_set",
    "canonical_numbered_form",
    "cohen_kappa",
    "decode",
    "encode",
    "evaluate",
    "export_finetune_lines",
    "featurize",
    "infinitive_form",
    "levenshtein",
    "load_corpus",
    "load_fixed_plan",
    "manual_scores",
    "normalize_event",
    "partition_folds",
    "pearson",
    "predict",
    "probing_prompts",
    "run_pipeline",
    "sequence_from_texts",
    "serialize_input",
    "spearman_rho",
    "step_dedup",
    "step_relevance",
    "step_reorder",
    "template_manifest",
    "topological_order",
    "train_baseline",
]
