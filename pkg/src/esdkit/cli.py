"""Command-line entry point.

Workflow: ingest -> folds -> export-finetune / build-train -> train-baseline
-> postprocess -> evaluate, plus probe, annotate-score, and templates.

Every randomized operation takes an explicit --seed (default 1729) so two
runs with the same config and inputs are byte-identical. Every command
accepts --config FILE (JSON key/value, keys = flag names with underscores)
and --dry-run (print the resolved config, do nothing). Output files are
written atomically (temp file then rename). Module errors exit non-zero
with a machine-readable record on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

from . import metrics, pipeline
from .classifiers import BaselineModel, train_baseline
from .core import (
    Provenance,
    Scenario,
    normalize_event,
    parse_text_corpus,
    read_records,
    record_to_sequence,
    sequence_to_record,
)
from .dataset import (
    DEFAULT_SEED,
    FoldPlan,
    build_relevance_set,
    build_temporal_set,
    examples_to_records,
    export_finetune_lines,
    load_corpus,
    load_fixed_plan,
    load_generated,
    partition_folds,
    records_to_labeled_inputs,
)
from .endpoint import EndpointClient, EndpointConfig, TRANSPORT_SUBPROCESS, TRANSPORT_TCP
from .errors import EsdKitError
from .metrics import AnnotationRecord
from .oracles import OracleClassifier
from .prompts import PromptVariant, probing_prompts, template_manifest

ENV_ENDPOINT_CMD = "ESDKIT_ENDPOINT_CMD"
ENV_ENDPOINT_TCP = "ESDKIT_ENDPOINT_TCP"

GENERATION_MANIFEST = {
    "top_k": 50,
    "nucleus_p": 0.9,
    "max_length": 150,
    "samples_per_scenario": 5,
}


@contextmanager
def atomic_write(path):
    """Write to a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    handle = os.fdopen(fd, "w", encoding="utf-8")
    try:
        yield handle
        handle.close()
        os.replace(tmp, path)
    except BaseException:
        handle.close()
        os.unlink(tmp)
        raise


def _write_jsonl(path, records) -> int:
    count = 0
    with atomic_write(path) as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def _write_json(path, payload) -> None:
    with atomic_write(path) as handle:
        json.dump(payload, handle, indent=2, ensure_ascii=False)
        handle.write("\n")


def _emit(payload, output: str | None) -> None:
    if output:
        _write_json(output, payload)
    else:
        json.dump(payload, sys.stdout, indent=2, ensure_ascii=False)
        sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    if args.format == "text":
        records = parse_text_corpus(Path(args.input).read_text("utf-8"))
    else:
        records = [
            sequence_to_record(record_to_sequence(rec, Provenance.GOLD))
            for _, rec in read_records(args.input)
        ]
    count = _write_jsonl(args.output, records)
    print(f"wrote {count} records to {args.output}")
    return 0


def cmd_folds(args) -> int:
    if args.fixed:
        plan = load_fixed_plan()
    else:
        if not args.corpus:
            raise EsdKitError("either --fixed or --corpus is required")
        plan = partition_folds(load_corpus(args.corpus), k=args.k, seed=args.seed)
    _emit(plan.to_dict(), args.output)
    return 0


def _load_plan(path) -> FoldPlan:
    with open(path, encoding="utf-8") as handle:
        return FoldPlan.from_dict(json.load(handle))


def _scenarios_for_folds(plan: FoldPlan, fold_spec: str | None) -> list[str]:
    if not fold_spec:
        indices = [fold.index for fold in plan.folds]
    else:
        indices = [int(part) for part in fold_spec.split(",") if part.strip()]
    return [name for index in indices for name in plan.fold(index).scenarios]


def cmd_export_finetune(args) -> int:
    corpus = load_corpus(args.corpus)
    scenarios = None
    if args.fold_plan:
        scenarios = _scenarios_for_folds(_load_plan(args.fold_plan), args.folds)
    lines = export_finetune_lines(corpus, PromptVariant[args.variant], scenarios)
    with atomic_write(args.output) as handle:
        for line in lines:
            handle.write(line + "\n")
    if args.manifest:
        _write_json(args.manifest, GENERATION_MANIFEST)
    print(f"wrote {len(lines)} lines to {args.output}")
    return 0


def cmd_build_train(args) -> int:
    corpus = load_corpus(args.corpus)
    train_scenarios = None
    heldout = None
    if args.fold_plan and args.fold is not None:
        plan = _load_plan(args.fold_plan)
        train_scenarios = plan.training_scenarios(args.fold)
        heldout = plan.fold(args.fold).heldout
    out_dir = Path(args.output_dir)
    tasks = ("relevance", "temporal") if args.task == "both" else (args.task,)
    for task in tasks:
        if task == "relevance":
            train = build_relevance_set(
                corpus, train_scenarios, args.neg_per_pos, args.seed
            )
            valid = (
                build_relevance_set(
                    corpus,
                    [heldout],
                    args.neg_per_pos,
                    args.seed + 1,
                    negative_pool=train_scenarios,
                )
                if heldout
                else []
            )
        else:
            train = build_temporal_set(
                corpus, train_scenarios, args.max_pairs_per_esd, args.seed
            )
            valid = (
                build_temporal_set(corpus, [heldout], args.max_pairs_per_esd, args.seed + 1)
                if heldout
                else []
            )
        n = _write_jsonl(out_dir / f"{task}_train.jsonl", examples_to_records(train))
        print(f"{task}: {n} training examples")
        if valid:
            n = _write_jsonl(out_dir / f"{task}_valid.jsonl", examples_to_records(valid))
            print(f"{task}: {n} validation examples (scenario: {heldout})")
    return 0


def _read_labeled(path):
    return records_to_labeled_inputs(rec for _, rec in read_records_any(path))


def read_records_any(path):
    """Line records without the corpus-field requirements."""
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if line:
                yield line_number, json.loads(line)


def cmd_train_baseline(args) -> int:
    train = _read_labeled(args.train)
    validation = _read_labeled(args.validation) if args.validation else None
    model = train_baseline(
        train,
        task=args.task,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        dim=args.dim,
        seed=args.seed,
        validation=validation,
        trained_on=args.trained_on or args.train,
    )
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    tmp = output.with_suffix(output.suffix + ".tmp")
    model.save(tmp)
    os.replace(tmp, output)
    summary = {
        "task": args.task,
        "examples": len(train),
        "validation_accuracy": model.validation_accuracy,
        "model": args.output,
    }
    print(json.dumps(summary))
    return 0


def _resolve_classifiers(args):
    """Pick the classifier backend from flags and environment."""
    closers = []
    endpoint_cmd = getattr(args, "endpoint_cmd", None) or os.environ.get(ENV_ENDPOINT_CMD)
    endpoint_tcp = getattr(args, "endpoint_tcp", None) or os.environ.get(ENV_ENDPOINT_TCP)
    if getattr(args, "oracle_corpus", None):
        oracle = OracleClassifier.from_corpus(load_corpus(args.oracle_corpus))
        return oracle, oracle, closers
    if endpoint_cmd or endpoint_tcp:
        config = EndpointConfig(
            transport=TRANSPORT_SUBPROCESS if endpoint_cmd else TRANSPORT_TCP,
            target=endpoint_cmd or endpoint_tcp,
            timeout_ms=args.endpoint_timeout_ms,
            max_batch=args.endpoint_max_batch,
        )
        client = EndpointClient(config)
        closers.append(client)
        return client, client, closers
    relevance = BaselineModel.load(args.relevance_model) if args.relevance_model else None
    temporal = BaselineModel.load(args.temporal_model) if args.temporal_model else None
    return relevance, temporal, closers


def _pipeline_config(args) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(
        enable_relevance=not args.no_relevance,
        enable_dedup=not args.no_dedup,
        enable_reorder=not args.no_reorder,
        relevance_threshold=args.relevance_threshold,
        dedup_max_distance=args.dedup_max_distance,
    )


def _postprocess_batch(items, config, relevance_clf, temporal_clf):
    """Run the pipeline per ESD; a classifier failure skips that ESD only."""
    outputs, reports = [], []
    for esd, variant in items:
        try:
            result, report = pipeline.run_pipeline(esd, config, relevance_clf, temporal_clf)
        except EsdKitError as exc:
            print(
                f"skipping {esd.esd_id}: {type(exc).__name__}: {exc}", file=sys.stderr
            )
            reports.append(
                {"scenario": esd.scenario.name, "esd_id": esd.esd_id,
                 "variant": variant, "error": str(exc)}
            )
            continue
        outputs.append(sequence_to_record(result, variant))
        reports.append(
            {"scenario": esd.scenario.name, "esd_id": esd.esd_id, "variant": variant}
            | report.to_record()
        )
    return outputs, reports


def cmd_postprocess(args) -> int:
    items = load_generated(args.input)
    relevance_clf, temporal_clf, closers = _resolve_classifiers(args)
    config = _pipeline_config(args)
    if config.enable_relevance and relevance_clf is None:
        raise EsdKitError("relevance step needs --relevance-model, an endpoint, or --oracle-corpus")
    if config.enable_reorder and temporal_clf is None:
        raise EsdKitError("reorder step needs --temporal-model, an endpoint, or --oracle-corpus")
    try:
        outputs, reports = _postprocess_batch(items, config, relevance_clf, temporal_clf)
    finally:
        for closer in closers:
            closer.close()
    count = _write_jsonl(args.output, outputs)
    if args.report:
        _write_jsonl(args.report, reports)
    print(f"postprocessed {count} of {len(items)} ESDs -> {args.output}")
    if config.enable_reorder:
        flags = [r["graph_acyclic"] for r in reports if "graph_acyclic" in r]
        if flags:
            rate = sum(flags) / len(flags)
            print(f"acyclic tournaments: {rate:.1%} of {len(flags)}")
    return 0


def _group_generated(items):
    grouped: dict[str, list] = {}
    for esd, _variant in items:
        grouped.setdefault(esd.scenario.name, []).append(esd)
    return grouped


def _gold_map(corpus):
    return {s.name: list(corpus.esds_for(s.id)) for s in corpus.scenarios}


def cmd_evaluate(args) -> int:
    gold_corpus = load_corpus(args.gold)
    gold = _gold_map(gold_corpus)
    plan = _load_plan(args.fold_plan) if args.fold_plan else None
    items = load_generated(args.generated)

    if not args.ablation:
        report = metrics.evaluate(_group_generated(items), gold, plan)
        _emit(report.to_record(), args.output)
        if args.per_esd:
            _write_jsonl(
                args.per_esd,
                (
                    {"scenario": s, "esd_id": e, "bleu": x}
                    for s, e, x in report.per_esd
                ),
            )
        if args.table:
            print(f"mean BLEU: {report.fold_mean:.1f} ({report.fold_std:.1f})")
        return 0

    relevance_clf, temporal_clf, closers = _resolve_classifiers(args)
    if relevance_clf is None or temporal_clf is None:
        raise EsdKitError("--ablation needs classifiers (models, endpoint, or --oracle-corpus)")
    by_variant: dict[str, list] = {}
    for esd, variant in items:
        by_variant.setdefault(variant, []).append((esd, variant))
    rows = []
    try:
        for name in pipeline.ABLATION_ORDER:
            config = pipeline.PipelineConfig.ablation(name)
            row = {"config": name, "variants": {}}
            for variant, variant_items in by_variant.items():
                outputs, _reports = _postprocess_batch(
                    variant_items, config, relevance_clf, temporal_clf
                )
                grouped: dict[str, list] = {}
                for record in outputs:
                    seq = record_to_sequence(record, Provenance.GENERATED)
                    grouped.setdefault(seq.scenario.name, []).append(seq)
                report = metrics.evaluate(grouped, gold, plan)
                row["variants"][variant] = {
                    "mean": report.fold_mean,
                    "std": report.fold_std,
                }
            rows.append(row)
    finally:
        for closer in closers:
            closer.close()
    _emit({"ablation": rows}, args.output)
    if args.table:
        variants = list(by_variant)
        print("config  " + "  ".join(f"{v:>14}" for v in variants))
        for row in rows:
            cells = [
                "{mean:.1f} ({std:.1f})".format(**row["variants"][v])
                for v in variants
            ]
            print(f"{row['config']:>6}  " + "  ".join(f"{c:>14}" for c in cells))
    return 0


def cmd_probe(args) -> int:
    scenario = Scenario.from_name(args.scenario)
    seeds = [normalize_event(text, i) for i, text in enumerate(args.seed_event or [])]
    prompts = probing_prompts(scenario, seeds)
    if args.json:
        _emit(
            [
                {"beginning": p.beginning_index, "continuation": p.continuation_index,
                 "text": p.text}
                for p in prompts
            ],
            args.output,
        )
    else:
        lines = [p.text for p in prompts]
        if args.output:
            with atomic_write(args.output) as handle:
                handle.write("\n".join(lines) + "\n")
        else:
            print("\n".join(lines))
    return 0


def cmd_annotate_score(args) -> int:
    records = [
        AnnotationRecord.from_record(rec) for _, rec in read_records_any(args.annotations)
    ]
    scores = metrics.manual_scores(records)
    agreement = metrics.agreement_summary(records)
    payload = {"scores": scores, "agreement": agreement, "records": len(records)}
    _emit(payload, args.output)
    if args.table:
        print(
            f"R={scores['R']:.1f}%  O={scores['O']:.1f}%  M={scores['M']:.2f}  "
            f"kappa_R={agreement['kappa_R']:.2f}  kappa_O={agreement['kappa_O']:.2f}  "
            f"rho_M={agreement['rho_M']:.2f}"
        )
    return 0


def cmd_templates(args) -> int:
    _emit(template_manifest(), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with default flag values")
    parser.add_argument(
        "--dry-run", action="store_true", help="print resolved config and exit"
    )


def _add_classifier_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--relevance-model", help="baseline model file for Step 1")
    parser.add_argument("--temporal-model", help="baseline model file for Step 3")
    parser.add_argument(
        "--endpoint-cmd",
        help=f"external worker command (subprocess pipe); also ${ENV_ENDPOINT_CMD}",
    )
    parser.add_argument(
        "--endpoint-tcp",
        help=f"external worker host:port; also ${ENV_ENDPOINT_TCP}",
    )
    parser.add_argument("--endpoint-timeout-ms", type=int, default=10_000)
    parser.add_argument("--endpoint-max-batch", type=int, default=64)
    parser.add_argument(
        "--oracle-corpus",
        help="gold corpus whose events/order act as oracle classifiers",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esdkit",
        description="Generate, post-process, and evaluate event sequence descriptions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a raw corpus to canonical line records")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--format", choices=("text", "jsonl"), default="text")
    _add_common(p)
    p.set_defaults(func=cmd_ingest, required_keys=("input", "output"))

    p = sub.add_parser("folds", help="emit a fold plan (random or the fixed plan)")
    p.add_argument("--fixed", action="store_true", help="use the canonical 8-fold plan")
    p.add_argument("--corpus")
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output")
    _add_common(p)
    p.set_defaults(func=cmd_folds)

    p = sub.add_parser("export-finetune", help="write <BOS>/<EOS>-wrapped training lines")
    p.add_argument("--corpus")
    p.add_argument("--variant", choices=[v.name for v in PromptVariant])
    p.add_argument("--fold-plan")
    p.add_argument("--folds", help="comma-separated fold indices to include")
    p.add_argument("--output")
    p.add_argument("--manifest", help="also write the generation-parameters manifest")
    _add_common(p)
    p.set_defaults(func=cmd_export_finetune, required_keys=("corpus", "variant", "output"))

    p = sub.add_parser("build-train", help="build classifier training sets")
    p.add_argument("--corpus")
    p.add_argument("--fold-plan")
    p.add_argument("--fold", type=int, help="test fold whose training scenarios to use")
    p.add_argument("--task", choices=("relevance", "temporal", "both"), default="both")
    p.add_argument("--neg-per-pos", type=int, default=1)
    p.add_argument("--max-pairs-per-esd", type=int, default=50)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output-dir")
    _add_common(p)
    p.set_defaults(func=cmd_build_train, required_keys=("corpus", "output_dir"))

    p = sub.add_parser("train-baseline", help="train the hashed-feature logistic baseline")
    p.add_argument("--train")
    p.add_argument("--validation")
    p.add_argument("--task", choices=("relevance", "temporal"))
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--dim", type=int, default=1 << 18)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trained-on", help="fold descriptor stored in the model file")
    p.add_argument("--output")
    _add_common(p)
    p.set_defaults(func=cmd_train_baseline, required_keys=("train", "task", "output"))

    p = sub.add_parser("postprocess", help="run the correction pipeline over generated ESDs")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--report", help="write per-ESD pipeline reports here")
    p.add_argument("--no-relevance", action="store_true")
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--no-reorder", action="store_true")
    p.add_argument("--relevance-threshold", type=float, default=0.5)
    p.add_argument("--dedup-max-distance", type=int, default=0)
    _add_classifier_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_postprocess, required_keys=("input", "output"))

    p = sub.add_parser("evaluate", help="score generated ESDs against gold references")
    p.add_argument("--generated")
    p.add_argument("--gold")
    p.add_argument("--fold-plan")
    p.add_argument("--output")
    p.add_argument("--per-esd", help="also write per-ESD scores as line records")
    p.add_argument("--table", action="store_true", help="also print a summary table")
    p.add_argument(
        "--ablation",
        action="store_true",
        help="evaluate the FT / +R / +R+D / SIF pipeline configurations",
    )
    _add_classifier_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate, required_keys=("generated", "gold"))

    p = sub.add_parser("probe", help="print the 16 probing prompts for a scenario")
    p.add_argument("--scenario")
    p.add_argument(
        "--seed-event", action="append", help="seed event (give twice)", default=None
    )
    p.add_argument("--json", action="store_true")
    p.add_argument("--output")
    _add_common(p)
    p.set_defaults(func=cmd_probe, required_keys=("scenario",))

    p = sub.add_parser("annotate-score", help="aggregate manual annotation records")
    p.add_argument("--annotations")
    p.add_argument("--output")
    p.add_argument("--table", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_annotate_score, required_keys=("annotations",))

    p = sub.add_parser("templates", help="print the prompt template manifest")
    p.add_argument("--output")
    _add_common(p)
    p.set_defaults(func=cmd_templates)

    return parser


def _apply_config_file(parser, argv):
    """Load --config defaults for the chosen subcommand before final parse."""
    probe_parser = argparse.ArgumentParser(add_help=False)
    probe_parser.add_argument("--config")
    known, _ = probe_parser.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config, encoding="utf-8") as handle:
        values = json.load(handle)
    if not isinstance(values, dict):
        raise EsdKitError("--config must contain a JSON object")
    normalized = {key.replace("-", "_"): value for key, value in values.items()}
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sub_parser in action.choices.values():
            known_keys = {a.dest for a in sub_parser._actions}  # noqa: SLF001
            sub_parser.set_defaults(
                **{k: v for k, v in normalized.items() if k in known_keys}
            )


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        for key in getattr(args, "required_keys", ()):
            if getattr(args, key, None) in (None, ""):
                raise EsdKitError(f"missing required option --{key.replace('_', '-')}")
        if args.dry_run:
            resolved = {
                key: value
                for key, value in sorted(vars(args).items())
                if key not in ("func", "dry_run", "config", "required_keys")
            }
            json.dump({"command": args.command} | resolved, sys.stdout, indent=2, default=str)
            sys.stdout.write("\n")
            return 0
        return args.func(args)
    except (EsdKitError, OSError) as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)}, sys.stderr
        )
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
