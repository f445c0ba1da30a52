from __future__ import annotations

import json
import random

import pytest

from esdkit.cli import main
from esdkit.core import sequence_to_record
from esdkit.dataset import load_fixed_plan
from esdkit.oracles import corrupt, make_gold_esd


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")


@pytest.fixture
def synthetic_files(tmp_path):
    """Gold corpus + corrupted generations whose gold truth is recoverable."""
    rng = random.Random(2024)
    gold_records, generated_records = [], []
    for i in range(6):
        gold = make_gold_esd(rng, i, rng.randint(4, 8))
        gold_records.append(sequence_to_record(gold))
        for k in range(2):
            noisy = corrupt(gold, rng, n_foreign=2, n_duplicates=1)
            record = sequence_to_record(noisy, variant="SEQUENCE")
            record["esd_id"] = f"{gold.esd_id}-gen{k}"
            generated_records.append(record)
    gold_path = tmp_path / "gold.jsonl"
    generated_path = tmp_path / "generated.jsonl"
    write_jsonl(gold_path, gold_records)
    write_jsonl(generated_path, generated_records)
    return gold_path, generated_path


class TestIngest:
    def test_text_to_canonical(self, tmp_path, capsys):
        raw = tmp_path / "raw.txt"
        raw.write_text(
            "Baking a cake\n1. Get a cake mix\n2. preheat oven\n\n"
            "baking a cake\nmix\nbake\n"
        )
        out = tmp_path / "corpus.jsonl"
        code, stdout, _ = run(capsys, "ingest", "--input", str(raw), "--output", str(out))
        assert code == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(records) == 2
        assert records[0]["events"] == ["get a cake mix", "preheat oven"]


class TestFolds:
    def test_fixed_plan_matches_data_file(self, capsys):
        code, stdout, _ = run(capsys, "folds", "--fixed")
        assert code == 0
        plan = json.loads(stdout)
        assert plan == load_fixed_plan().to_dict()
        assert plan["folds"][0]["heldout"] == "cooking pasta"

    def test_random_plan_deterministic(self, toy_corpus_file, capsys):
        code, first, _ = run(
            capsys, "folds", "--corpus", str(toy_corpus_file), "--k", "2", "--seed", "5"
        )
        assert code == 0
        code, second, _ = run(
            capsys, "folds", "--corpus", str(toy_corpus_file), "--k", "2", "--seed", "5"
        )
        assert first == second
        plan = json.loads(first)
        names = [n for fold in plan["folds"] for n in fold["scenarios"]]
        assert sorted(names) == sorted(set(names))
        assert len(names) == 4

    def test_error_record_on_bad_args(self, capsys):
        code, _, stderr = run(capsys, "folds")
        assert code == 1
        error = json.loads(stderr)
        assert error["error"] == "EsdKitError"


class TestExportFinetune:
    def test_lines_and_manifest(self, toy_corpus_file, tmp_path, capsys):
        out = tmp_path / "train.txt"
        manifest = tmp_path / "generation.json"
        code, _, _ = run(
            capsys,
            "export-finetune",
            "--corpus", str(toy_corpus_file),
            "--variant", "DIRECT",
            "--output", str(out),
            "--manifest", str(manifest),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 12
        assert all(line.startswith("<BOS> ") and line.endswith(" <EOS>") for line in lines)
        params = json.loads(manifest.read_text())
        assert params == {
            "top_k": 50, "nucleus_p": 0.9, "max_length": 150, "samples_per_scenario": 5
        }


class TestTrainFlow:
    def test_build_train_and_baseline(self, toy_corpus_file, tmp_path, capsys):
        out_dir = tmp_path / "sets"
        code, stdout, _ = run(
            capsys,
            "build-train",
            "--corpus", str(toy_corpus_file),
            "--task", "both",
            "--output-dir", str(out_dir),
            "--seed", "3",
        )
        assert code == 0
        relevance = out_dir / "relevance_train.jsonl"
        temporal = out_dir / "temporal_train.jsonl"
        assert relevance.exists() and temporal.exists()

        model_path = tmp_path / "relevance.model.json"
        code, stdout, _ = run(
            capsys,
            "train-baseline",
            "--train", str(relevance),
            "--task", "relevance",
            "--epochs", "2",
            "--dim", "4096",
            "--output", str(model_path),
        )
        assert code == 0
        assert model_path.exists()
        summary = json.loads(stdout.splitlines()[-1])
        assert summary["task"] == "relevance"


class TestPostprocess:
    def test_oracle_restores_gold(self, synthetic_files, tmp_path, capsys):
        gold_path, generated_path = synthetic_files
        out = tmp_path / "post.jsonl"
        report = tmp_path / "report.jsonl"
        code, _, _ = run(
            capsys,
            "postprocess",
            "--input", str(generated_path),
            "--output", str(out),
            "--report", str(report),
            "--oracle-corpus", str(gold_path),
        )
        assert code == 0
        gold_events = {
            json.loads(line)["scenario"]: json.loads(line)["events"]
            for line in open(gold_path)
        }
        for line in out.read_text().splitlines():
            record = json.loads(line)
            assert record["events"] == gold_events[record["scenario"]]
        reports = [json.loads(line) for line in report.read_text().splitlines()]
        assert all(r["reorder_applied"] for r in reports)
        assert all(r["graph_acyclic"] for r in reports)

    def test_all_disabled_is_byte_identical(self, synthetic_files, tmp_path, capsys):
        _, generated_path = synthetic_files
        out = tmp_path / "post.jsonl"
        code, _, _ = run(
            capsys,
            "postprocess",
            "--input", str(generated_path),
            "--output", str(out),
            "--no-relevance", "--no-dedup", "--no-reorder",
        )
        assert code == 0
        assert out.read_bytes() == generated_path.read_bytes()


class TestEvaluate:
    def test_plain_report(self, synthetic_files, tmp_path, capsys):
        gold_path, generated_path = synthetic_files
        code, stdout, _ = run(
            capsys,
            "evaluate",
            "--generated", str(generated_path),
            "--gold", str(gold_path),
        )
        assert code == 0
        report = json.loads(stdout)
        assert 0.0 <= report["fold_mean"] <= 100.0
        assert report["std_kind"] == "sample"

    def test_ablation_monotone(self, synthetic_files, tmp_path, capsys):
        gold_path, generated_path = synthetic_files
        code, stdout, _ = run(
            capsys,
            "evaluate",
            "--generated", str(generated_path),
            "--gold", str(gold_path),
            "--ablation",
            "--oracle-corpus", str(gold_path),
        )
        assert code == 0
        rows = json.loads(stdout)["ablation"]
        assert [row["config"] for row in rows] == ["FT", "+R", "+R+D", "SIF"]
        means = [row["variants"]["SEQUENCE"]["mean"] for row in rows]
        assert means == sorted(means)
        assert means[-1] == pytest.approx(100.0, abs=1e-9)

    def test_per_esd_line_records(self, synthetic_files, tmp_path, capsys):
        gold_path, generated_path = synthetic_files
        per_esd = tmp_path / "per_esd.jsonl"
        code, _, _ = run(
            capsys,
            "evaluate",
            "--generated", str(generated_path),
            "--gold", str(gold_path),
            "--per-esd", str(per_esd),
        )
        assert code == 0
        records = [json.loads(line) for line in per_esd.read_text().splitlines()]
        assert len(records) == 12
        assert all(0.0 <= r["bleu"] <= 1.0 for r in records)


class TestProbe:
    def test_sixteen_lines(self, capsys):
        code, stdout, _ = run(
            capsys,
            "probe",
            "--scenario", "baking a cake",
            "--seed-event", "get a cake mix",
            "--seed-event", "gather together other ingredients",
        )
        assert code == 0
        lines = stdout.splitlines()
        assert len(lines) == 16
        assert "these are the things that happen when you bake a cake:" in lines


class TestAnnotateScore:
    def test_scores_and_agreement(self, tmp_path, capsys):
        path = tmp_path / "annotations.jsonl"
        write_jsonl(
            path,
            [
                {"annotator": "a1", "scenario": "s one", "esd_id": "e1",
                 "relevance": [1, 1, 0], "order": [1, 0], "missing": 2},
                {"annotator": "a2", "scenario": "s one", "esd_id": "e1",
                 "relevance": [1, 1, 1], "order": [0, 1], "missing": 1},
                {"annotator": "a1", "scenario": "s one", "esd_id": "e2",
                 "relevance": [1, 1], "order": [1], "missing": 3},
                {"annotator": "a2", "scenario": "s one", "esd_id": "e2",
                 "relevance": [1, 0], "order": [1], "missing": 4},
            ],
        )
        code, stdout, _ = run(capsys, "annotate-score", "--annotations", str(path))
        assert code == 0
        payload = json.loads(stdout)
        assert payload["scores"]["R"] == pytest.approx(80.0)
        assert payload["scores"]["O"] == pytest.approx(50.0)
        assert payload["scores"]["M"] == pytest.approx(2.5)
        assert payload["agreement"]["kappa_R"] == pytest.approx(-0.25)


class TestTemplatesAndConfig:
    def test_templates_manifest(self, capsys):
        code, stdout, _ = run(capsys, "templates")
        assert code == 0
        manifest = json.loads(stdout)
        assert set(manifest["variants"]) == {
            "SEQUENCE", "EXPECT", "ORDERED", "DESCRIBE", "DIRECT", "TOKENS", "ALLTOKENS"
        }

    def test_dry_run_has_no_side_effects(self, toy_corpus_file, tmp_path, capsys):
        out = tmp_path / "never-written.txt"
        code, stdout, _ = run(
            capsys,
            "export-finetune",
            "--corpus", str(toy_corpus_file),
            "--variant", "DIRECT",
            "--output", str(out),
            "--dry-run",
        )
        assert code == 0
        assert not out.exists()
        resolved = json.loads(stdout)
        assert resolved["command"] == "export-finetune"
        assert resolved["variant"] == "DIRECT"

    def test_config_file_defaults_and_flag_override(self, toy_corpus_file, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"variant": "TOKENS", "k": 2}))
        out = tmp_path / "out.txt"
        code, stdout, _ = run(
            capsys,
            "export-finetune",
            "--config", str(config),
            "--corpus", str(toy_corpus_file),
            "--output", str(out),
            "--dry-run",
        )
        assert code == 0
        assert json.loads(stdout)["variant"] == "TOKENS"
        code, stdout, _ = run(
            capsys,
            "export-finetune",
            "--config", str(config),
            "--corpus", str(toy_corpus_file),
            "--variant", "DIRECT",
            "--output", str(out),
            "--dry-run",
        )
        assert json.loads(stdout)["variant"] == "DIRECT"
