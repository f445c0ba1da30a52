"""Integration with the external classifier worker (the bridge).

These tests need the bridge built (`npm run build` in bridge/); they skip
cleanly when it is not, so the primary suite runs standalone.
"""

from __future__ import annotations

import json
import random
import subprocess
from pathlib import Path

import pytest

from esdkit.classifiers import serialize_input
from esdkit.endpoint import EndpointClient, EndpointConfig
from esdkit.errors import EndpointTimeoutError
from esdkit.oracles import OracleClassifier, corrupt, make_gold_esd
from esdkit.pipeline import PipelineConfig, run_pipeline

BRIDGE_ROOT = Path(__file__).resolve().parents[1] / "bridge"
WORKER_JS = BRIDGE_ROOT / "dist" / "worker.js"
RULES_JSON = BRIDGE_ROOT / "fixtures" / "rules.json"

pytestmark = pytest.mark.skipif(
    not WORKER_JS.exists(), reason="bridge not built (run npm run build in bridge/)"
)


def bridge_client(rules_path, *flags: str, timeout_ms: int = 10_000) -> EndpointClient:
    command = f"node {WORKER_JS} --rules {rules_path} " + " ".join(flags)
    return EndpointClient(
        EndpointConfig(transport="subprocess", target=command.strip(), timeout_ms=timeout_ms)
    )


def test_golden_transcript_replays_byte_exact():
    requests = (BRIDGE_ROOT / "fixtures" / "transcript_requests.jsonl").read_bytes()
    expected = (BRIDGE_ROOT / "fixtures" / "transcript_expected.jsonl").read_bytes()
    result = subprocess.run(
        ["node", str(WORKER_JS), "--rules", str(RULES_JSON)],
        input=requests,
        capture_output=True,
        timeout=30,
    )
    assert result.returncode == 0
    assert result.stdout == expected


@pytest.fixture
def synthetic_world(tmp_path):
    rng = random.Random(77)
    golds = [make_gold_esd(rng, i, rng.randint(4, 9)) for i in range(5)]
    oracle = OracleClassifier.from_sequences(golds)
    rules_path = tmp_path / "rules.json"
    rules_path.write_text(json.dumps(oracle.to_rules_document()))
    noisy = [
        corrupt(gold, rng, n_foreign=rng.randint(1, 3), n_duplicates=rng.randint(1, 2))
        for gold in golds
        for _ in range(3)
    ]
    return golds, oracle, noisy, rules_path


def test_rules_backend_matches_in_process_oracle(synthetic_world):
    golds, oracle, _, rules_path = synthetic_world
    inputs_rel = []
    inputs_tmp = []
    rng = random.Random(5)
    for gold in golds:
        texts = gold.texts()
        for text in texts:
            inputs_rel.append(serialize_input(gold.scenario.name, [text]))
        inputs_rel.append(serialize_input(gold.scenario.name, ["tip the waiter"]))
        for _ in range(10):
            a, b = rng.sample(texts, 2)
            inputs_tmp.append(serialize_input(gold.scenario.name, [a, b]))
        inputs_tmp.append(serialize_input(gold.scenario.name, [texts[0], texts[0]]))
        inputs_tmp.append(serialize_input(gold.scenario.name, ["mystery", texts[0]]))
    with bridge_client(rules_path) as client:
        assert client.predict("relevance", inputs_rel) == oracle.predict(
            "relevance", inputs_rel
        )
        assert client.predict("temporal", inputs_tmp) == oracle.predict(
            "temporal", inputs_tmp
        )


def test_end_to_end_postprocess_matches_oracle(synthetic_world):
    golds, oracle, noisy, rules_path = synthetic_world
    config = PipelineConfig()
    with bridge_client(rules_path) as client:
        for esd in noisy:
            via_bridge, bridge_report = run_pipeline(esd, config, client, client)
            in_process, oracle_report = run_pipeline(esd, config, oracle, oracle)
            assert via_bridge.texts() == in_process.texts()
            assert bridge_report.to_record() == oracle_report.to_record()


def test_kill_mid_batch_times_out_on_unanswered_ids(synthetic_world):
    _, _, _, rules_path = synthetic_world
    inputs = [serialize_input("synthetic scenario 0", [f"event {i}"]) for i in range(8)]
    with bridge_client(rules_path, "--exit-after", "3", timeout_ms=3000) as client:
        with pytest.raises(EndpointTimeoutError) as excinfo:
            client.predict("relevance", inputs)
    assert excinfo.value.unanswered_ids == ["3", "4", "5", "6", "7"]
