from __future__ import annotations

import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest

from esdkit.classifiers import serialize_input
from esdkit.endpoint import EndpointClient, EndpointConfig
from esdkit.errors import EndpointProtocolError, EndpointTimeoutError

WORKER = Path(__file__).with_name("workers.py")


def worker_cmd(*flags: str) -> str:
    return " ".join([sys.executable, str(WORKER), *flags])


def subprocess_client(*flags: str, timeout_ms: int = 5000, max_batch: int = 64):
    return EndpointClient(
        EndpointConfig(
            transport="subprocess",
            target=worker_cmd(*flags),
            timeout_ms=timeout_ms,
            max_batch=max_batch,
        )
    )


def inputs_for(labels: list[int]) -> list[str]:
    return [
        serialize_input("some scenario", ["yes please" if label else "not at all"])
        for label in labels
    ]


class TestSubprocessTransport:
    def test_basic_batch(self):
        labels = [1, 0, 1, 1, 0]
        with subprocess_client() as client:
            verdicts = client.predict("relevance", inputs_for(labels))
        assert [v.label for v in verdicts] == labels
        assert all(v.score == float(v.label) for v in verdicts)

    def test_out_of_order_responses_restored(self):
        labels = [1, 0, 0, 1, 1, 0, 1, 0]
        with subprocess_client("--reorder", "4") as client:
            verdicts = client.predict("relevance", inputs_for(labels))
        assert [v.label for v in verdicts] == labels

    def test_chunking_respects_max_batch(self):
        labels = [i % 2 for i in range(23)]
        with subprocess_client(max_batch=5) as client:
            verdicts = client.predict("relevance", inputs_for(labels))
        assert [v.label for v in verdicts] == labels

    def test_worker_death_reports_unanswered_ids(self):
        with subprocess_client("--die-after", "3", timeout_ms=2000) as client:
            with pytest.raises(EndpointTimeoutError) as excinfo:
                client.predict("relevance", inputs_for([1] * 7))
        # ids are assigned 0..6; the first 3 were answered
        assert excinfo.value.unanswered_ids == ["3", "4", "5", "6"]

    def test_hang_times_out_with_unanswered_ids(self):
        with subprocess_client("--hang-after", "2", timeout_ms=300) as client:
            started = time.monotonic()
            with pytest.raises(EndpointTimeoutError) as excinfo:
                client.predict("relevance", inputs_for([1] * 5))
            elapsed = time.monotonic() - started
        assert excinfo.value.unanswered_ids == ["2", "3", "4"]
        assert elapsed < 5.0

    def test_malformed_response(self):
        with subprocess_client("--malformed") as client:
            with pytest.raises(EndpointProtocolError):
                client.predict("relevance", inputs_for([1]))

    def test_error_record(self):
        with subprocess_client("--error-record") as client:
            with pytest.raises(EndpointProtocolError) as excinfo:
                client.predict("relevance", inputs_for([1]))
        assert excinfo.value.request_id == "0"

    def test_temporal_task_accepted(self):
        with subprocess_client() as client:
            verdicts = client.predict(
                "temporal", [serialize_input("s t", ["yes first", "then that"])]
            )
        assert verdicts[0].label == 1


class TestTcpTransport:
    def test_basic_batch_over_tcp(self):
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        proc = subprocess.Popen([sys.executable, str(WORKER), "--tcp", str(port)])
        labels = [0, 1, 1, 0]
        try:
            deadline = time.monotonic() + 10
            while True:
                client = EndpointClient(
                    EndpointConfig(transport="tcp", target=f"127.0.0.1:{port}")
                )
                try:
                    verdicts = client.predict("relevance", inputs_for(labels))
                    break
                except OSError:
                    client.close()
                    if time.monotonic() > deadline:
                        raise
                    time.sleep(0.05)
            assert [v.label for v in verdicts] == labels
            client.close()
        finally:
            proc.terminate()
            proc.wait(timeout=5)


class TestConcurrency:
    def test_concurrent_batches_serialize_cleanly(self):
        from concurrent.futures import ThreadPoolExecutor

        label_sets = [[i % 2 for i in range(start, start + 9)] for start in range(6)]
        with subprocess_client() as client:
            with ThreadPoolExecutor(max_workers=6) as pool:
                futures = [
                    pool.submit(client.predict, "relevance", inputs_for(labels))
                    for labels in label_sets
                ]
                results = [f.result() for f in futures]
        for labels, verdicts in zip(label_sets, results):
            assert [v.label for v in verdicts] == labels


class TestConfigValidation:
    def test_unknown_transport(self):
        with pytest.raises(ValueError):
            EndpointConfig(transport="pigeon", target="x")

    def test_nonpositive_limits(self):
        with pytest.raises(ValueError):
            EndpointConfig(transport="tcp", target="x", timeout_ms=0)
