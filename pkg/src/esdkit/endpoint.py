"""Client for external classifier workers.

Wire protocol (UTF-8, one JSON object per LF-terminated line, over a
subprocess stdin/stdout pipe or a TCP stream):

* handshake:  client sends ``{"hello": {"protocol": 1}}``,
  worker replies ``{"ready": {"tasks": ["relevance", "temporal"]}}``
* request:    ``{"id": str, "task": "relevance"|"temporal",
  "scenario": str, "events": [str]}`` (1 event for relevance, 2 for temporal)
* response:   ``{"id": str, "label": 0|1, "score": number in [0, 1]}``
* error:      ``{"id": str, "error": str}``

Responses may arrive in any order; the client restores request order by id.
A request that receives no response within the timeout window (refreshed on
every received response) fails the batch with the unanswered ids listed.
"""

from __future__ import annotations

import json
import select
import shlex
import socket
import subprocess
import threading
import time
from dataclasses import dataclass

from .classifiers import ClassifierVerdict, split_serialized_input
from .errors import EndpointProtocolError, EndpointTimeoutError

PROTOCOL_VERSION = 1

TRANSPORT_SUBPROCESS = "subprocess"
TRANSPORT_TCP = "tcp"


@dataclass(frozen=True)
class EndpointConfig:
    transport: str
    target: str  # command line for subprocess, "host:port" for tcp
    timeout_ms: int = 10_000
    max_batch: int = 64

    def __post_init__(self):
        if self.transport not in (TRANSPORT_SUBPROCESS, TRANSPORT_TCP):
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.timeout_ms <= 0 or self.max_batch <= 0:
            raise ValueError("timeout_ms and max_batch must be positive")


class _SubprocessChannel:
    def __init__(self, command: str):
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )
        self._buffer = b""

    def write_line(self, line: str) -> None:
        assert self._proc.stdin is not None
        self._proc.stdin.write(line.encode("utf-8") + b"\n")
        self._proc.stdin.flush()

    def read_line(self, timeout_s: float) -> str | None:
        """One decoded line, ``None`` on EOF; raises TimeoutError."""
        assert self._proc.stdout is not None
        deadline = time.monotonic() + timeout_s
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            ready, _, _ = select.select([self._proc.stdout], [], [], remaining)
            if not ready:
                raise TimeoutError
            chunk = self._proc.stdout.read1(65536)
            if not chunk:
                return None
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        for stream in (self._proc.stdin, self._proc.stdout):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass
        self._proc.terminate()
        try:
            self._proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


class _TcpChannel:
    def __init__(self, address: str):
        host, _, port = address.rpartition(":")
        self._sock = socket.create_connection((host, int(port)))
        self._buffer = b""

    def write_line(self, line: str) -> None:
        self._sock.sendall(line.encode("utf-8") + b"\n")

    def read_line(self, timeout_s: float) -> str | None:
        deadline = time.monotonic() + timeout_s
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout:
                raise TimeoutError from None
            if not chunk:
                return None
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class EndpointClient:
    """Forwards classification batches to an external worker.

    Implements the same ``predict(task, inputs)`` surface as the in-process
    baseline, so pipelines cannot tell the backends apart. Thread-safe:
    concurrent batches are serialized through the single connection.
    """

    def __init__(self, config: EndpointConfig):
        self.config = config
        self._channel = None
        self._tasks: tuple[str, ...] = ()
        self._next_id = 0
        self._lock = threading.Lock()

    # -- lifecycle ----------------------------------------------------------

    def _ensure_channel(self):
        if self._channel is not None:
            return
        if self.config.transport == TRANSPORT_SUBPROCESS:
            self._channel = _SubprocessChannel(self.config.target)
        else:
            self._channel = _TcpChannel(self.config.target)
        self._handshake()

    def _handshake(self) -> None:
        self._channel.write_line(json.dumps({"hello": {"protocol": PROTOCOL_VERSION}}))
        try:
            line = self._channel.read_line(self.config.timeout_ms / 1000.0)
        except TimeoutError:
            raise EndpointTimeoutError([], "no handshake reply") from None
        if line is None:
            raise EndpointProtocolError(None, "worker closed the stream during handshake")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EndpointProtocolError(None, f"bad handshake reply: {exc}") from exc
        ready = reply.get("ready")
        if not isinstance(ready, dict) or "tasks" not in ready:
            raise EndpointProtocolError(None, f"unexpected handshake reply: {line!r}")
        self._tasks = tuple(ready["tasks"])

    def close(self) -> None:
        with self._lock:
            if self._channel is not None:
                self._channel.close()
                self._channel = None

    def __enter__(self) -> EndpointClient:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- prediction ---------------------------------------------------------

    def predict(self, task: str, inputs: list[str]) -> list[ClassifierVerdict]:
        with self._lock:
            self._ensure_channel()
            if self._tasks and task not in self._tasks:
                raise EndpointProtocolError(
                    None, f"worker serves tasks {self._tasks}, not {task!r}"
                )
            verdicts: list[ClassifierVerdict] = []
            for start in range(0, len(inputs), self.config.max_batch):
                verdicts.extend(
                    self._run_batch(task, inputs[start:start + self.config.max_batch])
                )
            return verdicts

    def _run_batch(self, task: str, batch: list[str]) -> list[ClassifierVerdict]:
        pending: dict[str, int] = {}
        for position, serialized in enumerate(batch):
            scenario, events = split_serialized_input(serialized)
            request_id = str(self._next_id)
            self._next_id += 1
            pending[request_id] = position
            self._channel.write_line(
                json.dumps(
                    {"id": request_id, "task": task, "scenario": scenario, "events": events},
                    ensure_ascii=False,
                )
            )

        results: list[ClassifierVerdict | None] = [None] * len(batch)
        timeout_s = self.config.timeout_ms / 1000.0
        while pending:
            try:
                line = self._channel.read_line(timeout_s)
            except TimeoutError:
                raise EndpointTimeoutError(sorted(pending, key=pending.get)) from None
            if line is None:
                raise EndpointTimeoutError(
                    sorted(pending, key=pending.get),
                    "worker closed the stream with requests outstanding: "
                    + ", ".join(sorted(pending, key=pending.get)),
                )
            if not line.strip():
                continue
            position, verdict = self._consume(line, pending)
            results[position] = verdict
        return results  # type: ignore[return-value]

    def _consume(self, line: str, pending: dict[str, int]) -> tuple[int, ClassifierVerdict]:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EndpointProtocolError(None, f"unparseable response {line!r}") from exc
        request_id = obj.get("id")
        if "error" in obj:
            raise EndpointProtocolError(request_id, f"worker error: {obj['error']}")
        if request_id not in pending:
            raise EndpointProtocolError(request_id, "response for unknown request id")
        label = obj.get("label")
        score = obj.get("score")
        if label not in (0, 1) or not isinstance(score, (int, float)):
            raise EndpointProtocolError(request_id, f"malformed verdict {line!r}")
        if not 0.0 <= float(score) <= 1.0:
            raise EndpointProtocolError(request_id, f"score out of range: {score}")
        return pending.pop(request_id), ClassifierVerdict(label=int(label), score=float(score))
