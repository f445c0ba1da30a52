"""Hermetic wire-protocol worker used by the endpoint client tests.

Rule: label 1 iff the first event contains "yes". Behaviors, via flags:

  --reorder N      buffer N requests and answer them in reverse order
  --die-after N    answer N requests, then exit without reading more
  --malformed      answer the first request with unparseable output
  --error-record   answer every request with an {"id", "error"} record
  --hang-after N   answer N requests, then read but never answer
  --tcp PORT       serve one connection on 127.0.0.1:PORT instead of stdio
"""

from __future__ import annotations

import argparse
import json
import socket
import sys


def verdict(request: dict) -> dict:
    label = 1 if "yes" in request["events"][0] else 0
    return {"id": request["id"], "label": label, "score": float(label)}


def serve(read_line, write_line, args) -> None:
    hello = read_line()
    if hello is None:
        return
    assert json.loads(hello)["hello"]["protocol"] == 1
    write_line(json.dumps({"ready": {"tasks": ["relevance", "temporal"]}}))

    answered = 0
    buffered: list[dict] = []
    while True:
        line = read_line()
        if line is None:
            break
        request = json.loads(line)
        if args.hang_after is not None and answered >= args.hang_after:
            continue
        if args.die_after is not None and answered >= args.die_after:
            return
        if args.error_record:
            write_line(json.dumps({"id": request["id"], "error": "refused"}))
            answered += 1
            continue
        if args.malformed:
            write_line("this is not json")
            answered += 1
            continue
        if args.reorder:
            buffered.append(request)
            if len(buffered) >= args.reorder:
                for item in reversed(buffered):
                    write_line(json.dumps(verdict(item)))
                    answered += 1
                buffered.clear()
            continue
        write_line(json.dumps(verdict(request)))
        answered += 1
    for item in reversed(buffered):
        write_line(json.dumps(verdict(item)))


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--reorder", type=int, default=0)
    parser.add_argument("--die-after", type=int, default=None)
    parser.add_argument("--hang-after", type=int, default=None)
    parser.add_argument("--malformed", action="store_true")
    parser.add_argument("--error-record", action="store_true")
    parser.add_argument("--tcp", type=int, default=None)
    args = parser.parse_args()

    if args.tcp is not None:
        server = socket.create_server(("127.0.0.1", args.tcp))
        conn, _ = server.accept()
        reader = conn.makefile("r", encoding="utf-8")

        def read_line():
            line = reader.readline()
            return line.rstrip("\n") if line else None

        def write_line(line: str):
            conn.sendall(line.encode("utf-8") + b"\n")

        serve(read_line, write_line, args)
        conn.close()
        server.close()
        return

    def read_line():
        line = sys.stdin.readline()
        return line.rstrip("\n") if line else None

    def write_line(line: str):
        sys.stdout.write(line + "\n")
        sys.stdout.flush()

    serve(read_line, write_line, args)


if __name__ == "__main__":
    main()
