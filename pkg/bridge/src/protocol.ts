/**
 * Wire protocol shared with the pipeline's endpoint client.
 *
 * Line-delimited JSON over stdin/stdout or TCP, UTF-8, one object per
 * LF-terminated line:
 *
 *   handshake  client: {"hello": {"protocol": 1}}
 *              worker: {"ready": {"tasks": ["relevance", "temporal"]}}
 *   request    {"id": string, "task": "relevance"|"temporal",
 *               "scenario": string, "events": [string]}
 *              (1 event for relevance, 2 for temporal)
 *   response   {"id": string, "label": 0|1, "score": number in [0, 1]}
 *   error      {"id": string|null, "error": string}
 *
 * Response key order is fixed (id, label, score) so transcripts are
 * byte-reproducible.
 */

export const PROTOCOL_VERSION = 1;
export const TASKS = ["relevance", "temporal"] as const;

export type Task = (typeof TASKS)[number];

export interface Request {
  id: string;
  task: Task;
  scenario: string;
  events: string[];
}

export interface Verdict {
  label: 0 | 1;
  score: number;
}

export function readyLine(): string {
  return JSON.stringify({ ready: { tasks: [...TASKS] } });
}

export function responseLine(id: string, verdict: Verdict): string {
  return JSON.stringify({ id, label: verdict.label, score: verdict.score });
}

export function errorLine(id: string | null, message: string): string {
  return JSON.stringify({ id, error: message });
}

export class RequestError extends Error {
  constructor(
    public requestId: string | null,
    message: string,
  ) {
    super(message);
  }
}

/** Validate one request line; throws RequestError with the offending id. */
export function parseRequest(line: string): Request {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new RequestError(null, "unparseable request line");
  }
  if (typeof raw !== "object" || raw === null) {
    throw new RequestError(null, "request is not an object");
  }
  const obj = raw as Record<string, unknown>;
  const id = typeof obj.id === "string" ? obj.id : null;
  if (id === null) {
    throw new RequestError(null, "missing request id");
  }
  const task = obj.task;
  if (task !== "relevance" && task !== "temporal") {
    throw new RequestError(id, `unknown task: ${String(task)}`);
  }
  if (typeof obj.scenario !== "string") {
    throw new RequestError(id, "missing scenario");
  }
  const events = obj.events;
  if (!Array.isArray(events) || !events.every((e) => typeof e === "string")) {
    throw new RequestError(id, "events must be an array of strings");
  }
  const expected = task === "relevance" ? 1 : 2;
  if (events.length !== expected) {
    throw new RequestError(id, `${task} needs ${expected} event(s), got ${events.length}`);
  }
  return { id, task, scenario: obj.scenario, events };
}

export function isHandshake(line: string): boolean {
  try {
    const obj = JSON.parse(line) as Record<string, unknown>;
    return typeof obj === "object" && obj !== null && "hello" in obj;
  } catch {
    return false;
  }
}
