/**
 * Regenerate the golden transcript from the rules backend.
 *
 * Writes fixtures/transcript_requests.jsonl (client lines, handshake first)
 * and fixtures/transcript_expected.jsonl (the worker's byte-exact reply).
 * The transcript is frozen in the repository; rerun this only when the
 * protocol intentionally changes.
 */

import { spawn } from "node:child_process";
import { writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));
const bridgeRoot = join(here, "..", "..");
const workerJs = join(bridgeRoot, "dist", "worker.js");
const rulesJson = join(bridgeRoot, "fixtures", "rules.json");

function request(id: number, task: string, scenario: string, events: string[]): string {
  return JSON.stringify({ id: String(id), task, scenario, events });
}

const CAKE = "baking a cake";
const TRAIN = "going on a train";

const lines: string[] = [JSON.stringify({ hello: { protocol: 1 } })];
let id = 0;
const relevance = (scenario: string, event: string) =>
  lines.push(request(id++, "relevance", scenario, [event]));
const temporal = (scenario: string, a: string, b: string) =>
  lines.push(request(id++, "temporal", scenario, [a, b]));

relevance(CAKE, "get a cake mix");
relevance(CAKE, "preheat oven");
relevance(CAKE, "tip the waiter");
relevance(CAKE, "is it hot?");
relevance(TRAIN, "buy ticket");
relevance(TRAIN, "leave station");
relevance(TRAIN, "knead the dough");
relevance("unknown scenario", "do anything");
temporal(CAKE, "get a cake mix", "preheat oven");
temporal(CAKE, "preheat oven", "get a cake mix");
temporal(CAKE, "let it bake", "take the cake out");
temporal(CAKE, "take the cake out", "gather together other ingredients");
temporal(TRAIN, "go to station", "buy ticket");
temporal(TRAIN, "get off train", "get on train");
temporal(TRAIN, "sit in seat", "sit in seat");
temporal(TRAIN, "unknown event", "buy ticket");
temporal(TRAIN, "buy ticket", "unknown event");
relevance(CAKE, "let it bake");
temporal(CAKE, "pour the cake mix into the pan", "let it bake");
temporal(TRAIN, "wait for train", "leave station");
// malformed traffic the worker must answer without crashing
lines.push("this is not json");
lines.push(JSON.stringify({ id: String(id++), task: "unknown-task", scenario: CAKE, events: ["x"] }));
lines.push(JSON.stringify({ id: String(id++), task: "temporal", scenario: CAKE, events: ["only one"] }));

const requestsPath = join(bridgeRoot, "fixtures", "transcript_requests.jsonl");
const expectedPath = join(bridgeRoot, "fixtures", "transcript_expected.jsonl");
writeFileSync(requestsPath, lines.join("\n") + "\n");

const worker = spawn("node", [workerJs, "--rules", rulesJson], {
  stdio: ["pipe", "pipe", "inherit"],
});
const chunks: Buffer[] = [];
worker.stdout.on("data", (chunk: Buffer) => chunks.push(chunk));
worker.on("close", () => {
  writeFileSync(expectedPath, Buffer.concat(chunks));
  console.log(`wrote ${requestsPath} and ${expectedPath}`);
});
worker.stdin.write(lines.join("\n") + "\n");
worker.stdin.end();
