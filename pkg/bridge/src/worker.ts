/**
 * Classifier worker: answers relevance/temporal requests over the line
 * protocol, on stdin/stdout (default) or a TCP port (--tcp).
 *
 * Usage:
 *   node dist/worker.js --rules rules.json [--tcp PORT] [--max-batch N]
 *   node dist/worker.js --adapter ./my_model.js [--max-batch N]
 *
 * --exit-after N answers N requests and then exits without reading more
 * (test hook for client-side timeout handling). Malformed input never
 * crashes the worker; it answers an error record carrying the offending id
 * (or null when no id could be parsed).
 */

import { createInterface } from "node:readline";
import { createServer, type Socket } from "node:net";
import process from "node:process";
import { pathToFileURL } from "node:url";
import { AdapterBackend } from "./adapter.js";
import {
  isHandshake,
  parseRequest,
  readyLine,
  responseLine,
  errorLine,
  RequestError,
  type Request,
  type Verdict,
} from "./protocol.js";
import { RulesBackend } from "./rules.js";

export interface WorkerConfig {
  backend: "rules" | "adapter";
  rulesFile?: string;
  adapterModule?: string;
  maxBatch: number;
  exitAfter?: number;
  tcpPort?: number;
}

export function parseArgs(argv: string[]): WorkerConfig {
  const config: WorkerConfig = { backend: "rules", maxBatch: 64 };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${flag} needs a value`);
      return argv[i];
    };
    switch (flag) {
      case "--rules":
        config.backend = "rules";
        config.rulesFile = next();
        break;
      case "--adapter":
        config.backend = "adapter";
        config.adapterModule = next();
        break;
      case "--max-batch":
        config.maxBatch = Number(next());
        break;
      case "--exit-after":
        config.exitAfter = Number(next());
        break;
      case "--tcp":
        config.tcpPort = Number(next());
        break;
      default:
        throw new Error(`unknown flag: ${flag}`);
    }
  }
  if (config.backend === "rules" && !config.rulesFile) {
    throw new Error("--rules FILE is required for the rules backend");
  }
  if (config.maxBatch <= 0 || Number.isNaN(config.maxBatch)) {
    throw new Error("--max-batch must be positive");
  }
  return config;
}

type WriteLine = (line: string) => void;

class Session {
  private answered = 0;
  private pending: Request[] = [];
  private flushScheduled = false;
  private rules: RulesBackend | null = null;
  private adapter: AdapterBackend | null = null;

  constructor(
    private config: WorkerConfig,
    private writeLine: WriteLine,
  ) {
    if (config.backend === "rules") {
      this.rules = RulesBackend.fromFile(config.rulesFile as string);
    } else {
      this.adapter = new AdapterBackend(config.adapterModule as string);
    }
  }

  private countAnswerAndMaybeExit(): void {
    this.answered += 1;
    if (this.config.exitAfter !== undefined && this.answered >= this.config.exitAfter) {
      process.exit(0);
    }
  }

  private respond(id: string, verdict: Verdict): void {
    this.writeLine(responseLine(id, verdict));
    this.countAnswerAndMaybeExit();
  }

  private async flushAdapterBatch(): Promise<void> {
    this.flushScheduled = false;
    while (this.pending.length > 0) {
      const batch = this.pending.splice(0, this.config.maxBatch);
      try {
        const verdicts = await (this.adapter as AdapterBackend).classifyBatch(batch);
        batch.forEach((request, k) => this.respond(request.id, verdicts[k]));
      } catch (error) {
        for (const request of batch) {
          this.writeLine(errorLine(request.id, String(error)));
          this.countAnswerAndMaybeExit();
        }
      }
    }
  }

  handleLine(line: string): void {
    if (line.trim() === "") {
      return;
    }
    if (isHandshake(line)) {
      this.writeLine(readyLine());
      return;
    }
    let request: Request;
    try {
      request = parseRequest(line);
    } catch (error) {
      const id = error instanceof RequestError ? error.requestId : null;
      this.writeLine(errorLine(id, String(error instanceof Error ? error.message : error)));
      return;
    }
    if (this.rules !== null) {
      this.respond(request.id, this.rules.classify(request));
      return;
    }
    this.pending.push(request);
    if (!this.flushScheduled) {
      this.flushScheduled = true;
      setImmediate(() => void this.flushAdapterBatch());
    }
  }
}

function serveStdio(config: WorkerConfig): void {
  const session = new Session(config, (line) => {
    process.stdout.write(line + "\n");
  });
  const reader = createInterface({ input: process.stdin, crlfDelay: Infinity });
  reader.on("line", (line) => session.handleLine(line));
}

function serveTcp(config: WorkerConfig): void {
  const server = createServer((socket: Socket) => {
    const session = new Session(config, (line) => {
      socket.write(line + "\n");
    });
    const reader = createInterface({ input: socket, crlfDelay: Infinity });
    reader.on("line", (line) => session.handleLine(line));
    socket.on("error", () => socket.destroy());
  });
  server.listen(config.tcpPort, "127.0.0.1");
}

export function main(argv: string[]): void {
  let config: WorkerConfig;
  try {
    config = parseArgs(argv);
  } catch (error) {
    process.stderr.write(String(error instanceof Error ? error.message : error) + "\n");
    process.exit(2);
  }
  if (config.tcpPort !== undefined) {
    serveTcp(config);
  } else {
    serveStdio(config);
  }
}

if (
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  main(process.argv.slice(2));
}
