/**
 * Adapter slot for plugging a real sequence-pair classifier (for example a
 * fine-tuned transformer served from Python) behind the same wire protocol.
 *
 * An adapter is any module whose default export implements:
 *
 *   (batch: Request[]) => Promise<Verdict[]>   // aligned with the batch
 *
 * The module is imported lazily on the first request, so the rules backend
 * runs with nothing heavy loaded.
 */

import { pathToFileURL } from "node:url";
import { resolve } from "node:path";
import type { Request, Verdict } from "./protocol.js";

export type ClassifyFn = (batch: Request[]) => Promise<Verdict[]>;

export class AdapterBackend {
  private classify: ClassifyFn | null = null;

  constructor(private modulePath: string) {}

  private async load(): Promise<ClassifyFn> {
    if (this.classify === null) {
      const url = pathToFileURL(resolve(this.modulePath)).href;
      const mod = (await import(url)) as { default?: unknown; classify?: unknown };
      const fn = mod.default ?? mod.classify;
      if (typeof fn !== "function") {
        throw new Error(
          `adapter module ${this.modulePath} must export a classify function`,
        );
      }
      this.classify = fn as ClassifyFn;
    }
    return this.classify;
  }

  async classifyBatch(batch: Request[]): Promise<Verdict[]> {
    const classify = await this.load();
    const verdicts = await classify(batch);
    if (!Array.isArray(verdicts) || verdicts.length !== batch.length) {
      throw new Error(
        `adapter returned ${verdicts?.length ?? "no"} verdicts for ${batch.length} requests`,
      );
    }
    for (const verdict of verdicts) {
      if (
        (verdict.label !== 0 && verdict.label !== 1) ||
        typeof verdict.score !== "number" ||
        verdict.score < 0 ||
        verdict.score > 1
      ) {
        throw new Error("adapter produced an invalid verdict");
      }
    }
    return verdicts;
  }
}
