/**
 * Deterministic rule-based backend.
 *
 * Rules file: {"<scenario>": {"events": [...], "order": [...]}, ...}
 * Relevance: label 1 iff the event is in the scenario's allow-list.
 * Temporal: label 1 iff the first event's position in the gold order is <=
 * the second's; events missing from the order rank last (position =
 * order.length), so ties and unknowns keep the queried orientation.
 *
 * These rules match the pipeline's in-process oracle classifiers verdict
 * for verdict.
 */

import { readFileSync } from "node:fs";
import type { Request, Verdict } from "./protocol.js";

export interface ScenarioRules {
  events?: string[];
  order?: string[];
}

export type RulesDocument = Record<string, ScenarioRules>;

export class RulesBackend {
  private allowed = new Map<string, Set<string>>();
  private position = new Map<string, Map<string, number>>();
  private orderLength = new Map<string, number>();

  constructor(rules: RulesDocument) {
    for (const [scenario, spec] of Object.entries(rules)) {
      this.allowed.set(scenario, new Set(spec.events ?? []));
      const order = spec.order ?? [];
      const positions = new Map<string, number>();
      order.forEach((event, index) => {
        if (!positions.has(event)) {
          positions.set(event, index);
        }
      });
      this.position.set(scenario, positions);
      this.orderLength.set(scenario, positions.size);
    }
  }

  static fromFile(path: string): RulesBackend {
    const raw = JSON.parse(readFileSync(path, "utf-8")) as RulesDocument;
    return new RulesBackend(raw);
  }

  classify(request: Request): Verdict {
    if (request.task === "relevance") {
      const allowList = this.allowed.get(request.scenario);
      const label = allowList?.has(request.events[0]) ? 1 : 0;
      return { label, score: label };
    }
    const positions = this.position.get(request.scenario);
    const fallback = this.orderLength.get(request.scenario) ?? 0;
    const first = positions?.get(request.events[0]) ?? fallback;
    const second = positions?.get(request.events[1]) ?? fallback;
    const label = first <= second ? 1 : 0;
    return { label, score: label };
  }
}
