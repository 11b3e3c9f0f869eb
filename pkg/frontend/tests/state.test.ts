/** Drill-ordering property: random interaction scripts can never make the
 * client emit a request the server's threshold policy would reject. The
 * simulated server below enforces the same rule as the real one (a drill
 * must be strictly deeper than the forming threshold of the table its
 * source cluster came from) and the scripts hammer every user action. */

import { describe, expect, it } from "vitest";

import type { RequestDescriptor } from "../src/state.js";
import { ExplorerState } from "../src/state.js";
import type { ClusterEntry, ClusterReport } from "../src/types.js";

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

class SimulatedServer {
  answered = 0;
  rejections: string[] = [];
  private nextId = 1;
  /** forming threshold of the table each issued cluster id belongs to */
  private readonly forming = new Map<string, number>();

  answer(request: RequestDescriptor, rand: () => number): ClusterReport {
    this.answered += 1;
    if (request.kind === "drill") {
      const parent = this.forming.get(request.clusterId);
      if (parent === undefined) {
        this.rejections.push(`unknown cluster ${request.clusterId}`);
      } else if (!(request.threshold > parent)) {
        this.rejections.push(
          `drill threshold ${request.threshold} must exceed ${parent}`,
        );
      }
    }
    const count = Math.floor(rand() * 4);
    const clusters: ClusterEntry[] = [];
    for (let k = 0; k < count; k += 1) {
      const size = 1 + Math.floor(rand() * 40);
      const id = `s${this.nextId}`;
      this.nextId += 1;
      this.forming.set(id, request.threshold);
      clusters.push({
        id,
        size,
        tdp_lower_bound: Math.floor(rand() * (size + 1)),
        tdp: 0,
        peak: { x: 0, y: 0, z: 0 },
        peak_stat: request.threshold + rand(),
      });
    }
    return {
      schema_version: "1",
      threshold: request.threshold,
      connectivity: request.connectivity,
      clusters,
    };
  }
}

function strictlyIncreasing(values: number[]): boolean {
  return values.every((v, i) => i === 0 || v > values[i - 1]!);
}

describe("drill threshold monotonicity", () => {
  it("holds over 1000 random interaction scripts", () => {
    for (let script = 0; script < 1000; script += 1) {
      const rand = mulberry32(0x9e3779b9 ^ script);
      const server = new SimulatedServer();
      const state = new ExplorerState();
      const firstAnswer = new Map<string, ClusterReport>();

      const settle = (request: RequestDescriptor): ClusterReport => {
        const report = server.answer(request, rand);
        firstAnswer.set(request.key, report);
        return report;
      };

      let slider = 0;
      const steps = 5 + Math.floor(rand() * 25);
      for (let step = 0; step < steps; step += 1) {
        const action = rand();
        if (action < 0.15 || state.depth === 0) {
          const threshold = 1 + Math.floor(rand() * 3);
          const opened = state.openRoot(threshold);
          if ("request" in opened) {
            state.applyRoot(opened.request, settle(opened.request));
          } else {
            expect(opened.cached).toBe(firstAnswer.get(`clusters|${threshold}|26`));
          }
        } else if (action < 0.35) {
          const report = state.currentReport;
          if (report && report.clusters.length) {
            const pick = report.clusters[Math.floor(rand() * report.clusters.length)]!;
            expect(state.selectCluster(pick.id)).toBe(true);
          }
          expect(state.selectCluster("no-such-cluster")).toBe(false);
        } else if (action < 0.5) {
          // slider moves freely, including to useless positions
          slider = Math.round(rand() * 120) / 10;
        } else if (action < 0.8) {
          const pending = state.requestDrill(slider);
          if (pending === null) {
            expect(state.canDrill(slider)).toBe(false);
          } else if ("request" in pending) {
            state.applyDrill(pending.request, settle(pending.request));
          } else {
            // same drill asked again: the cached report comes back by
            // reference, with no new server traffic
            const before = server.answered;
            expect(pending.cached).toBe(firstAnswer.get(pending.descriptor.key));
            expect(server.answered).toBe(before);
          }
        } else if (action < 0.9) {
          const before = server.answered;
          state.back();
          expect(server.answered).toBe(before);
        } else {
          const before = server.answered;
          state.jump(Math.floor(rand() * (state.depth + 1)));
          expect(server.answered).toBe(before);
        }
        expect(strictlyIncreasing(state.thresholds())).toBe(true);
      }
      expect(server.rejections).toEqual([]);
    }
  });

  it("refuses to apply an out-of-order drill even if one is forged", () => {
    const state = new ExplorerState();
    const root = state.openRoot(3);
    if (!("request" in root)) throw new Error("expected a root request");
    state.applyRoot(root.request, {
      schema_version: "1",
      threshold: 3,
      connectivity: 26,
      clusters: [],
    });
    const forged = {
      kind: "drill" as const,
      clusterId: "x",
      threshold: 2,
      connectivity: 26,
      key: "drill|x|2|26",
    };
    expect(() => state.applyDrill(forged, {
      schema_version: "1",
      threshold: 2,
      connectivity: 26,
      clusters: [],
    })).toThrow(/out of order/);
  });

  it("gates the drill on selection and strict depth", () => {
    const state = new ExplorerState();
    expect(state.canDrill(5)).toBe(false);        // no table yet
    const root = state.openRoot(3);
    if (!("request" in root)) throw new Error("expected a root request");
    const entry: ClusterEntry = {
      id: "c1", size: 4, tdp_lower_bound: 2, tdp: 0.5,
      peak: { x: 0, y: 0, z: 0 }, peak_stat: 6,
    };
    state.applyRoot(root.request, {
      schema_version: "1", threshold: 3, connectivity: 26, clusters: [entry],
    });
    expect(state.canDrill(5)).toBe(false);        // nothing selected
    state.selectCluster("c1");
    expect(state.canDrill(3)).toBe(false);        // equal threshold
    expect(state.canDrill(2)).toBe(false);        // shallower
    expect(state.canDrill(Number.NaN)).toBe(false);
    expect(state.canDrill(3.1)).toBe(true);
    expect(state.requestDrill(3)).toBeNull();
  });
});
