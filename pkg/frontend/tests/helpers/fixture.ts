/** Access to the recorded API exchanges and a fetch stand-in that replays
 * them. Tests assert against these bodies, never against numbers invented
 * on the TypeScript side. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../../src/api.js";
import type { ClusterReport, SessionStatus, SlicePayload } from "../../src/types.js";

export interface RecordedExchange {
  method: string;
  path: string;
  params: Record<string, string | number>;
  body: Record<string, unknown> | null;
  status: number;
  response: unknown;
}

const here = dirname(fileURLToPath(import.meta.url));

export const fixture: Record<string, RecordedExchange> = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "recorded.json"), "utf8"),
);

export function exchange(name: string): RecordedExchange {
  const entry = fixture[name];
  if (!entry) throw new Error(`fixture has no exchange named ${name}`);
  return entry;
}

export const reportOf = (name: string): ClusterReport => exchange(name).response as ClusterReport;
export const sliceOf = (name: string): SlicePayload => exchange(name).response as SlicePayload;
export const statusOf = (): SessionStatus => exchange("status").response as SessionStatus;

/** Session id the exchanges were recorded under. */
export function sessionId(): string {
  const part = exchange("status").path.split("/")[2];
  if (!part) throw new Error("status exchange path has no session id");
  return part;
}

/** Every z plane of the statistic layer, for grid reconstruction. */
export function zSlices(): SlicePayload[] {
  const depth = sliceOf("slice_z0").dims[2] ?? 0;
  return Array.from({ length: depth }, (_, k) => sliceOf(`slice_z${k}`));
}

export function jsonResponse(status: number, payload: unknown): Response {
  return {
    status,
    ok: status >= 200 && status < 300,
    json: async () => JSON.parse(JSON.stringify(payload)),
  } as unknown as Response;
}

/** Matches a request to a recorded exchange by method, path, query params,
 * and (for drills) the body's threshold / cluster id / connectivity. */
export function findExchange(
  url: string,
  init?: RequestInit,
): RecordedExchange | null {
  const method = init?.method ?? "GET";
  const u = new URL(url, "http://fixture.test");
  const body =
    typeof init?.body === "string" ? (JSON.parse(init.body) as Record<string, unknown>) : null;
  for (const ex of Object.values(fixture)) {
    if (ex.method !== method || ex.path !== u.pathname) continue;
    const paramsMatch = Object.entries(ex.params).every(
      ([k, v]) => u.searchParams.get(k) === String(v),
    );
    if (!paramsMatch) continue;
    if (ex.body && body) {
      const keysMatch = ["threshold", "cluster_id", "connectivity"].every(
        (k) => !(k in ex.body!) || JSON.stringify(body[k]) === JSON.stringify(ex.body![k]),
      );
      if (!keysMatch) continue;
    }
    return ex;
  }
  return null;
}

/** Fetch replaying the recorded exchanges; unknown requests reject. Each
 * call appends "METHOD path" to the log. */
export function replayFetch(log: string[] = []): FetchLike {
  return async (url, init) => {
    const u = new URL(url, "http://fixture.test");
    log.push(`${init?.method ?? "GET"} ${u.pathname}`);
    const ex = findExchange(url, init);
    if (!ex) throw new Error(`no recorded exchange for ${init?.method ?? "GET"} ${url}`);
    return jsonResponse(ex.status, ex.response);
  };
}
