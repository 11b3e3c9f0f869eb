/** Typed client for the session service. Pure transport: requests go out,
 * JSON bodies come back untouched. */

import type {
  ClusterReport,
  DrillBody,
  HistoryPayload,
  SessionCreated,
  SessionParams,
  SessionStatus,
  SliceAxis,
  SliceLayer,
  SlicePayload,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.status = status;
    this.detail = detail;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Drops answers that arrive after a newer request was issued on the same
 * lane; one lane per kind of in-flight query. */
export class RequestLane {
  private seq = 0;

  begin(): number {
    this.seq += 1;
    return this.seq;
  }

  isCurrent(seq: number): boolean {
    return seq === this.seq;
  }
}

function query(params: Record<string, string | number>): string {
  const pairs = Object.entries(params).map(
    ([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`,
  );
  return pairs.length ? `?${pairs.join("&")}` : "";
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (...args) => fetch(...args)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...init.headers, "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    if (response.status === 204) return undefined as T;
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? (payload as { detail: unknown }).detail
          : payload;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  createSession(params: SessionParams): Promise<SessionCreated> {
    return this.request("POST", "/sessions", params);
  }

  status(sid: string): Promise<SessionStatus> {
    return this.request("GET", `/sessions/${sid}`);
  }

  clusters(
    sid: string,
    threshold: number,
    connectivity: number,
    withVoxels = true,
  ): Promise<ClusterReport> {
    const q = query({ threshold, connectivity, voxels: withVoxels ? 1 : 0 });
    return this.request("GET", `/sessions/${sid}/clusters${q}`);
  }

  drill(sid: string, body: DrillBody, withVoxels = true): Promise<ClusterReport> {
    const q = query({ voxels: withVoxels ? 1 : 0 });
    return this.request("POST", `/sessions/${sid}/drill${q}`, body);
  }

  slice(
    sid: string,
    axis: SliceAxis,
    index: number,
    layer: SliceLayer,
  ): Promise<SlicePayload> {
    const q = query({ axis, index, layer });
    return this.request("GET", `/sessions/${sid}/slice${q}`);
  }

  history(sid: string): Promise<HistoryPayload> {
    return this.request("GET", `/sessions/${sid}/history`);
  }

  deleteSession(sid: string): Promise<void> {
    return this.request("DELETE", `/sessions/${sid}`);
  }
}
