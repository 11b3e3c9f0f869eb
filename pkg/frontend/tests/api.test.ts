import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, RequestLane } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import { exchange, jsonResponse } from "./helpers/fixture.js";

interface Captured {
  url: string;
  init: RequestInit | undefined;
}

function capture(status = 200, payload: unknown = {}): { calls: Captured[]; fetchFn: FetchLike } {
  const calls: Captured[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return jsonResponse(status, payload);
  };
  return { calls, fetchFn };
}

describe("request construction", () => {
  it("posts session parameters as JSON", async () => {
    const { calls, fetchFn } = capture(201, exchange("create").response);
    const api = new ApiClient("http://h:8000/", fetchFn);
    await api.createSession({ data: "data.nii", alpha: 0.1, w: 250 });
    expect(calls).toHaveLength(1);
    expect(calls[0]!.url).toBe("http://h:8000/sessions");
    expect(calls[0]!.init?.method).toBe("POST");
    expect(JSON.parse(calls[0]!.init?.body as string)).toEqual({
      data: "data.nii",
      alpha: 0.1,
      w: 250,
    });
  });

  it("asks for cluster tables with threshold, connectivity, and voxel flag", async () => {
    const { calls, fetchFn } = capture(200, exchange("clusters_root").response);
    const api = new ApiClient("", fetchFn);
    await api.clusters("S1", 2.5, 26);
    await api.clusters("S1", 2.5, 26, false);
    expect(calls[0]!.url).toBe("/sessions/S1/clusters?threshold=2.5&connectivity=26&voxels=1");
    expect(calls[1]!.url).toBe("/sessions/S1/clusters?threshold=2.5&connectivity=26&voxels=0");
  });

  it("posts drills with the body the server expects", async () => {
    const { calls, fetchFn } = capture(200, exchange("drill_split").response);
    const api = new ApiClient("", fetchFn);
    await api.drill("S1", { threshold: 9, cluster_id: "c1", connectivity: 26 });
    expect(calls[0]!.url).toBe("/sessions/S1/drill?voxels=1");
    expect(JSON.parse(calls[0]!.init?.body as string)).toEqual({
      threshold: 9,
      cluster_id: "c1",
      connectivity: 26,
    });
  });

  it("addresses slices by axis, index, and layer", async () => {
    const { calls, fetchFn } = capture(200, exchange("slice_z0").response);
    const api = new ApiClient("", fetchFn);
    await api.slice("S1", "z", 3, "tdp");
    expect(calls[0]!.url).toBe("/sessions/S1/slice?axis=z&index=3&layer=tdp");
  });

  it("treats 204 as a completed delete", async () => {
    const fetchFn: FetchLike = async () =>
      ({ status: 204, ok: true, json: async () => null }) as unknown as Response;
    const api = new ApiClient("", fetchFn);
    await expect(api.deleteSession("S1")).resolves.toBeUndefined();
  });
});

describe("error mapping", () => {
  it("surfaces the recorded validation detail", async () => {
    const rejected = exchange("drill_rejected");
    const { fetchFn } = capture(rejected.status, rejected.response);
    const api = new ApiClient("", fetchFn);
    const failure = api.drill("S1", { threshold: 10, cluster_id: "c1", connectivity: 5 });
    await expect(failure).rejects.toBeInstanceOf(ApiError);
    const err = (await failure.catch((e: unknown) => e)) as ApiError;
    expect(err.status).toBe(422);
    expect(err.detail).toBe((rejected.response as { detail: string }).detail);
    expect(err.message).toBe(err.detail);
  });

  it("keeps a detail-less payload intact", async () => {
    const { fetchFn } = capture(500, { boom: 1 });
    const api = new ApiClient("", fetchFn);
    const err = (await api.status("S1").catch((e: unknown) => e)) as ApiError;
    expect(err.status).toBe(500);
    expect(err.detail).toEqual({ boom: 1 });
  });
});

describe("request lanes", () => {
  it("marks earlier requests stale once a newer one begins", () => {
    const lane = new RequestLane();
    const first = lane.begin();
    const second = lane.begin();
    expect(lane.isCurrent(first)).toBe(false);
    expect(lane.isCurrent(second)).toBe(true);
    expect(lane.isCurrent(lane.begin())).toBe(true);
  });
});
