/** Whole-page wiring against the recorded exchanges: the displayed table,
 * breadcrumb, and hover text must quote the API bodies exactly, drills
 * must stay gated, and stale answers must never clobber newer ones. */

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import { ExplorerApp } from "../src/app.js";
import { exchange, jsonResponse, replayFetch } from "./helpers/fixture.js";

function buildShell(): void {
  document.body.innerHTML = `
    <form id="session-form">
      <input id="data-path" value="data.nii">
      <input id="geometry-path" value="">
      <input id="alpha" value="0.1">
      <input id="permutations" value="250">
      <span id="session-label"></span>
    </form>
    <div id="error-banner" hidden></div>
    <div id="notice" hidden></div>
    <nav id="breadcrumb"></nav>
    <p id="table-caption"></p>
    <div id="cluster-table"></div>
    <input id="root-threshold" value="2.5">
    <button id="root-button" type="button"></button>
    <input id="drill-threshold" type="range" min="0" max="60" step="0.1" value="2.5">
    <button id="drill-button" type="button" disabled></button>
    <button id="back-button" type="button" disabled></button>
    <select id="slice-axis">
      <option value="z" selected>z</option><option value="y">y</option><option value="x">x</option>
    </select>
    <input id="slice-index" type="number" value="0">
    <select id="slice-layer">
      <option value="stat" selected>stat</option><option value="tdp">tdp</option>
    </select>
    <canvas id="slice-canvas"></canvas>
    <p id="hover-readout"></p>
  `;
  // jsdom has no 2D context; the app skips painting when none is returned
  (document.getElementById("slice-canvas") as HTMLCanvasElement).getContext = () => null;
}

function mountApp(fetchFn: FetchLike): ExplorerApp {
  buildShell();
  const app = new ExplorerApp(new ApiClient("", fetchFn));
  app.mount();
  return app;
}

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function submitSessionForm(): void {
  el<HTMLFormElement>("session-form").dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }),
  );
}

function tableIds(): string[] {
  return [...document.querySelectorAll("#cluster-table tbody tr")].map(
    (row) => (row as HTMLElement).dataset["clusterId"] ?? "",
  );
}

function breadcrumbTexts(): string[] {
  return [...document.querySelectorAll("#breadcrumb li")].map(
    (item) => item.textContent ?? "",
  );
}

function selectCluster(id: string): void {
  (document.querySelector(`#cluster-table tr[data-cluster-id="${id}"]`) as HTMLElement).click();
}

function setSlider(value: string): void {
  const slider = el<HTMLInputElement>("drill-threshold");
  slider.value = value;
  slider.dispatchEvent(new Event("input", { bubbles: true }));
}

async function openRecordedSession(): Promise<void> {
  submitSessionForm();
  await vi.waitFor(() => {
    expect(tableIds()).toHaveLength(12);
  });
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("session flow against the recorded exchanges", () => {
  it("shows the recorded table, breadcrumb, and summary after opening", async () => {
    mountApp(replayFetch());
    await openRecordedSession();
    expect(el("session-label").textContent).toContain("m=958");
    expect(el("session-label").textContent).toContain("lambda=0.563529");
    expect(tableIds().slice(0, 3)).toEqual(["c1", "c2", "c3"]);
    const c1 = document.querySelector('#cluster-table tr[data-cluster-id="c1"]')!;
    expect([...c1.children].map((cell) => cell.textContent)).toEqual(
      ["c1", "82", "71", "86.59%", "(1, 3, 3)", "23.37"],
    );
    expect(breadcrumbTexts()).toEqual(["all voxels · T > 2.5"]);
    expect(el("table-caption").textContent).toBe("clusters at T > 2.5");
    expect(el<HTMLButtonElement>("drill-button").disabled).toBe(true);
    expect(el<HTMLButtonElement>("back-button").disabled).toBe(true);
  });

  it("drills down, then navigates back from cache without re-fetching", async () => {
    const log: string[] = [];
    mountApp(replayFetch(log));
    await openRecordedSession();

    selectCluster("c1");
    expect(el<HTMLButtonElement>("drill-button").disabled).toBe(true); // slider still at 2.5
    setSlider("9");
    expect(el<HTMLButtonElement>("drill-button").disabled).toBe(false);
    el("drill-button").click();
    await vi.waitFor(() => {
      expect(tableIds()).toEqual(["c13", "c14"]);
    });
    expect(breadcrumbTexts()).toEqual(["all voxels · T > 2.5", "c1 · T > 9"]);
    expect(el("table-caption").textContent).toBe("clusters at T > 9");
    expect(el<HTMLButtonElement>("back-button").disabled).toBe(false);

    const fetches = (): number =>
      log.filter((line) => /\/(clusters|drill)$/.test(line.split("?")[0] ?? line)).length;
    const before = fetches();
    el("back-button").click();
    expect(tableIds()).toHaveLength(12);
    expect(breadcrumbTexts()).toEqual(["all voxels · T > 2.5"]);
    expect(fetches()).toBe(before);
  });

  it("reports an empty drill and offers the way back", async () => {
    mountApp(replayFetch());
    await openRecordedSession();
    selectCluster("c1");
    setSlider("50");
    el("drill-button").click();
    await vi.waitFor(() => {
      expect(document.querySelector("#cluster-table .empty-state")).not.toBeNull();
    });
    expect(document.querySelector("#cluster-table .empty-state")!.textContent).toBe(
      "no sub-clusters above threshold",
    );
    expect(el<HTMLButtonElement>("back-button").disabled).toBe(false);
    el("back-button").click();
    expect(tableIds()).toHaveLength(12);
  });

  it("mirrors the hover readout off the table's own rational", async () => {
    mountApp(replayFetch());
    await openRecordedSession();
    const index = el<HTMLInputElement>("slice-index");
    index.value = "3";
    index.dispatchEvent(new Event("change", { bubbles: true }));
    await vi.waitFor(() => {
      // retried until the z=3 slice answer has landed
      el("slice-canvas").dispatchEvent(
        new MouseEvent("mousemove", { clientX: 20, clientY: 20, bubbles: true }),
      );
      expect(el("hover-readout").textContent).toBe("(1, 1, 3) stat 15.46 · c1 TDP 86.59%");
    });
    const text = el("hover-readout").textContent ?? "";
    const c1 = document.querySelector('#cluster-table tr[data-cluster-id="c1"]')!;
    expect(text.endsWith(`c1 TDP ${c1.children[3]!.textContent}`)).toBe(true);
  });

  it("announces slice clamping and keeps the layer across axis changes", async () => {
    mountApp(replayFetch());
    await openRecordedSession();
    el<HTMLSelectElement>("slice-axis").value = "x";
    const index = el<HTMLInputElement>("slice-index");
    index.value = "99";
    index.dispatchEvent(new Event("change", { bubbles: true }));
    await vi.waitFor(() => {
      expect(el("notice").hidden).toBe(false);
    });
    expect(el("notice").textContent).toBe("slice index clamped to 11");
    expect(el<HTMLSelectElement>("slice-layer").value).toBe("stat");
  });
});

describe("failure paths", () => {
  it("surfaces a server rejection inline and applies nothing", async () => {
    const rejected = exchange("drill_rejected");
    const replay = replayFetch();
    const fetchFn: FetchLike = async (url, init) => {
      const u = new URL(url, "http://fixture.test");
      if (u.pathname.endsWith("/drill")) return jsonResponse(422, rejected.response);
      return replay(url, init);
    };
    mountApp(fetchFn);
    await openRecordedSession();
    selectCluster("c1");
    setSlider("9");
    el("drill-button").click();
    await vi.waitFor(() => {
      expect(el("error-banner").hidden).toBe(false);
    });
    expect(el("error-banner").textContent).toBe(
      (rejected.response as { detail: string }).detail,
    );
    expect(breadcrumbTexts()).toHaveLength(1);
    expect(tableIds()).toHaveLength(12);
  });

  it("drops a stale drill answer that lands after a newer one", async () => {
    let releaseFirst!: () => void;
    const gate = new Promise<void>((resolve) => { releaseFirst = resolve; });
    const replay = replayFetch();
    const fetchFn: FetchLike = async (url, init) => {
      const u = new URL(url, "http://fixture.test");
      if (u.pathname.endsWith("/drill")) {
        const body = JSON.parse(init?.body as string) as { threshold: number };
        if (body.threshold === 9) {
          await gate;   // recorded split held back until after the second answer
          return jsonResponse(200, exchange("drill_split").response);
        }
        return jsonResponse(200, exchange("drill_empty").response);
      }
      return replay(url, init);
    };
    mountApp(fetchFn);
    await openRecordedSession();
    selectCluster("c1");
    setSlider("9");
    el("drill-button").click();
    setSlider("50");
    el("drill-button").click();
    await vi.waitFor(() => {
      expect(document.querySelector("#cluster-table .empty-state")).not.toBeNull();
    });
    releaseFirst();
    await new Promise((resolve) => setTimeout(resolve, 0));
    await new Promise((resolve) => setTimeout(resolve, 0));
    // the held-back split never surfaces: still the newer empty result
    expect(document.querySelector("#cluster-table .empty-state")).not.toBeNull();
    expect(breadcrumbTexts()).toEqual(["all voxels · T > 2.5", "c1 · T > 50"]);
    expect(el("error-banner").hidden).toBe(true);
  });
});
