/** Single-page wiring: session form, cluster table, breadcrumb, slice
 * viewer. All data flows through ApiClient; ExplorerState decides which
 * requests may exist; renderers quote API fields. Stale slice and drill
 * answers are dropped by lane sequence numbers. */

import { ApiClient, ApiError, RequestLane } from "./api.js";
import { renderBreadcrumb } from "./breadcrumb.js";
import { formatLambda, formatThreshold } from "./format.js";
import { VoxelGrid, clusterLookup, planeMembership } from "./grid.js";
import { draw, hitTest, rasterize, readout } from "./heatmap.js";
import { ExplorerState } from "./state.js";
import { renderClusterTable } from "./table.js";
import type { SliceAxis, SliceLayer, SlicePayload } from "./types.js";

const CELL_SIZE = 18;

interface SliceSelection {
  axis: SliceAxis;
  index: number;
  layer: SliceLayer;
}

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export class ExplorerApp {
  private readonly api: ApiClient;
  private readonly state = new ExplorerState();
  private readonly drillLane = new RequestLane();
  private readonly sliceLane = new RequestLane();
  private sessionId: string | null = null;
  private grid: VoxelGrid | null = null;
  private statSlice: SlicePayload | null = null;
  private shownSlice: SlicePayload | null = null;
  private selection: SliceSelection = { axis: "z", index: 0, layer: "stat" };

  constructor(api: ApiClient) {
    this.api = api;
  }

  mount(): void {
    element<HTMLFormElement>("session-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.openSession();
    });
    element<HTMLButtonElement>("drill-button").addEventListener("click", () => {
      void this.drill();
    });
    element<HTMLButtonElement>("back-button").addEventListener("click", () => {
      if (this.state.back()) this.renderExploration();
    });
    element<HTMLInputElement>("drill-threshold").addEventListener("input", () => {
      this.syncDrillGate();
    });
    element<HTMLButtonElement>("root-button").addEventListener("click", () => {
      void this.openRoot();
    });
    for (const id of ["slice-axis", "slice-index", "slice-layer"] as const) {
      element<HTMLElement>(id).addEventListener("change", () => {
        void this.refreshSlice();
      });
    }
    const canvas = element<HTMLCanvasElement>("slice-canvas");
    canvas.addEventListener("mousemove", (ev) => this.hover(ev));
  }

  private banner(text: string | null): void {
    const node = element<HTMLElement>("error-banner");
    node.textContent = text ?? "";
    node.hidden = text === null;
  }

  private notice(text: string | null): void {
    const node = element<HTMLElement>("notice");
    node.textContent = text ?? "";
    node.hidden = text === null;
  }

  private async openSession(): Promise<void> {
    this.banner(null);
    const data = element<HTMLInputElement>("data-path").value.trim();
    const geometry = element<HTMLInputElement>("geometry-path").value.trim();
    const alpha = Number(element<HTMLInputElement>("alpha").value) || 0.05;
    const w = Number(element<HTMLInputElement>("permutations").value) || 1000;
    try {
      const created = await this.api.createSession({
        data,
        geometry: geometry || undefined,
        alpha,
        w,
      });
      this.sessionId = created.id;
      let status = await this.api.status(created.id);
      while (status.status === "computing") {
        await new Promise((resolve) => setTimeout(resolve, 250));
        status = await this.api.status(created.id);
      }
      if (status.status === "failed") {
        this.banner(status.error ?? "session failed");
        return;
      }
      element<HTMLElement>("session-label").textContent =
        `session ${status.id} · m=${status.m} · w=${status.w} · ` +
        `alpha=${status.alpha} · lambda=${formatLambda(status.lambda_alpha ?? 0)}`;
      this.grid = await this.loadGrid();
      await this.openRoot();
    } catch (err) {
      this.banner(err instanceof ApiError ? String(err.message) : String(err));
    }
  }

  private async loadGrid(): Promise<VoxelGrid> {
    const sid = this.sessionId!;
    const first = await this.api.slice(sid, "z", 0, "stat");
    const depth = first.dims[2] ?? 1;
    const rest = await Promise.all(
      Array.from({ length: depth - 1 }, (_, k) => this.api.slice(sid, "z", k + 1, "stat")),
    );
    return VoxelGrid.fromZSlices([first, ...rest]);
  }

  private async openRoot(): Promise<void> {
    if (!this.sessionId) return;
    this.banner(null);
    const threshold = Number(element<HTMLInputElement>("root-threshold").value);
    const opened = this.state.openRoot(threshold);
    if ("request" in opened) {
      try {
        const report = await this.api.clusters(
          this.sessionId, opened.request.threshold, opened.request.connectivity,
        );
        this.state.applyRoot(opened.request, report);
      } catch (err) {
        this.banner(err instanceof ApiError ? String(err.message) : String(err));
        return;
      }
    }
    this.renderExploration();
    await this.refreshSlice();
  }

  private async drill(): Promise<void> {
    if (!this.sessionId) return;
    this.banner(null);
    const threshold = Number(element<HTMLInputElement>("drill-threshold").value);
    const pending = this.state.requestDrill(threshold);
    if (pending === null) return;          // gate closed; button should be disabled
    if ("cached" in pending) {
      this.renderExploration();
      await this.refreshSlice();
      return;
    }
    const seq = this.drillLane.begin();
    try {
      const report = await this.api.drill(this.sessionId, {
        threshold: pending.request.threshold,
        cluster_id: pending.request.clusterId,
        connectivity: pending.request.connectivity,
      });
      if (!this.drillLane.isCurrent(seq)) return;   // a newer drill superseded this one
      this.state.applyDrill(pending.request, report);
      this.renderExploration();
      await this.refreshSlice();
    } catch (err) {
      if (!this.drillLane.isCurrent(seq)) return;
      this.banner(err instanceof ApiError ? String(err.message) : String(err));
    }
  }

  private renderExploration(): void {
    const report = this.state.currentReport;
    if (!report) return;
    renderClusterTable(element<HTMLElement>("cluster-table"), report, {
      selectedId: this.state.selected?.id ?? null,
      onSelect: (id) => {
        this.state.selectCluster(id);
        this.renderExploration();
      },
      emptyMessage:
        this.state.depth > 1 ? "no sub-clusters above threshold" : undefined,
    });
    renderBreadcrumb(element<HTMLElement>("breadcrumb"), this.state.breadcrumb, (index) => {
      if (this.state.jump(index)) this.renderExploration();
    });
    element<HTMLButtonElement>("back-button").disabled = this.state.depth <= 1;
    const label = element<HTMLElement>("table-caption");
    label.textContent = `clusters at T > ${formatThreshold(report.threshold)}`;
    this.syncDrillGate();
  }

  private syncDrillGate(): void {
    const threshold = Number(element<HTMLInputElement>("drill-threshold").value);
    element<HTMLButtonElement>("drill-button").disabled = !this.state.canDrill(threshold);
  }

  private async refreshSlice(): Promise<void> {
    if (!this.sessionId || !this.grid) return;
    const axis = element<HTMLSelectElement>("slice-axis").value as SliceAxis;
    const index = Number(element<HTMLInputElement>("slice-index").value) || 0;
    const layer = element<HTMLSelectElement>("slice-layer").value as SliceLayer;
    this.selection = { axis, index, layer };
    const seq = this.sliceLane.begin();
    try {
      const shown = await this.api.slice(this.sessionId, axis, index, layer);
      const stat =
        layer === "stat" ? shown : await this.api.slice(this.sessionId, axis, shown.index, "stat");
      if (!this.sliceLane.isCurrent(seq)) return;
      this.shownSlice = shown;
      this.statSlice = stat;
      this.notice(
        shown.clamped ? `slice index clamped to ${shown.index}` : null,
      );
      this.paint();
    } catch (err) {
      if (!this.sliceLane.isCurrent(seq)) return;
      this.banner(err instanceof ApiError ? String(err.message) : String(err));
    }
  }

  private membership() {
    const report = this.state.currentReport;
    if (!report || !this.grid || !this.shownSlice) return new Map<string, never>();
    return planeMembership(
      clusterLookup(report), this.grid,
      this.shownSlice.axis, this.shownSlice.index, this.shownSlice.shape,
    );
  }

  private paint(): void {
    if (!this.shownSlice) return;
    const canvas = element<HTMLCanvasElement>("slice-canvas");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    draw(ctx, rasterize(this.shownSlice, this.membership()), CELL_SIZE);
  }

  private hover(ev: MouseEvent): void {
    if (!this.statSlice) return;
    const canvas = element<HTMLCanvasElement>("slice-canvas");
    const bounds = canvas.getBoundingClientRect();
    const [rows, cols] = this.statSlice.shape;
    const cell = hitTest(
      ev.clientX - bounds.left, ev.clientY - bounds.top, CELL_SIZE, rows ?? 0, cols ?? 0,
    );
    const node = element<HTMLElement>("hover-readout");
    node.textContent = cell
      ? readout(this.statSlice, this.membership(), cell[0], cell[1])
      : "";
  }
}

if (typeof document !== "undefined" && document.getElementById("session-form")) {
  new ExplorerApp(new ApiClient("")).mount();
}
