/** Exploration state: breadcrumb path, report cache, drill gating.
 *
 * This module is pure bookkeeping. It decides which requests are allowed
 * and remembers what the server answered; it never touches the network or
 * the DOM, which is what makes the monotonicity property testable over
 * random interaction scripts.
 *
 * The server refuses a drill whose threshold does not exceed the parent
 * cluster's forming threshold. The client enforces the same rule before a
 * request exists, so a threshold-ordering rejection cannot be produced
 * through this interface at all.
 */

import type { ClusterEntry, ClusterReport } from "./types.js";

export interface PathNode {
  kind: "clusters" | "drill";
  /** drill source cluster; null for the root table */
  clusterId: string | null;
  threshold: number;
  connectivity: number;
  key: string;
}

export interface ClustersDescriptor {
  kind: "clusters";
  threshold: number;
  connectivity: number;
  key: string;
}

export interface DrillDescriptor {
  kind: "drill";
  clusterId: string;
  threshold: number;
  connectivity: number;
  key: string;
}

export type RequestDescriptor = ClustersDescriptor | DrillDescriptor;

function clustersKey(threshold: number, connectivity: number): string {
  return `clusters|${threshold}|${connectivity}`;
}

function drillKey(clusterId: string, threshold: number, connectivity: number): string {
  return `drill|${clusterId}|${threshold}|${connectivity}`;
}

export class ExplorerState {
  readonly connectivity: number;
  private readonly cache = new Map<string, ClusterReport>();
  private path: PathNode[] = [];
  private selectedId: string | null = null;

  constructor(connectivity = 26) {
    this.connectivity = connectivity;
  }

  get depth(): number {
    return this.path.length;
  }

  get breadcrumb(): readonly PathNode[] {
    return this.path;
  }

  get current(): PathNode | null {
    return this.path.length ? this.path[this.path.length - 1]! : null;
  }

  get currentReport(): ClusterReport | null {
    const node = this.current;
    return node ? this.cache.get(node.key) ?? null : null;
  }

  get selected(): ClusterEntry | null {
    const report = this.currentReport;
    if (!report || this.selectedId === null) return null;
    return report.clusters.find((c) => c.id === this.selectedId) ?? null;
  }

  /** Thresholds along the breadcrumb; strictly increasing by construction. */
  thresholds(): number[] {
    return this.path.map((node) => node.threshold);
  }

  selectCluster(id: string | null): boolean {
    if (id === null) {
      this.selectedId = null;
      return true;
    }
    const report = this.currentReport;
    if (!report || !report.clusters.some((c) => c.id === id)) return false;
    this.selectedId = id;
    return true;
  }

  /** A drill is allowed only off a selected cluster and strictly deeper
   * than the table it came from. */
  canDrill(threshold: number): boolean {
    const node = this.current;
    return (
      node !== null &&
      this.selected !== null &&
      Number.isFinite(threshold) &&
      threshold > node.threshold
    );
  }

  /** Start (or re-open) a root table. Returns the cached report when the
   * same query already ran, otherwise the request to send. */
  openRoot(
    threshold: number,
    connectivity = this.connectivity,
  ): { cached: ClusterReport } | { request: ClustersDescriptor } {
    const key = clustersKey(threshold, connectivity);
    const cached = this.cache.get(key);
    if (cached) {
      this.path = [{ kind: "clusters", clusterId: null, threshold, connectivity, key }];
      this.selectedId = null;
      return { cached };
    }
    return { request: { kind: "clusters", threshold, connectivity, key } };
  }

  applyRoot(request: ClustersDescriptor, report: ClusterReport): void {
    this.cache.set(request.key, report);
    this.path = [{
      kind: "clusters",
      clusterId: null,
      threshold: request.threshold,
      connectivity: request.connectivity,
      key: request.key,
    }];
    this.selectedId = null;
  }

  /** The only way a drill request comes into existence. Returns null when
   * the gate is closed, a cached report when the server already answered
   * this exact drill, or the descriptor to POST. */
  requestDrill(
    threshold: number,
  ): { cached: ClusterReport; descriptor: DrillDescriptor } | { request: DrillDescriptor } | null {
    if (!this.canDrill(threshold)) return null;
    const cluster = this.selected!;
    const connectivity = this.current!.connectivity;
    const key = drillKey(cluster.id, threshold, connectivity);
    const descriptor: DrillDescriptor = {
      kind: "drill",
      clusterId: cluster.id,
      threshold,
      connectivity,
      key,
    };
    const cached = this.cache.get(key);
    if (cached) {
      this.push(descriptor);
      return { cached, descriptor };
    }
    return { request: descriptor };
  }

  applyDrill(request: DrillDescriptor, report: ClusterReport): void {
    const node = this.current;
    if (!node || request.threshold <= node.threshold) {
      throw new Error(
        `drill out of order: ${request.threshold} over ${node?.threshold}`,
      );
    }
    this.cache.set(request.key, report);
    this.push(request);
  }

  private push(request: DrillDescriptor): void {
    this.path.push({
      kind: "drill",
      clusterId: request.clusterId,
      threshold: request.threshold,
      connectivity: request.connectivity,
      key: request.key,
    });
    this.selectedId = null;
  }

  /** Pop one level. Purely a cache read; never produces a request. */
  back(): boolean {
    if (this.path.length <= 1) return false;
    this.path.pop();
    this.selectedId = null;
    return true;
  }

  /** Breadcrumb click: truncate to the given depth (index inclusive). */
  jump(index: number): boolean {
    if (index < 0 || index >= this.path.length - 1) return false;
    this.path = this.path.slice(0, index + 1);
    this.selectedId = null;
    return true;
  }
}
