/** Cluster table: one row per cluster, sortable, selection by click.
 *
 * Cell text comes from the report entry fields through the formatting
 * helpers and nothing else. Sorting by proportion compares the rationals
 * by cross-multiplication, so the order matches exact arithmetic even
 * where the float ratios would tie.
 */

import { formatPeak, formatPercent, formatStat } from "./format.js";
import type { ClusterEntry, ClusterReport } from "./types.js";

export type SortColumn = "default" | "size" | "tdp" | "peak_stat";

export interface TableOptions {
  onSelect?: (id: string) => void;
  selectedId?: string | null;
  sortBy?: SortColumn;
  descending?: boolean;
  emptyMessage?: string;
}

function compare(a: ClusterEntry, b: ClusterEntry, column: SortColumn): number {
  switch (column) {
    case "size":
      return a.size - b.size;
    case "tdp":
      return a.tdp_lower_bound * b.size - b.tdp_lower_bound * a.size;
    case "peak_stat":
      return a.peak_stat - b.peak_stat;
    default:
      return 0;
  }
}

export function orderedClusters(
  report: ClusterReport,
  sortBy: SortColumn = "default",
  descending = false,
): ClusterEntry[] {
  const rows = [...report.clusters];
  if (sortBy === "default") return rows;   // API order: size-descending
  rows.sort((a, b) => compare(a, b, sortBy));
  if (descending) rows.reverse();
  return rows;
}

const HEADERS: ReadonlyArray<readonly [string, SortColumn]> = [
  ["cluster", "default"],
  ["size", "size"],
  ["true discoveries ≥", "tdp"],
  ["TDP ≥", "tdp"],
  ["peak", "default"],
  ["peak |t|", "peak_stat"],
];

export function renderClusterTable(
  container: HTMLElement,
  report: ClusterReport,
  options: TableOptions = {},
): void {
  container.textContent = "";
  if (!report.clusters.length) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = options.emptyMessage ?? "no supra-threshold clusters";
    container.appendChild(empty);
    return;
  }
  const table = document.createElement("table");
  table.className = "cluster-table";
  const head = table.createTHead().insertRow();
  for (const [label, column] of HEADERS) {
    const th = document.createElement("th");
    th.textContent = label;
    th.dataset.sort = column;
    head.appendChild(th);
  }
  const body = table.createTBody();
  for (const entry of orderedClusters(report, options.sortBy, options.descending)) {
    const row = body.insertRow();
    row.dataset.clusterId = entry.id;
    if (entry.id === options.selectedId) row.classList.add("selected");
    row.insertCell().textContent = entry.id;
    row.insertCell().textContent = String(entry.size);
    row.insertCell().textContent = String(entry.tdp_lower_bound);
    row.insertCell().textContent = formatPercent(entry.tdp_lower_bound, entry.size);
    row.insertCell().textContent = formatPeak(entry.peak);
    row.insertCell().textContent = formatStat(entry.peak_stat);
    if (options.onSelect) {
      row.addEventListener("click", () => options.onSelect!(entry.id));
    }
  }
  container.appendChild(table);
}
