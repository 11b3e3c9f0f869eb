/** Slice heatmap: plain 2D canvas over the plane grid.
 *
 * Rasterization is split from painting so the cell colors, boundary
 * flags, and hover readouts are testable without a canvas. Colors scale
 * the plane's own values for presentation, but every number surfaced to
 * the user (readout text) is quoted from the API payloads untouched.
 */

import { formatPercent, formatStat } from "./format.js";
import type { ClusterEntry, SlicePayload } from "./types.js";
import { cellToCoord } from "./grid.js";

export interface CellRaster {
  rows: number;
  cols: number;
  fill: string[][];
  /** cluster boundary cells, drawn as outlines over the fill */
  boundary: boolean[][];
}

const OFF_MASK = "#14161a";

function statColor(value: number, scale: number): string {
  // symmetric diverging ramp around zero
  const t = Math.max(-1, Math.min(1, scale > 0 ? value / scale : 0));
  const mag = Math.round(Math.abs(t) * 200);
  return t >= 0
    ? `rgb(${55 + mag}, ${55 + Math.round(mag * 0.35)}, 55)`
    : `rgb(55, ${55 + Math.round(mag * 0.55)}, ${55 + mag})`;
}

function tdpColor(value: number): string {
  // 0..1 sequential ramp
  const t = Math.max(0, Math.min(1, value));
  const mag = Math.round(t * 200);
  return `rgb(${40 + Math.round(mag * 0.3)}, ${40 + mag}, ${40 + Math.round(mag * 0.6)})`;
}

export function rasterize(
  slice: SlicePayload,
  membership: Map<string, ClusterEntry>,
): CellRaster {
  const [rows, cols] = slice.shape;
  const R = rows ?? 0;
  const C = cols ?? 0;
  let scale = 0;
  for (const row of slice.values) {
    for (const v of row) scale = Math.max(scale, Math.abs(v));
  }
  const fill: string[][] = [];
  const boundary: boolean[][] = [];
  for (let r = 0; r < R; r += 1) {
    const fillRow: string[] = [];
    const edgeRow: boolean[] = [];
    for (let c = 0; c < C; c += 1) {
      const masked = slice.in_mask[r]?.[c] ?? false;
      const value = slice.values[r]?.[c] ?? 0;
      if (!masked) {
        fillRow.push(OFF_MASK);
        edgeRow.push(false);
        continue;
      }
      fillRow.push(slice.layer === "stat" ? statColor(value, scale) : tdpColor(value));
      const cluster = membership.get(`${r},${c}`);
      if (!cluster) {
        edgeRow.push(false);
        continue;
      }
      const neighbors = [
        membership.get(`${r - 1},${c}`),
        membership.get(`${r + 1},${c}`),
        membership.get(`${r},${c - 1}`),
        membership.get(`${r},${c + 1}`),
      ];
      edgeRow.push(neighbors.some((n) => n?.id !== cluster.id));
    }
    fill.push(fillRow);
    boundary.push(edgeRow);
  }
  return { rows: R, cols: C, fill, boundary };
}

export function draw(
  ctx: CanvasRenderingContext2D,
  raster: CellRaster,
  cellSize: number,
): void {
  ctx.canvas.width = raster.cols * cellSize;
  ctx.canvas.height = raster.rows * cellSize;
  for (let r = 0; r < raster.rows; r += 1) {
    for (let c = 0; c < raster.cols; c += 1) {
      ctx.fillStyle = raster.fill[r]![c]!;
      ctx.fillRect(c * cellSize, r * cellSize, cellSize, cellSize);
    }
  }
  ctx.strokeStyle = "#ffd54a";
  ctx.lineWidth = Math.max(1, cellSize / 8);
  for (let r = 0; r < raster.rows; r += 1) {
    for (let c = 0; c < raster.cols; c += 1) {
      if (raster.boundary[r]![c]!) {
        ctx.strokeRect(c * cellSize + 0.5, r * cellSize + 0.5, cellSize - 1, cellSize - 1);
      }
    }
  }
}

/** Canvas pixel -> plane cell, or null outside the grid. */
export function hitTest(
  px: number,
  py: number,
  cellSize: number,
  rows: number,
  cols: number,
): readonly [number, number] | null {
  const r = Math.floor(py / cellSize);
  const c = Math.floor(px / cellSize);
  if (r < 0 || c < 0 || r >= rows || c >= cols) return null;
  return [r, c];
}

/** Hover text. The statistic is read from the statistic-layer payload and
 * the cluster proportion from the report's own rational, so the readout
 * can never disagree with the table. */
export function readout(
  statSlice: SlicePayload,
  membership: Map<string, ClusterEntry>,
  row: number,
  col: number,
): string {
  const [x, y, z] = cellToCoord(statSlice.axis, statSlice.index, row, col);
  if (!(statSlice.in_mask[row]?.[col] ?? false)) {
    return `(${x}, ${y}, ${z}) outside mask`;
  }
  const value = statSlice.values[row]?.[col] ?? 0;
  const base = `(${x}, ${y}, ${z}) stat ${formatStat(value)}`;
  const cluster = membership.get(`${row},${col}`);
  if (!cluster) return base;
  return `${base} · ${cluster.id} TDP ${formatPercent(cluster.tdp_lower_bound, cluster.size)}`;
}
