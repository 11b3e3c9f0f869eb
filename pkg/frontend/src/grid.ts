/** Voxel grid reconstruction from slice responses.
 *
 * Cluster voxel lists use compact indices: positions 0..m-1 over in-mask
 * voxels in Fortran order (x fastest) of the full grid. The slice endpoint
 * exposes the mask plane by plane, so accumulating every z plane once
 * recovers the full mapping between compact indices and grid coordinates.
 * Everything drawn or hovered afterwards resolves through this table; the
 * client never re-derives geometry on its own.
 */

import type { ClusterEntry, ClusterReport, SliceAxis, SlicePayload } from "./types.js";

export type Coord = readonly [number, number, number];

export class VoxelGrid {
  readonly dims: Coord;
  readonly m: number;
  private readonly compact: Int32Array;   // full F-order position -> compact or -1
  private readonly coords: Int32Array;    // compact -> full F-order position

  private constructor(dims: Coord, compact: Int32Array, coords: Int32Array, m: number) {
    this.dims = dims;
    this.compact = compact;
    this.coords = coords;
    this.m = m;
  }

  /** Build from one slice response per z index, any order, all required. */
  static fromZSlices(planes: SlicePayload[]): VoxelGrid {
    if (!planes.length) throw new Error("no slices to build a grid from");
    const first = planes[0]!;
    const [X, Y, Z] = first.dims;
    if (X === undefined || Y === undefined || Z === undefined) {
      throw new Error(`bad dims ${JSON.stringify(first.dims)}`);
    }
    const byIndex = new Map<number, SlicePayload>();
    for (const plane of planes) {
      if (plane.axis !== "z") throw new Error(`expected z slices, got ${plane.axis}`);
      byIndex.set(plane.index, plane);
    }
    const dims: Coord = [X, Y, Z];
    const compact = new Int32Array(X * Y * Z).fill(-1);
    let count = 0;
    for (let z = 0; z < Z; z += 1) {
      const plane = byIndex.get(z);
      if (!plane) throw new Error(`missing z slice ${z}`);
      for (let y = 0; y < Y; y += 1) {
        for (let x = 0; x < X; x += 1) {
          if (plane.in_mask[x]?.[y]) {
            compact[x + X * (y + Y * z)] = count;
            count += 1;
          }
        }
      }
    }
    const coords = new Int32Array(count);
    for (let p = 0; p < compact.length; p += 1) {
      const c = compact[p]!;
      if (c >= 0) coords[c] = p;
    }
    return new VoxelGrid(dims, compact, coords, count);
  }

  compactAt(x: number, y: number, z: number): number {
    const [X, Y, Z] = this.dims;
    if (x < 0 || y < 0 || z < 0 || x >= X || y >= Y || z >= Z) return -1;
    return this.compact[x + X * (y + Y * z)]!;
  }

  coordOf(compactIndex: number): Coord {
    if (compactIndex < 0 || compactIndex >= this.m) {
      throw new RangeError(`compact index ${compactIndex} outside 0..${this.m - 1}`);
    }
    const [X, Y] = this.dims;
    const p = this.coords[compactIndex]!;
    const x = p % X;
    const rest = (p - x) / X;
    const y = rest % Y;
    const z = (rest - y) / Y;
    return [x, y, z];
  }
}

/** Plane cell (row, col) -> grid coordinate under the service's slicing:
 * dropping the sliced axis keeps the other two in x, y, z order. */
export function cellToCoord(
  axis: SliceAxis,
  index: number,
  row: number,
  col: number,
): Coord {
  switch (axis) {
    case "x":
      return [index, row, col];
    case "y":
      return [row, index, col];
    case "z":
      return [row, col, index];
  }
}

/** Compact voxel index -> cluster entry, for reports fetched with voxel
 * lists. Reports without voxels simply produce no overlay. */
export function clusterLookup(report: ClusterReport): Map<number, ClusterEntry> {
  const lookup = new Map<number, ClusterEntry>();
  for (const cluster of report.clusters) {
    for (const voxel of cluster.voxels ?? []) {
      lookup.set(voxel, cluster);
    }
  }
  return lookup;
}

/** Which cells of the displayed plane belong to which cluster. */
export function planeMembership(
  lookup: Map<number, ClusterEntry>,
  grid: VoxelGrid,
  axis: SliceAxis,
  index: number,
  shape: readonly number[],
): Map<string, ClusterEntry> {
  const [rows, cols] = shape;
  const cells = new Map<string, ClusterEntry>();
  for (let r = 0; r < (rows ?? 0); r += 1) {
    for (let c = 0; c < (cols ?? 0); c += 1) {
      const [x, y, z] = cellToCoord(axis, index, r, c);
      const compact = grid.compactAt(x, y, z);
      if (compact < 0) continue;
      const cluster = lookup.get(compact);
      if (cluster) cells.set(`${r},${c}`, cluster);
    }
  }
  return cells;
}
