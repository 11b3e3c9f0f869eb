import { describe, expect, it } from "vitest";

import { VoxelGrid, cellToCoord, clusterLookup, planeMembership } from "../src/grid.js";
import { reportOf, sliceOf, zSlices } from "./helpers/fixture.js";

describe("VoxelGrid reconstruction", () => {
  const grid = VoxelGrid.fromZSlices(zSlices());

  it("recovers the recorded mask size and dimensions", () => {
    expect(grid.dims).toEqual([12, 10, 8]);
    // 12*10*8 minus the two voxels carved out of the recorded mask
    expect(grid.m).toBe(958);
  });

  it("maps the carved-out voxels to nothing", () => {
    expect(grid.compactAt(11, 9, 7)).toBe(-1);
    expect(grid.compactAt(11, 9, 6)).toBe(-1);
    expect(grid.compactAt(0, 0, 0)).toBe(0);   // first voxel in x-fastest order
    expect(grid.compactAt(1, 0, 0)).toBe(1);
    expect(grid.compactAt(-1, 0, 0)).toBe(-1);
    expect(grid.compactAt(12, 0, 0)).toBe(-1);
  });

  it("round-trips compact indices through coordinates", () => {
    for (let compact = 0; compact < grid.m; compact += 97) {
      const [x, y, z] = grid.coordOf(compact);
      expect(grid.compactAt(x, y, z)).toBe(compact);
    }
    expect(() => grid.coordOf(-1)).toThrow(RangeError);
    expect(() => grid.coordOf(grid.m)).toThrow(RangeError);
  });

  it("places every recorded cluster voxel inside the mask", () => {
    for (const cluster of reportOf("clusters_root").clusters) {
      for (const voxel of cluster.voxels ?? []) {
        const [x, y, z] = grid.coordOf(voxel);
        expect(grid.compactAt(x, y, z)).toBe(voxel);
      }
    }
  });

  it("refuses an incomplete stack of planes", () => {
    expect(() => VoxelGrid.fromZSlices(zSlices().slice(0, 3))).toThrow(/missing z slice/);
    expect(() => VoxelGrid.fromZSlices([sliceOf("slice_clamped")])).toThrow(/expected z slices/);
  });
});

describe("cellToCoord", () => {
  it("drops the sliced axis and keeps the rest in x, y, z order", () => {
    expect(cellToCoord("z", 3, 1, 2)).toEqual([1, 2, 3]);
    expect(cellToCoord("x", 5, 1, 2)).toEqual([5, 1, 2]);
    expect(cellToCoord("y", 4, 1, 2)).toEqual([1, 4, 2]);
  });
});

describe("plane membership", () => {
  const grid = VoxelGrid.fromZSlices(zSlices());
  const report = reportOf("clusters_root");

  it("marks exactly the cells whose voxels the report lists on that plane", () => {
    const plane = sliceOf("slice_z3");
    const cells = planeMembership(clusterLookup(report), grid, "z", 3, plane.shape);
    // independent recount: walk the voxel lists instead of the plane
    let expected = 0;
    for (const cluster of report.clusters) {
      for (const voxel of cluster.voxels ?? []) {
        if (grid.coordOf(voxel)[2] === 3) expected += 1;
      }
    }
    expect(cells.size).toBe(expected);
    expect(cells.size).toBe(37);   // frozen from the recorded voxel lists
    for (const [key, cluster] of cells) {
      const parts = key.split(",").map(Number);
      const [x, y, z] = cellToCoord("z", 3, parts[0]!, parts[1]!);
      expect(cluster.voxels).toContain(grid.compactAt(x, y, z));
    }
  });

  it("is empty when the report carries no voxel lists", () => {
    const stripped = {
      ...report,
      clusters: report.clusters.map(({ voxels: _voxels, ...rest }) => rest),
    };
    const cells = planeMembership(clusterLookup(stripped), grid, "z", 3, [12, 10]);
    expect(cells.size).toBe(0);
  });
});
