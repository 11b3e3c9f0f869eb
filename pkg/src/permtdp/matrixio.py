"""Delimited matrix files, subset files, and JSON report plumbing.

Matrices are comma- or tab-separated text, one subject per row, one voxel per
column, with an optional header row.  The writer emits 17 significant digits
so a write-then-read round trip reproduces float64 values bit for bit.
Readers reject rather than guess: every parse error names its 1-based
(row, column) location.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .clusters import ClusterReport, tdp_map
from .model import SubjectContrasts, VolumeGeometry, VoxelSubset, subset_from_coords

__all__ = [
    "read_matrix",
    "write_matrix",
    "read_subset",
    "write_subset",
    "read_json",
    "write_json",
    "write_tdp_map",
]

SCHEMA_VERSION = "1"


def _split_line(line: str, delimiter: str) -> list[str]:
    return [cell.strip() for cell in line.split(delimiter)]


def read_matrix(path: "str | os.PathLike") -> SubjectContrasts:
    """Read a subjects-by-voxels matrix from delimited text.

    The delimiter is a tab when the first line contains one, else a comma.
    A first row with any non-numeric cell is treated as a header and skipped.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in (raw.rstrip("\r\n") for raw in fh) if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: no data rows")
    delimiter = "\t" if "\t" in lines[0] else ","
    first = _split_line(lines[0], delimiter)
    start = 0
    try:
        [float(c) for c in first]
    except ValueError:
        start = 1
        if len(lines) == 1:
            raise ValueError(f"{path}: only a header row, no data") from None
    width = len(_split_line(lines[start], delimiter))
    rows = np.empty((len(lines) - start, width), dtype=np.float64)
    for r, line in enumerate(lines[start:]):
        cells = _split_line(line, delimiter)
        if len(cells) != width:
            raise ValueError(
                f"{path}: row {r + 1} has {len(cells)} cells, expected {width}"
            )
        for c, cell in enumerate(cells):
            if not cell:
                raise ValueError(f"{path}: blank cell at (row {r + 1}, col {c + 1})")
            try:
                value = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric cell {cell!r} at (row {r + 1}, col {c + 1})"
                ) from None
            if not math.isfinite(value):
                raise ValueError(
                    f"{path}: non-finite cell {cell!r} at (row {r + 1}, col {c + 1})"
                )
            rows[r, c] = value
    return SubjectContrasts(rows)


def write_matrix(
    data: np.ndarray, path: "str | os.PathLike", delimiter: str = ","
) -> None:
    """Write a 2D array as delimited text at full float64 precision."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"matrix must be 2D, got shape {data.shape}")
    with open(path, "w", encoding="utf-8") as fh:
        for row in data:
            fh.write(delimiter.join("%.17g" % v for v in row))
            fh.write("\n")


def read_subset(
    path: "str | os.PathLike", geometry: "VolumeGeometry | None" = None, m: "int | None" = None
) -> VoxelSubset:
    """Read a voxel subset from JSON: {"indices": [...]} or {"coords": [[x,y,z], ...]}.

    Coordinate form needs a geometry to resolve against.  An empty list is an
    error: subsets are nonempty by definition.
    """
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: subset file must be a JSON object")
    has_idx = "indices" in obj
    has_coords = "coords" in obj
    if has_idx == has_coords:
        raise ValueError(f"{path}: subset file needs exactly one of 'indices' or 'coords'")
    if has_idx:
        idx = obj["indices"]
        if not isinstance(idx, list) or not idx:
            raise ValueError(f"{path}: 'indices' must be a nonempty list")
        bound = geometry.m if geometry is not None else m
        return VoxelSubset(np.asarray(idx, dtype=np.int64), m=bound)
    if geometry is None:
        raise ValueError(f"{path}: coordinate subsets require a mask geometry")
    coords = obj["coords"]
    if not isinstance(coords, list) or not coords:
        raise ValueError(f"{path}: 'coords' must be a nonempty list")
    return subset_from_coords(geometry, np.asarray(coords, dtype=np.int64))


def write_subset(subset: VoxelSubset, path: "str | os.PathLike") -> None:
    write_json({"schema_version": SCHEMA_VERSION, "indices": [int(i) for i in subset.indices]}, path)


def read_json(path: "str | os.PathLike"):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON at line {exc.lineno}, col {exc.colno}") from None


def write_json(obj, path: "str | os.PathLike") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_tdp_map(
    report: ClusterReport,
    geometry: VolumeGeometry,
    path: "str | os.PathLike",
    format: str = "nifti",
) -> None:
    """Export the per-voxel discovery-proportion map.

    NIfTI output is a float32 volume on the full grid with zeros off-mask;
    CSV output is one (x, y, z, tdp) row per in-mask voxel.
    """
    values = tdp_map(report, geometry)
    if format == "nifti":
        from .nifti import write_nifti_volume

        nx, ny, nz = geometry.dims
        grid = np.zeros(geometry.grid_size, dtype=np.float64)
        grid[geometry.mask] = values
        write_nifti_volume(path, grid.reshape((nx, ny, nz), order="F"), datatype=16)
    elif format == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,y,z,tdp\n")
            for (x, y, z), v in zip(geometry.coords, values):
                fh.write("%d,%d,%d,%.17g\n" % (x, y, z, v))
    else:
        raise ValueError(f"unknown tdp map format {format!r}")
