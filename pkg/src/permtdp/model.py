"""Core data model: volume geometry, subject contrast matrices, voxel subsets.

Voxels live on a 3D grid of shape (nx, ny, nz).  Linear coordinates follow the
volume file layout: x varies fastest, so voxel (x, y, z) sits at linear index
x + nx*(y + ny*z).  A boolean mask over the full grid selects the in-mask
voxels, which are numbered compactly 0..m-1 in ascending linear order.  All
statistics, p-values, and bounds are indexed by compact voxel index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "VolumeGeometry",
    "SubjectContrasts",
    "VoxelSubset",
    "TdpResult",
    "build_geometry",
    "subset_from_coords",
]


def _frozen_array(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VolumeGeometry:
    """Immutable mapping between grid coordinates and compact voxel indices."""

    dims: tuple[int, int, int]
    mask: np.ndarray          # bool, flat length nx*ny*nz, x fastest
    index_of: np.ndarray      # int64, flat length, -1 off mask
    coords: np.ndarray        # (m, 3) int64, coords of compact voxels

    @property
    def m(self) -> int:
        return int(self.coords.shape[0])

    @property
    def grid_size(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def linear(self, x: int, y: int, z: int) -> int:
        nx, ny, nz = self.dims
        if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
            raise ValueError(f"coordinate ({x}, {y}, {z}) outside grid {self.dims}")
        return x + nx * (y + ny * z)

    def index_at(self, x: int, y: int, z: int) -> int:
        """Compact index of an in-mask coordinate; raises if off-mask."""
        k = int(self.index_of[self.linear(x, y, z)])
        if k < 0:
            raise ValueError(f"coordinate ({x}, {y}, {z}) is outside the mask")
        return k

    def coord_at(self, index: int) -> tuple[int, int, int]:
        if not 0 <= index < self.m:
            raise ValueError(f"voxel index {index} out of range for m={self.m}")
        x, y, z = self.coords[index]
        return int(x), int(y), int(z)


def build_geometry(dims: tuple[int, int, int], mask: np.ndarray) -> VolumeGeometry:
    """Build a :class:`VolumeGeometry` from grid dims and a flat or 3D mask.

    A 3D mask must be indexed [x, y, z]; it is flattened x-fastest.  The mask
    must select at least one voxel.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    mask = np.asarray(mask)
    if mask.ndim == 3:
        if mask.shape != dims:
            raise ValueError(f"3D mask shape {mask.shape} does not match dims {dims}")
        flat = np.asarray(mask, dtype=bool).reshape(-1, order="F")
    elif mask.ndim == 1:
        if mask.shape[0] != dims[0] * dims[1] * dims[2]:
            raise ValueError(
                f"flat mask length {mask.shape[0]} does not match grid size "
                f"{dims[0] * dims[1] * dims[2]}"
            )
        flat = np.asarray(mask, dtype=bool).copy()
    else:
        raise ValueError("mask must be 1D (flat) or 3D")
    m = int(flat.sum())
    if m == 0:
        raise ValueError("mask selects no voxels")
    index_of = np.full(flat.shape[0], -1, dtype=np.int64)
    lin = np.flatnonzero(flat)
    index_of[lin] = np.arange(m, dtype=np.int64)
    nx, ny, _ = dims
    x = lin % nx
    y = (lin // nx) % ny
    z = lin // (nx * ny)
    coords = np.column_stack([x, y, z]).astype(np.int64)
    return VolumeGeometry(
        dims=dims,
        mask=_frozen_array(flat),
        index_of=_frozen_array(index_of),
        coords=_frozen_array(coords),
    )


@dataclass(frozen=True)
class SubjectContrasts:
    """Per-subject contrast values: one row per subject, one column per voxel."""

    data: np.ndarray                      # (J, m) float64, finite
    geometry: VolumeGeometry | None = None
    subject_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"contrast data must be 2D (subjects x voxels), got shape {data.shape}")
        if data.shape[0] < 2:
            raise ValueError(f"need at least 2 subjects, got {data.shape[0]}")
        if data.shape[1] < 1:
            raise ValueError("need at least one voxel column")
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise ValueError(f"non-finite contrast value at subject {bad[0]}, voxel {bad[1]}")
        if self.geometry is not None and self.geometry.m != data.shape[1]:
            raise ValueError(
                f"data has {data.shape[1]} voxel columns but geometry has m={self.geometry.m}"
            )
        ids = self.subject_ids
        if not ids:
            ids = tuple(f"s{j + 1}" for j in range(data.shape[0]))
        elif len(ids) != data.shape[0]:
            raise ValueError(f"{len(ids)} subject ids for {data.shape[0]} subjects")
        object.__setattr__(self, "data", _frozen_array(data))
        object.__setattr__(self, "subject_ids", tuple(ids))

    @property
    def n_subjects(self) -> int:
        return int(self.data.shape[0])

    @property
    def m(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class VoxelSubset:
    """A set of compact voxel indices, stored sorted and unique."""

    indices: np.ndarray   # int64, strictly increasing
    m: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        idx = np.unique(np.asarray(self.indices, dtype=np.int64).reshape(-1))
        if idx.size == 0:
            raise ValueError("voxel subset is empty")
        if idx[0] < 0:
            raise ValueError(f"negative voxel index {idx[0]}")
        if self.m is not None and idx[-1] >= self.m:
            raise ValueError(f"voxel index {idx[-1]} out of range for m={self.m}")
        object.__setattr__(self, "indices", _frozen_array(idx))

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def __contains__(self, index: int) -> bool:
        pos = np.searchsorted(self.indices, index)
        return pos < self.indices.size and self.indices[pos] == index


def subset_from_coords(
    geometry: VolumeGeometry, coords: "list[tuple[int, int, int]] | np.ndarray"
) -> VoxelSubset:
    """Build a subset from (x, y, z) coordinates; duplicates collapse.

    Raises with the offending coordinate when one is off-grid or off-mask.
    """
    arr = np.asarray(coords, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("coords must be a sequence of (x, y, z) triples")
    if arr.shape[0] == 0:
        raise ValueError("voxel subset is empty")
    indices = [geometry.index_at(int(x), int(y), int(z)) for x, y, z in arr]
    return VoxelSubset(np.asarray(indices, dtype=np.int64), m=geometry.m)


@dataclass(frozen=True)
class TdpResult:
    """A simultaneous lower confidence bound on a subset's discovery count.

    ``lower_bound`` of the ``size`` voxels are true discoveries with the
    stated simultaneous confidence; ``tdp`` is the exact rational quotient.
    ``argmax_u`` is the smallest maximizer of the bound formula, kept for
    diagnostics.
    """

    lower_bound: int
    size: int
    argmax_u: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("size must be positive")
        if not 0 <= self.lower_bound <= self.size:
            raise ValueError(f"lower_bound {self.lower_bound} outside [0, {self.size}]")
        if not 1 <= self.argmax_u <= self.size:
            raise ValueError(f"argmax_u {self.argmax_u} outside [1, {self.size}]")

    @property
    def tdp(self) -> Fraction:
        return Fraction(self.lower_bound, self.size)

    def to_dict(self) -> dict:
        return {
            "lower_bound": int(self.lower_bound),
            "size": int(self.size),
            "tdp": float(self.lower_bound / self.size),
            "argmax_u": int(self.argmax_u),
        }
