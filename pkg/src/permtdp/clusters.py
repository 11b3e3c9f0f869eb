"""Cluster formation on the voxel grid and drill-down re-clustering.

Clusters are connected components of the strict supra-threshold set
{i : stat_i > z} under a 6, 18, or 26 neighborhood.  Formation is decoupled
from inference: a cluster is just a voxel subset, and any externally defined
subset can be scored the same way.  Reports attach the discovery bound and
peak information per cluster and can be flattened to a per-voxel map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .bounds import CriticalVector, tdp_lower_bound
from .model import TdpResult, VolumeGeometry, VoxelSubset

__all__ = [
    "CONNECTIVITIES",
    "ClusterEntry",
    "ClusterReport",
    "threshold_clusters",
    "drill_down",
    "build_report",
    "tdp_map",
]

CONNECTIVITIES = (6, 18, 26)

# generate_binary_structure ranks: 1 = faces, 2 = +edges, 3 = +corners
_STRUCTURE_RANK = {6: 1, 18: 2, 26: 3}


def _check_stat_map(stat_map: np.ndarray, geometry: VolumeGeometry) -> np.ndarray:
    stat = np.asarray(stat_map, dtype=np.float64)
    if stat.ndim != 1 or stat.shape[0] != geometry.m:
        raise ValueError(
            f"statistic map must have length m={geometry.m}, got shape {stat.shape}"
        )
    return stat


def _components(
    member: np.ndarray, geometry: VolumeGeometry, connectivity: int
) -> list[VoxelSubset]:
    """Connected components of a compact-index membership mask, largest first."""
    if connectivity not in _STRUCTURE_RANK:
        raise ValueError(f"connectivity must be one of {CONNECTIVITIES}, got {connectivity}")
    if not member.any():
        return []
    nx, ny, nz = geometry.dims
    vol = np.zeros(geometry.grid_size, dtype=bool)
    vol[np.flatnonzero(geometry.mask)[member]] = True
    structure = ndimage.generate_binary_structure(3, _STRUCTURE_RANK[connectivity])
    labels, n = ndimage.label(vol.reshape((nx, ny, nz), order="F"), structure=structure)
    flat_labels = labels.reshape(-1, order="F")[geometry.mask]
    subsets = []
    for lab in range(1, n + 1):
        subsets.append(VoxelSubset(np.flatnonzero(flat_labels == lab), m=geometry.m))
    subsets.sort(key=lambda s: (-s.size, int(s.indices[0])))
    return subsets


def threshold_clusters(
    stat_map: np.ndarray, geometry: VolumeGeometry, z: float, connectivity: int = 26
) -> list[VoxelSubset]:
    """Connected components of {i : stat_i > z}, descending size order.

    Ties in size break by the smallest member index, so the ordering (and the
    cluster ids derived from it) is deterministic.
    """
    stat = _check_stat_map(stat_map, geometry)
    return _components(stat > z, geometry, connectivity)


def drill_down(
    parent: VoxelSubset,
    stat_map: np.ndarray,
    geometry: VolumeGeometry,
    z_higher: float,
    connectivity: int = 26,
) -> list[VoxelSubset]:
    """Re-cluster at a stricter threshold inside one parent subset."""
    stat = _check_stat_map(stat_map, geometry)
    if parent.indices[-1] >= geometry.m:
        raise ValueError(
            f"parent index {int(parent.indices[-1])} out of range for m={geometry.m}"
        )
    member = np.zeros(geometry.m, dtype=bool)
    member[parent.indices] = True
    member &= stat > z_higher
    return _components(member, geometry, connectivity)


@dataclass(frozen=True)
class ClusterEntry:
    id: str
    subset: VoxelSubset
    tdp: TdpResult
    peak_coord: tuple[int, int, int]
    peak_stat: float

    @property
    def size(self) -> int:
        return self.subset.size

    def to_dict(self, voxels: bool = False) -> dict:
        x, y, z = self.peak_coord
        out = {
            "id": self.id,
            "size": self.size,
            "tdp_lower_bound": self.tdp.lower_bound,
            "tdp": float(self.tdp.lower_bound / self.tdp.size),
            "peak": {"x": x, "y": y, "z": z},
            "peak_stat": self.peak_stat,
        }
        if voxels:
            out["voxels"] = [int(i) for i in self.subset.indices]
        return out


@dataclass(frozen=True)
class ClusterReport:
    clusters: tuple[ClusterEntry, ...]
    threshold: float
    connectivity: int

    def to_dict(self, voxels: bool = False) -> dict:
        return {
            "schema_version": "1",
            "threshold": self.threshold,
            "connectivity": self.connectivity,
            "clusters": [c.to_dict(voxels=voxels) for c in self.clusters],
        }


def build_report(
    subsets: "list[VoxelSubset]",
    observed_p: np.ndarray,
    critical: CriticalVector,
    stat_map: np.ndarray,
    geometry: VolumeGeometry,
    threshold: float,
    connectivity: int = 26,
    id_start: int = 1,
) -> ClusterReport:
    """Score subsets into a report: bound, peak coordinate, peak statistic.

    The peak is the largest absolute observed statistic in the cluster; ties
    resolve to the first voxel in scan order.  ``id_start`` offsets the
    generated cluster ids so a session can keep them unique across reports.
    """
    stat = _check_stat_map(stat_map, geometry)
    entries = []
    for k, subset in enumerate(subsets):
        result = tdp_lower_bound(subset, observed_p, critical)
        magnitude = np.abs(stat[subset.indices])
        at = int(subset.indices[np.argmax(magnitude)])   # argmax takes the first tie
        entries.append(
            ClusterEntry(
                id=f"c{id_start + k}",
                subset=subset,
                tdp=result,
                peak_coord=geometry.coord_at(at),
                peak_stat=float(magnitude.max()),
            )
        )
    return ClusterReport(
        clusters=tuple(entries), threshold=float(threshold), connectivity=int(connectivity)
    )


def tdp_map(report: ClusterReport, geometry: VolumeGeometry) -> np.ndarray:
    """Per-voxel map of each cluster's discovery proportion, 0 elsewhere."""
    out = np.zeros(geometry.m, dtype=np.float64)
    for entry in report.clusters:
        out[entry.subset.indices] = entry.tdp.lower_bound / entry.tdp.size
    return out
