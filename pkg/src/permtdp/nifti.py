"""Minimal single-file NIfTI-1 volume reader and writer.

Covers exactly what the pipeline ingests and emits: uncompressed ``.nii``
files with magic ``n+1\\0``, five datatypes (uint8, int16, int32, float32,
float64), 3D volumes (masks, statistic maps) and 4D volumes with subjects
along the fourth axis.  Both byte orders are handled; the header's
``sizeof_hdr`` field decides which one a file uses.  Orientation metadata
(qform/sform) is ignored: coordinates are plain voxel-grid indices.

Every rejection carries a machine-readable ``code`` and the byte offset of
the offending field.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .model import SubjectContrasts, VolumeGeometry, build_geometry

__all__ = [
    "NIFTI_DATATYPES",
    "NiftiError",
    "Nifti1Volume",
    "read_nifti_volume",
    "write_nifti_volume",
    "mask_geometry",
    "subjects_from_volume",
]

# datatype code -> (numpy base type, bitpix)
NIFTI_DATATYPES = {
    2: (np.uint8, 8),
    4: (np.int16, 16),
    8: (np.int32, 32),
    16: (np.float32, 32),
    64: (np.float64, 64),
}

_HEADER_SIZE = 348
_MAGIC_OFFSET = 344


class NiftiError(ValueError):
    """A malformed or unsupported volume file; ``code`` names the defect."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Nifti1Volume:
    """A decoded volume: scaled float64 values plus the header facts kept."""

    values: np.ndarray            # (nx, ny, nz) or (nx, ny, nz, nt) float64
    datatype: int
    scl_slope: float
    scl_inter: float
    byte_order: str               # "<" | ">"

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.values.shape[:3])

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[3]) if self.values.ndim == 4 else 1


def read_nifti_volume(path) -> Nifti1Volume:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER_SIZE)
        if len(header) < _HEADER_SIZE:
            raise NiftiError(
                "truncated_header",
                f"{path}: header ends at byte {len(header)}, need {_HEADER_SIZE}",
            )
        order = None
        for candidate in ("<", ">"):
            if struct.unpack_from(candidate + "i", header, 0)[0] == _HEADER_SIZE:
                order = candidate
                break
        if order is None:
            raise NiftiError(
                "bad_header_size",
                f"{path}: sizeof_hdr at byte 0 decodes to 348 under neither byte order",
            )
        magic = header[_MAGIC_OFFSET : _MAGIC_OFFSET + 4]
        if magic == b"ni1\x00":
            raise NiftiError(
                "two_file_unsupported",
                f"{path}: unsupported two-file NIfTI (magic 'ni1' at byte {_MAGIC_OFFSET})",
            )
        if magic != b"n+1\x00":
            raise NiftiError(
                "bad_magic", f"{path}: bad magic {magic!r} at byte {_MAGIC_OFFSET}"
            )
        dim = struct.unpack_from(order + "8h", header, 40)
        datatype, bitpix = struct.unpack_from(order + "2h", header, 70)
        vox_offset, scl_slope, scl_inter = struct.unpack_from(order + "3f", header, 108)
        if datatype not in NIFTI_DATATYPES:
            raise NiftiError(
                "unsupported_datatype",
                f"{path}: datatype code {datatype} at byte 70 is not one of "
                f"{sorted(NIFTI_DATATYPES)}",
            )
        base, want_bits = NIFTI_DATATYPES[datatype]
        if bitpix != want_bits:
            raise NiftiError(
                "bitpix_mismatch",
                f"{path}: bitpix {bitpix} at byte 72 but datatype {datatype} needs {want_bits}",
            )
        ndim = dim[0]
        if ndim not in (3, 4):
            raise NiftiError(
                "unsupported_dimensionality",
                f"{path}: dim[0] = {ndim} at byte 40; only 3D and 4D volumes are supported",
            )
        shape = tuple(int(d) for d in dim[1 : ndim + 1])
        if any(d < 1 for d in shape):
            raise NiftiError(
                "bad_dimensions", f"{path}: non-positive dimension in {shape} at byte 42"
            )
        offset = int(vox_offset)
        if offset < _HEADER_SIZE:
            raise NiftiError(
                "bad_vox_offset", f"{path}: vox_offset {offset} at byte 108 precedes the header end"
            )
        count = int(np.prod(shape))
        nbytes = count * (want_bits // 8)
        fh.seek(offset)
        raw = fh.read(nbytes)
        if len(raw) < nbytes:
            raise NiftiError(
                "truncated_data",
                f"{path}: data section at byte {offset} holds {len(raw)} bytes, need {nbytes}",
            )
    dtype = np.dtype(base).newbyteorder(order)
    values = np.frombuffer(raw, dtype=dtype).astype(np.float64).reshape(shape, order="F")
    if scl_slope != 0.0:
        values = values * float(scl_slope) + float(scl_inter)
    return Nifti1Volume(
        values=values,
        datatype=int(datatype),
        scl_slope=float(scl_slope),
        scl_inter=float(scl_inter),
        byte_order=order,
    )


def write_nifti_volume(
    path,
    raw_values: np.ndarray,
    datatype: int = 16,
    scl_slope: float = 0.0,
    scl_inter: float = 0.0,
    byte_order: str = "<",
) -> None:
    """Write raw (unscaled) values; slope/inter go into the header verbatim.

    Integer datatypes store ``raw_values`` cast to the target type, so the
    caller is responsible for passing representable values.
    """
    if datatype not in NIFTI_DATATYPES:
        raise NiftiError(
            "unsupported_datatype", f"cannot write datatype code {datatype}"
        )
    if byte_order not in ("<", ">"):
        raise ValueError(f"byte_order must be '<' or '>', got {byte_order!r}")
    arr = np.asarray(raw_values)
    if arr.ndim not in (3, 4):
        raise ValueError(f"volume must be 3D or 4D, got shape {arr.shape}")
    base, bitpix = NIFTI_DATATYPES[datatype]
    dim = [arr.ndim, *arr.shape] + [1] * (7 - arr.ndim)
    header = bytearray(_HEADER_SIZE)
    struct.pack_into(byte_order + "i", header, 0, _HEADER_SIZE)
    struct.pack_into(byte_order + "8h", header, 40, *dim)
    struct.pack_into(byte_order + "2h", header, 70, datatype, bitpix)
    struct.pack_into(byte_order + "8f", header, 76, 1.0, *([1.0] * 7))
    struct.pack_into(
        byte_order + "3f", header, 108, float(_HEADER_SIZE + 4), scl_slope, scl_inter
    )
    header[_MAGIC_OFFSET : _MAGIC_OFFSET + 4] = b"n+1\x00"
    payload = np.asfortranarray(arr).astype(np.dtype(base).newbyteorder(byte_order))
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(b"\x00\x00\x00\x00")   # no header extensions
        fh.write(payload.tobytes(order="F"))


def mask_geometry(volume: Nifti1Volume) -> VolumeGeometry:
    """Interpret a 3D volume as a mask: nonzero means in-mask."""
    if volume.values.ndim != 3:
        raise NiftiError("bad_mask", f"mask volume must be 3D, got {volume.values.ndim}D")
    return build_geometry(volume.dims, volume.values != 0.0)


def subjects_from_volume(volume: Nifti1Volume, geometry: VolumeGeometry) -> SubjectContrasts:
    """Extract the subjects-by-voxels matrix of a 4D volume over a mask."""
    if volume.values.ndim != 4:
        raise NiftiError(
            "bad_subject_volume", f"subject volume must be 4D, got {volume.values.ndim}D"
        )
    if volume.dims != geometry.dims:
        raise ValueError(f"volume dims {volume.dims} do not match mask dims {geometry.dims}")
    nt = volume.values.shape[3]
    flat = volume.values.reshape((geometry.grid_size, nt), order="F")
    return SubjectContrasts(flat[geometry.mask].T, geometry=geometry)
