"""In-memory 3-D voxel grids and NIfTI-1 file I/O.

Arrays are indexed ``[x, y, z]`` everywhere in the toolkit; on disk the
x axis is fastest (NIfTI native layout), so serialization uses Fortran
element order. Orientation and affine header fields are carried as
opaque bytes and re-emitted on write: all geometry here is voxel-index
geometry.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    BadHeaderError,
    BadMagicError,
    TruncatedDataError,
    UnsupportedDatatypeError,
    WrongKindError,
)

HEADER_SIZE = 348
VOX_OFFSET = 352  # header + 4-byte extension flag
GZIP_MAGIC = b"\x1f\x8b"
NIFTI_MAGICS = (b"n+1\x00", b"ni1\x00")

# NIfTI-1 datatype codes we read and write. Anything else is rejected
# rather than coerced.
_CODE_TO_DTYPE = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    8: np.dtype(np.int32),
    16: np.dtype(np.float32),
}
_DTYPE_TO_CODE = {v: k for k, v in _CODE_TO_DTYPE.items()}

_HEADER_DTYPE = np.dtype([
    ("sizeof_hdr", "<i4"),
    ("data_type", "S10"),
    ("db_name", "S18"),
    ("extents", "<i4"),
    ("session_error", "<i2"),
    ("regular", "S1"),
    ("dim_info", "u1"),
    ("dim", "<i2", (8,)),
    ("intent_p1", "<f4"),
    ("intent_p2", "<f4"),
    ("intent_p3", "<f4"),
    ("intent_code", "<i2"),
    ("datatype", "<i2"),
    ("bitpix", "<i2"),
    ("slice_start", "<i2"),
    ("pixdim", "<f4", (8,)),
    ("vox_offset", "<f4"),
    ("scl_slope", "<f4"),
    ("scl_inter", "<f4"),
    ("slice_end", "<i2"),
    ("slice_code", "u1"),
    ("xyzt_units", "u1"),
    ("cal_max", "<f4"),
    ("cal_min", "<f4"),
    ("slice_duration", "<f4"),
    ("toffset", "<f4"),
    ("glmax", "<i4"),
    ("glmin", "<i4"),
    ("descrip", "S80"),
    ("aux_file", "S24"),
    ("qform_code", "<i2"),
    ("sform_code", "<i2"),
    ("quatern_b", "<f4"),
    ("quatern_c", "<f4"),
    ("quatern_d", "<f4"),
    ("qoffset_x", "<f4"),
    ("qoffset_y", "<f4"),
    ("qoffset_z", "<f4"),
    ("srow_x", "<f4", (4,)),
    ("srow_y", "<f4", (4,)),
    ("srow_z", "<f4", (4,)),
    ("intent_name", "S16"),
    ("magic", "S4"),
])
assert _HEADER_DTYPE.itemsize == HEADER_SIZE


class VolumeKind(Enum):
    INTENSITY = "intensity"        # CT intensities, Hounsfield units
    BINARY_MASK = "binary_mask"    # values in {0, 1}
    LABELED_MASK = "labeled_mask"  # non-negative component ids


@dataclass(eq=False)
class Volume3D:
    """Immutable dense voxel grid with per-axis spacing in mm.

    ``data`` has shape ``(nx, ny, nz)`` and is frozen after
    construction, so instances are safe to share across threads.
    Spacing is stored at float32 precision (the precision of the NIfTI
    ``pixdim`` field), which keeps write/read round trips bit-exact.
    """

    data: np.ndarray = field(repr=False)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    kind: VolumeKind = VolumeKind.INTENSITY
    header_meta: bytes | None = field(default=None, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or min(data.shape) < 1:
            raise BadHeaderError("volume data must be a non-empty 3-D array, got shape %s" % (data.shape,))
        if data.dtype not in _DTYPE_TO_CODE:
            raise UnsupportedDatatypeError(
                "dtype %s not supported (use one of %s)"
                % (data.dtype, ", ".join(str(d) for d in _DTYPE_TO_CODE))
            )
        spacing = tuple(float(np.float32(s)) for s in self.spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise BadHeaderError("spacing must be three positive values, got %s" % (self.spacing,))
        if self.kind is VolumeKind.BINARY_MASK:
            if not np.issubdtype(data.dtype, np.integer) or not bool(((data == 0) | (data == 1)).all()):
                raise WrongKindError("binary mask must contain only integer {0, 1}")
        elif self.kind is VolumeKind.LABELED_MASK:
            if not np.issubdtype(data.dtype, np.integer) or (data.size and int(data.min()) < 0):
                raise WrongKindError("labeled mask must contain non-negative integers")
        if data.flags.writeable:
            data = data.copy()  # callers keep their array mutable; ours is frozen
            data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def nvox(self) -> int:
        return int(self.data.size)

    def __eq__(self, other) -> bool:
        """Equality over dims, spacing, kind, and bit-exact voxel data."""
        if not isinstance(other, Volume3D):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.dims == other.dims
            and self.spacing == other.spacing
            and self.data.dtype == other.data.dtype
            and bool(np.array_equal(self.data, other.data))
        )

    def with_data(self, data: np.ndarray, kind: VolumeKind | None = None) -> Volume3D:
        """New volume with replaced voxels, same spacing and header."""
        return Volume3D(data=data, spacing=self.spacing,
                        kind=self.kind if kind is None else kind,
                        header_meta=self.header_meta)

    def as_binary_mask(self) -> Volume3D:
        """Reinterpret as a binary mask; any nonzero voxel becomes 1."""
        if self.kind is VolumeKind.BINARY_MASK:
            return self
        return self.with_data((self.data != 0).astype(np.uint8), VolumeKind.BINARY_MASK)

    def as_labeled_mask(self) -> Volume3D:
        """Reinterpret integer voxels as component ids."""
        if self.kind is VolumeKind.LABELED_MASK:
            return self
        if not np.issubdtype(self.data.dtype, np.integer):
            raise WrongKindError("labeled masks require an integer dtype, got %s" % self.data.dtype)
        return self.with_data(self.data.astype(np.int32), VolumeKind.LABELED_MASK)


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------


def read_volume(path: str | Path) -> Volume3D:
    """Read a NIfTI-1 volume (.nii, plain or gzip-compressed).

    Compression is detected from the leading two bytes, not the file
    name. Dims and spacing come from the header; the raw 348 header
    bytes are retained on the volume for round-tripping. The returned
    kind is always INTENSITY; use :meth:`Volume3D.as_binary_mask` or
    :meth:`Volume3D.as_labeled_mask` when the file holds a mask.

    Raises
    ------
    FileNotFoundError, BadMagicError, UnsupportedDatatypeError,
    TruncatedDataError, BadHeaderError
    """
    path = Path(path)
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)

    if len(raw) < HEADER_SIZE:
        raise BadMagicError("%s: file shorter than a NIfTI-1 header" % path)
    hdr = np.frombuffer(raw[:HEADER_SIZE], dtype=_HEADER_DTYPE)[0]
    # magic sits at bytes 344:348; read it raw, numpy strips trailing NULs
    if int(hdr["sizeof_hdr"]) != HEADER_SIZE or raw[344:348] not in NIFTI_MAGICS:
        raise BadMagicError("%s: not a NIfTI-1 file" % path)

    code = int(hdr["datatype"])
    if code not in _CODE_TO_DTYPE:
        raise UnsupportedDatatypeError("%s: NIfTI datatype code %d not supported" % (path, code))
    dtype = _CODE_TO_DTYPE[code]

    ndim = int(hdr["dim"][0])
    if ndim < 3:
        raise BadHeaderError("%s: only 3-D volumes supported, header says %d-D" % (path, ndim))
    if any(int(d) > 1 for d in hdr["dim"][4:ndim + 1]):
        raise BadHeaderError("%s: non-singleton dimensions beyond the third" % path)
    dims = tuple(int(d) for d in hdr["dim"][1:4])
    if min(dims) < 1:
        raise BadHeaderError("%s: non-positive dims %s" % (path, dims))
    spacing = tuple(float(p) for p in hdr["pixdim"][1:4])
    if any(s <= 0 for s in spacing):
        raise BadHeaderError("%s: non-positive pixdim %s" % (path, spacing))

    offset = int(hdr["vox_offset"])
    if offset < HEADER_SIZE:
        offset = HEADER_SIZE
    nbytes = int(np.prod(dims)) * dtype.itemsize
    payload = raw[offset:offset + nbytes]
    if len(payload) < nbytes:
        raise TruncatedDataError(
            "%s: expected %d data bytes, found %d" % (path, nbytes, len(payload))
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(dims, order="F")
    return Volume3D(data=data, spacing=spacing, kind=VolumeKind.INTENSITY,
                    header_meta=raw[:HEADER_SIZE])


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------


def _build_header(vol: Volume3D) -> bytes:
    """Header for ``vol``: retained bytes patched, or a fresh minimal one."""
    if vol.header_meta is not None and len(vol.header_meta) == HEADER_SIZE:
        hdr = np.frombuffer(vol.header_meta, dtype=_HEADER_DTYPE).copy()[0]
    else:
        hdr = np.zeros((), dtype=_HEADER_DTYPE)
        hdr["regular"] = b"r"
        hdr["pixdim"][0] = 1.0
        hdr["scl_slope"] = 1.0
        hdr["xyzt_units"] = 2  # mm
        hdr["descrip"] = b"ulsforge"
    hdr["sizeof_hdr"] = HEADER_SIZE
    dim = np.ones(8, dtype=np.int16)
    dim[0] = 3
    dim[1:4] = vol.dims
    hdr["dim"] = dim
    hdr["pixdim"][1:4] = np.asarray(vol.spacing, dtype=np.float32)
    hdr["datatype"] = _DTYPE_TO_CODE[vol.data.dtype]
    hdr["bitpix"] = vol.data.dtype.itemsize * 8
    hdr["vox_offset"] = float(VOX_OFFSET)
    hdr["magic"] = NIFTI_MAGICS[0]
    return hdr.tobytes()


def write_volume(vol: Volume3D, path: str | Path, compress: bool | None = None) -> None:
    """Write ``vol`` as a single-file NIfTI-1 volume.

    ``compress=None`` infers gzip from a ``.gz`` suffix; pass an
    explicit bool to override. Reading the written file reproduces
    dims, spacing, and voxel data bit-exactly.
    """
    path = Path(path)
    if compress is None:
        compress = path.suffix == ".gz"
    blob = _build_header(vol) + b"\x00" * (VOX_OFFSET - HEADER_SIZE) + vol.data.tobytes(order="F")
    if compress:
        # mtime fixed so identical volumes produce identical bytes
        blob = gzip.compress(blob, mtime=0)
    path.write_bytes(blob)
