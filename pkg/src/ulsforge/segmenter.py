"""Pluggable segmenters.

Two backends sit behind one call surface: a deterministic HU-window
region grower for pipeline verification and known-answer tests, and an
external-process adapter that sends VOIs to a real model through a
five-placeholder command template (see ``PLACEHOLDERS``).
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from collections import deque
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    BadMaskDimsError,
    BadMaskValuesError,
    ClickOutOfVolumeError,
    ClickOutsideWindowError,
    ProcessFailedError,
    SegmenterTimeoutError,
)
from .lesions import CONNECTIVITIES, _structure
from .volume import Volume3D, VolumeKind, read_volume, write_volume

PLACEHOLDERS = ("{image}", "{x}", "{y}", "{z}", "{output}")

BUILTIN = "builtin"
EXTERNAL = "external"

# permissive soft-tissue window; tests and demos pass explicit windows
DEFAULT_HU_WINDOW = (-160, 240)


@dataclass(frozen=True)
class GrowParams:
    """Region-growing configuration: inclusive HU bounds and a growth cap."""

    hu_window: tuple[float, float] = DEFAULT_HU_WINDOW
    connectivity: int = 26
    max_voxels: int = 10 * 128 * 128

    def __post_init__(self):
        lo, hi = self.hu_window
        if lo > hi:
            raise ValueError("hu_window lo %r > hi %r" % (lo, hi))
        if self.max_voxels < 1:
            raise ValueError("max_voxels must be >= 1")
        if self.connectivity not in CONNECTIVITIES:
            raise ValueError("connectivity must be one of %s" % (CONNECTIVITIES,))


@dataclass(frozen=True)
class SegmenterRef:
    """Reference to a segmenter: the builtin grower or an external command."""

    kind: str
    grow_params: GrowParams | None = None
    command: str | None = None
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.kind == BUILTIN:
            if self.grow_params is None:
                object.__setattr__(self, "grow_params", GrowParams())
        elif self.kind == EXTERNAL:
            if not self.command:
                raise ValueError("external segmenter needs a command template")
            missing = [p for p in PLACEHOLDERS if p not in self.command]
            if missing:
                raise ValueError("command template missing placeholder(s): %s" % ", ".join(missing))
            if self.timeout_s <= 0:
                raise ValueError("timeout_s must be positive")
        else:
            raise ValueError("kind must be %r or %r" % (BUILTIN, EXTERNAL))

    @classmethod
    def builtin(cls, params: GrowParams | None = None) -> SegmenterRef:
        return cls(kind=BUILTIN, grow_params=params or GrowParams())

    @classmethod
    def external(cls, command: str, timeout_s: float = 60.0) -> SegmenterRef:
        return cls(kind=EXTERNAL, command=command, timeout_s=timeout_s)

    @property
    def model_id(self) -> str:
        if self.kind == BUILTIN:
            lo, hi = self.grow_params.hu_window
            return "builtin-grow[%g,%g]" % (lo, hi)
        return "external"


@dataclass(eq=False)
class SegmentationResult:
    mask: Volume3D
    truncated: bool = False


def _neighbor_offsets(connectivity: int) -> list[tuple[int, int, int]]:
    max_l1 = {6: 1, 18: 2, 26: 3}[connectivity]
    offsets = [
        (dx, dy, dz)
        for dx, dy, dz in product((-1, 0, 1), repeat=3)
        if (dx, dy, dz) != (0, 0, 0) and abs(dx) + abs(dy) + abs(dz) <= max_l1
    ]
    return sorted(offsets)


def segment_region_grow(voi_image: Volume3D, local_click: tuple[int, int, int],
                        params: GrowParams, strict: bool = True) -> SegmentationResult:
    """Flood fill from the click over voxels inside the HU window.

    Growth is breadth-first with neighbors visited in lexicographic
    (dx, dy, dz) order, so the voxel set kept when ``max_voxels``
    truncates is deterministic. The grower is translation-equivariant:
    shifting content and click together shifts the output identically.

    A seed voxel outside the window raises ClickOutsideWindowError in
    strict mode and yields an empty mask otherwise.
    """
    data = voi_image.data
    if any(c < 0 or c >= n for c, n in zip(local_click, data.shape)):
        raise ClickOutOfVolumeError("click %s outside VOI dims %s" % (local_click, data.shape))
    lo, hi = params.hu_window
    seed = tuple(int(c) for c in local_click)
    if not lo <= data[seed] <= hi:
        if strict:
            raise ClickOutsideWindowError(
                "seed intensity %g outside window [%g, %g]" % (data[seed], lo, hi))
        empty = np.zeros(data.shape, dtype=np.uint8)
        return SegmentationResult(Volume3D(empty, spacing=voi_image.spacing,
                                           kind=VolumeKind.BINARY_MASK))

    in_window = (data >= lo) & (data <= hi)
    labeled, _ = ndimage.label(in_window, structure=_structure(params.connectivity))
    component = labeled == labeled[seed]
    size = int(component.sum())
    if size <= params.max_voxels:
        mask = component.astype(np.uint8)
        truncated = False
    else:
        mask = _grow_bfs(in_window, seed, params)
        truncated = True
    return SegmentationResult(
        Volume3D(mask, spacing=voi_image.spacing, kind=VolumeKind.BINARY_MASK),
        truncated=truncated,
    )


def _grow_bfs(in_window: np.ndarray, seed: tuple[int, int, int], params: GrowParams) -> np.ndarray:
    """First max_voxels voxels in breadth-first discovery order."""
    offsets = _neighbor_offsets(params.connectivity)
    shape = in_window.shape
    accepted = np.zeros(shape, dtype=np.uint8)
    accepted[seed] = 1
    count = 1
    queue = deque([seed])
    while queue and count < params.max_voxels:
        x, y, z = queue.popleft()
        for dx, dy, dz in offsets:
            nx, ny, nz = x + dx, y + dy, z + dz
            if not (0 <= nx < shape[0] and 0 <= ny < shape[1] and 0 <= nz < shape[2]):
                continue
            if accepted[nx, ny, nz] or not in_window[nx, ny, nz]:
                continue
            accepted[nx, ny, nz] = 1
            count += 1
            if count >= params.max_voxels:
                return accepted
            queue.append((nx, ny, nz))
    return accepted


def segment_external(voi_image: Volume3D, local_click: tuple[int, int, int],
                     ref: SegmenterRef) -> SegmentationResult:
    """Run an external segmenter process on one VOI.

    The VOI is written to a private temp directory, the command template
    is invoked with ``{image} {x} {y} {z} {output}`` substituted, and the
    produced mask is validated (NIfTI, VOI dims, values in {0, 1})
    before it can reach any metric.

    Raises
    ------
    ProcessFailedError, SegmenterTimeoutError, BadMaskDimsError,
    BadMaskValuesError
    """
    if ref.kind != EXTERNAL:
        raise ValueError("segment_external needs an external SegmenterRef")
    with tempfile.TemporaryDirectory(prefix="ulsforge-seg-") as tmp:
        image_path = Path(tmp) / "input.nii.gz"
        output_path = Path(tmp) / "output.nii.gz"
        write_volume(voi_image, image_path)
        subs = {
            "{image}": str(image_path),
            "{x}": str(int(local_click[0])),
            "{y}": str(int(local_click[1])),
            "{z}": str(int(local_click[2])),
            "{output}": str(output_path),
        }
        argv = []
        for token in shlex.split(ref.command):
            for key, value in subs.items():
                token = token.replace(key, value)
            argv.append(token)
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=ref.timeout_s)
        except subprocess.TimeoutExpired:
            raise SegmenterTimeoutError("segmenter exceeded %gs: %s" % (ref.timeout_s, argv[0]))
        if proc.returncode != 0:
            raise ProcessFailedError(
                "segmenter exited %d: %s\nstderr: %s"
                % (proc.returncode, " ".join(argv), proc.stderr.decode(errors="replace")[-2000:])
            )
        if not output_path.exists():
            raise ProcessFailedError("segmenter exited 0 but wrote no mask at %s" % output_path)
        out = read_volume(output_path)
        if out.dims != voi_image.dims:
            raise BadMaskDimsError("mask dims %s != VOI dims %s" % (out.dims, voi_image.dims))
        values = np.unique(out.data)
        if not np.isin(values, (0, 1)).all():
            raise BadMaskValuesError("mask values outside {0, 1}: %s" % values[:10])
        mask = out.with_data(out.data.astype(np.uint8), VolumeKind.BINARY_MASK)
    return SegmentationResult(mask)


def segment(voi_image: Volume3D, local_click: tuple[int, int, int],
            ref: SegmenterRef, strict: bool = True) -> SegmentationResult:
    """Dispatch to the builtin grower or the external adapter."""
    if ref.kind == BUILTIN:
        return segment_region_grow(voi_image, local_click, ref.grow_params, strict=strict)
    return segment_external(voi_image, local_click, ref)
