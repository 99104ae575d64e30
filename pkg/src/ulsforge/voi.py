"""Fixed-size volume-of-interest cropping around click points.

The window along each axis is [c - s/2, c - s/2 + s) in global voxel
indices, where c is the click coordinate and s the (even) VOI size, so
the click always lands at local index s/2. Out-of-bounds voxels are
filled with the configured pad values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClickNotOnMaskError, ClickOutOfVolumeError, DimsMismatchError
from .lesions import ClickPoint, label_components
from .volume import Volume3D, VolumeKind

DEFAULT_VOI_SIZE = (128, 128, 64)


@dataclass(frozen=True)
class VOICfg:
    """Crop geometry and padding intensities.

    The image pad default is -1024 HU (air). Literal zero-padding is
    available by configuring ``pad_value_image=0``; whichever is used
    is recorded in run metadata.
    """

    size: tuple[int, int, int] = DEFAULT_VOI_SIZE
    pad_value_image: int = -1024
    pad_value_mask: int = 0

    def __post_init__(self):
        if len(self.size) != 3 or any(s < 2 or s % 2 for s in self.size):
            raise ValueError("VOI size components must be even and >= 2, got %s" % (self.size,))


@dataclass(eq=False)
class VOISample:
    """A cropped image/mask pair with its placement in the global frame."""

    image: Volume3D
    mask: Volume3D
    offset: tuple[int, int, int]
    click: ClickPoint  # global coordinates
    lesion_id: str = ""

    def __post_init__(self):
        if self.image.dims != self.mask.dims:
            raise DimsMismatchError("VOI image dims %s != mask dims %s" % (self.image.dims, self.mask.dims))
        local = self.local_click
        if any(l < 0 or l >= s for l, s in zip(local, self.image.dims)):
            raise ClickOutOfVolumeError("click %s maps outside the VOI (offset %s, size %s)"
                                        % (self.click.pos, self.offset, self.image.dims))

    @property
    def local_click(self) -> tuple[int, int, int]:
        return tuple(int(c - o) for c, o in zip(self.click.pos, self.offset))


def _crop_array(data: np.ndarray, start: tuple[int, ...], size: tuple[int, ...], pad_value) -> np.ndarray:
    out = np.full(size, pad_value, dtype=data.dtype)
    src = []
    dst = []
    for n, st, s in zip(data.shape, start, size):
        lo, hi = max(0, st), min(n, st + s)
        if lo >= hi:
            return out  # window entirely outside the volume
        src.append(slice(lo, hi))
        dst.append(slice(lo - st, hi - st))
    out[tuple(dst)] = data[tuple(src)]
    return out


def crop_voi(image: Volume3D, mask: Volume3D, click: ClickPoint, cfg: VOICfg = VOICfg()) -> VOISample:
    """Crop a click-centered VOI from an image/mask pair.

    The offset (global index of the VOI's (0,0,0) corner) is
    c - s/2 per axis and may be negative; padded voxels take
    ``cfg.pad_value_image`` / ``cfg.pad_value_mask``.
    """
    if image.dims != mask.dims:
        raise DimsMismatchError("image dims %s != mask dims %s" % (image.dims, mask.dims))
    if any(c < 0 or c >= n for c, n in zip(click.pos, image.dims)):
        raise ClickOutOfVolumeError("click %s outside volume dims %s" % (click.pos, image.dims))
    offset = tuple(int(c - s // 2) for c, s in zip(click.pos, cfg.size))
    img_crop = _crop_array(image.data, offset, cfg.size, cfg.pad_value_image)
    mask_crop = _crop_array(mask.data, offset, cfg.size, cfg.pad_value_mask)
    return VOISample(
        image=Volume3D(img_crop, spacing=image.spacing, kind=VolumeKind.INTENSITY),
        mask=Volume3D(mask_crop, spacing=mask.spacing, kind=VolumeKind.BINARY_MASK),
        offset=offset,
        click=click,
    )


def isolate_central_lesion(voi_mask: Volume3D, local_click: tuple[int, int, int],
                           connectivity: int = 26, strict: bool = True) -> Volume3D:
    """Keep only the connected component containing ``local_click``.

    Leaves one lesion mask per crop: every other foreground voxel is
    zeroed. A background click raises ClickNotOnMaskError in strict
    mode and yields an all-zero mask otherwise.
    """
    if any(c < 0 or c >= n for c, n in zip(local_click, voi_mask.dims)):
        raise ClickOutOfVolumeError("local click %s outside VOI dims %s" % (local_click, voi_mask.dims))
    if voi_mask.data[tuple(local_click)] == 0:
        if strict:
            raise ClickNotOnMaskError("click %s is background" % (local_click,))
        return voi_mask.with_data(np.zeros(voi_mask.dims, dtype=np.uint8), VolumeKind.BINARY_MASK)
    labeled = label_components(voi_mask, connectivity)
    target = labeled.data[tuple(local_click)]
    return voi_mask.with_data((labeled.data == target).astype(np.uint8), VolumeKind.BINARY_MASK)


def place_back(voi_mask: Volume3D, global_dims: tuple[int, int, int],
               offset: tuple[int, int, int]) -> Volume3D:
    """Embed a VOI-space mask into a zero global-dims mask.

    Voxels land at global index = local index + offset; anything
    falling outside the global bounds is discarded.
    """
    out = np.zeros(global_dims, dtype=voi_mask.data.dtype)
    src = []
    dst = []
    inside = True
    for n_glob, n_loc, off in zip(global_dims, voi_mask.dims, offset):
        g_lo, g_hi = max(0, off), min(n_glob, off + n_loc)
        if g_lo >= g_hi:
            inside = False
            break
        dst.append(slice(g_lo, g_hi))
        src.append(slice(g_lo - off, g_hi - off))
    if inside:
        out[tuple(dst)] = voi_mask.data[tuple(src)]
    return Volume3D(out, spacing=voi_mask.spacing, kind=voi_mask.kind)
