"""
From a binary mask to clickable lesions
=======================================

A segmentation mask may contain several disjoint lesions. Connected
component labeling turns it into separately addressable instances,
each with a center click-point that is guaranteed to be a lesion voxel.
"""

import numpy as np

from ulsforge import Volume3D, VolumeKind, extract_instances, label_components

mask = np.zeros((24, 24, 12), dtype=np.uint8)
mask[2:6, 2:6, 2:5] = 1          # block lesion
mask[10, 10, 6] = 1              # single voxel
mask[11, 11, 7] = 1              # touches the previous one corner-to-corner
mask[18:22, 4:8, 8:11] = 1       # another block
vol = Volume3D(mask, kind=VolumeKind.BINARY_MASK)

# corner contact merges under 26-connectivity but not under 6
for connectivity in (26, 6):
    labeled = label_components(vol, connectivity)
    print("connectivity %2d -> %d components"
          % (connectivity, int(labeled.data.max())))

labeled = label_components(vol, 26)
print("\ninstances (ids follow the x-fastest scan order):")
for inst in extract_instances(labeled):
    lo, hi = inst.bbox
    print("  id %d: %3d voxels, bbox %s..%s, center %s"
          % (inst.label, inst.size_vox, lo, hi, inst.center.pos))

# centers of non-convex shapes snap to the nearest in-mask voxel
ring = np.zeros((16, 16, 3), dtype=np.uint8)
ring[4:12, 4, 1] = 1
ring[4:12, 11, 1] = 1
ring[4, 4:12, 1] = 1
ring[11, 4:12, 1] = 1
inst, = extract_instances(label_components(Volume3D(ring, kind=VolumeKind.BINARY_MASK)))
print("\nring lesion: continuous centroid sits in the hole,")
print("  snapped center %s is a real lesion voxel: %s"
      % (inst.center.pos, bool(ring[inst.center.pos])))
