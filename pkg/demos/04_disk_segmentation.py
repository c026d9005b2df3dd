"""End-to-end segmentation of a synthetic disk, with snapshots of the evolving contour."""
import time

from common import disk, outpath, ring_distance

from varseg import SegmentationConfig, segment
from varseg.svg import overlay_svg

img, center = disk()
cfg = SegmentationConfig(snapshot_every=50)

t0 = time.perf_counter()
res = segment(img, cfg, callback=lambda it, row: it % 50 == 0 and print(
    f"iter {it:3d}  total {row[1]:10.3f}  reg {row[2]:8.3f}  loss {row[3]:10.3f}  alpha {row[4]:.3f}"))
print(f"{time.perf_counter() - t0:.1f}s")

d = ring_distance(res.final_curve, center, 20)
print(f"distance to the true boundary: mean {d.mean():.3f} px, max {d.max():.3f} px")

with open(outpath("disk_overlay.svg"), "w") as fh:
    fh.write(overlay_svg(img, res.final_curve, res.snapshots))
print("wrote", outpath("disk_overlay.svg"))
