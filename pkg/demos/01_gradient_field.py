"""Turn an image into a field of oriented, weighted edge atoms and draw it."""
from common import disk, outpath

from varseg.gradfield import compute_gradient, extract_field, gaussian_smooth
from varseg.svg import quiver_svg

img, _ = disk()
grad = compute_gradient(gaussian_smooth(img, 1.0))

for thr in (0.1, 0.2, 0.5):
    f = extract_field(grad, threshold_rel=thr)
    print(f"threshold {thr:.1f}: {len(f)} atoms")

# magnitude weighting keeps the same support but favors strong edges
field = extract_field(grad, threshold_rel=0.2, mass_mode="magnitude")
print(f"total mass (magnitude mode): {field.masses.sum():.2f}")

with open(outpath("gradient_field.svg"), "w") as fh:
    fh.write(quiver_svg(field, img.width, img.height, img))
print("wrote", outpath("gradient_field.svg"))
