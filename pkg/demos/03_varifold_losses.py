"""Compare the plain and the rescaled varifold losses on a circle with a heavy field."""
import numpy as np

from varseg.gradfield import GradientField
from varseg.varifold import KernelParams, closed_polygon, curve_to_atoms, loss_L0, loss_L1


def circle(r, n=80, c=(32.0, 32.0)):
    th = 2 * np.pi * np.arange(n) / n
    return closed_polygon(np.column_stack([c[0] + r * np.cos(th), c[1] + r * np.sin(th)]))


k = KernelParams(4.0)
target = curve_to_atoms(circle(20, n=200))
# the "image" sees the same boundary, but every atom weighs three times more
field = GradientField(target.centers, target.dirs, 3.0 * target.masses).atoms()

print(" radius      L0        L1     alpha")
for r in (14, 17, 20, 23, 26):
    c = curve_to_atoms(circle(r))
    l1, alpha = loss_L1(c, field, k)
    print(f"{r:7d} {loss_L0(c, field, k):9.2f} {l1:9.2f} {alpha:8.3f}")

# at the true radius L0 still pays for the missing mass, while L1
# absorbs the factor into alpha and drops to almost zero
