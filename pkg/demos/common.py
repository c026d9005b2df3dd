import os

import numpy as np

from varseg import Image

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")


def outpath(name):
    os.makedirs(OUT, exist_ok=True)
    return os.path.join(OUT, name)


def disk(n=64, radius=20.0):
    c = (n - 1) / 2.0
    y, x = np.mgrid[0:n, 0:n]
    return Image(((x - c) ** 2 + (y - c) ** 2 <= radius ** 2).astype(float)), np.array([c, c])


def ring_distance(curve, center, radius):
    return np.abs(np.linalg.norm(curve.vertices - center, axis=1) - radius)
