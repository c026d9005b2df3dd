"""Image gradients and the thresholded gradient field used as the target varifold."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from ._fmt import csv_lines, parse_csv
from .errors import EmptyFieldError, ImageSizeError
from .imageio import Image

__all__ = [
    "GradientField",
    "gaussian_kernel1d",
    "gaussian_smooth",
    "compute_gradient",
    "extract_field",
    "gradient_field",
    "field_to_csv",
    "field_from_csv",
]

MASS_MODES = ("unit", "magnitude")


@dataclass(frozen=True, eq=False)
class GradientField:
    """Retained pixels: positions ``(P, 2)`` as (x, y), unit directions ``(P, 2)``, masses ``(P,)``."""

    points: np.ndarray
    dirs: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        dirs = np.asarray(self.dirs, dtype=float).reshape(-1, 2)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if not (len(pts) == len(dirs) == len(m)):
            raise ValueError("points, dirs and masses must have the same length")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        if len(dirs) and np.max(np.abs(np.hypot(dirs[:, 0], dirs[:, 1]) - 1.0)) > 1e-9:
            raise ValueError("dirs must be unit vectors")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dirs", dirs)
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return len(self.masses)

    def atoms(self):
        from .varifold import VarifoldAtoms

        return VarifoldAtoms(self.points, self.dirs, self.masses)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps on ``[-ceil(3 sigma), ceil(3 sigma)]``."""
    r = math.ceil(3.0 * sigma)
    k = np.arange(-r, r + 1, dtype=float)
    w = np.exp(-0.5 * (k / sigma) ** 2)
    return w / w.sum()


def gaussian_smooth(img: Image, sigma_s: float) -> Image:
    """Separable Gaussian blur with replicated borders. ``sigma_s = 0`` is the identity."""
    if not sigma_s >= 0:
        raise ValueError(f"smoothing sigma must be >= 0, got {sigma_s}")
    if sigma_s == 0:
        return img
    w = gaussian_kernel1d(sigma_s)
    out = correlate1d(img.pixels, w, axis=1, mode="nearest")
    out = correlate1d(out, w, axis=0, mode="nearest")
    # unit-sum weights keep values in range up to roundoff
    return Image(np.clip(out, 0.0, 1.0))


def compute_gradient(img: Image) -> np.ndarray:
    """Centered differences, shape ``(height, width, 2)`` holding (d/dx, d/dy).

    The one-pixel frame is left at zero.
    """
    if img.width < 3 or img.height < 3:
        raise ImageSizeError(f"gradient needs at least 3x3 pixels, got {img.width}x{img.height}")
    I = img.pixels
    g = np.zeros(I.shape + (2,))
    g[1:-1, 1:-1, 0] = (I[1:-1, 2:] - I[1:-1, :-2]) / 2.0
    g[1:-1, 1:-1, 1] = (I[2:, 1:-1] - I[:-2, 1:-1]) / 2.0
    return g


def extract_field(grad: np.ndarray, threshold_rel: float = 0.2, mass_mode: str = "unit") -> GradientField:
    """Keep pixels whose gradient norm is at least ``threshold_rel`` times the maximum.

    Entries come out in row-major order. ``mass_mode`` selects unit masses
    or the gradient magnitude as the mass of each retained pixel.
    """
    if not 0.0 <= threshold_rel <= 1.0:
        raise ValueError(f"threshold_rel must be in [0, 1], got {threshold_rel}")
    if mass_mode not in MASS_MODES:
        raise ValueError(f"mass_mode must be one of {MASS_MODES}, got {mass_mode!r}")
    mag = np.hypot(grad[..., 0], grad[..., 1])
    top = mag.max() if mag.size else 0.0
    if not top > 0:
        raise EmptyFieldError("empty gradient field: image has no nonzero gradient")
    keep = (mag >= threshold_rel * top) & (mag > 0)
    ys, xs = np.nonzero(keep)
    m = mag[ys, xs]
    dirs = grad[ys, xs] / m[:, None]
    masses = np.ones_like(m) if mass_mode == "unit" else m
    pts = np.column_stack([xs, ys]).astype(float)
    return GradientField(pts, dirs, masses)


def gradient_field(img: Image, smooth_sigma: float = 1.0, threshold_rel: float = 0.2,
                   mass_mode: str = "unit") -> GradientField:
    """Smooth, differentiate and threshold in one call."""
    return extract_field(compute_gradient(gaussian_smooth(img, smooth_sigma)), threshold_rel, mass_mode)


def field_to_csv(field) -> str:
    rows = np.column_stack([field.points, field.dirs, field.masses])
    return csv_lines("x,y,dx,dy,mass", rows)


def field_from_csv(text: str) -> GradientField:
    header, arr = parse_csv(text)
    if header not in (None, ["x", "y", "dx", "dy", "mass"]) or arr.shape[1] != 5:
        raise ValueError(f"unexpected field CSV header {header}")
    dirs = arr[:, 2:4]
    # 9 significant digits is not exactly unit length
    dirs = dirs / np.hypot(dirs[:, 0], dirs[:, 1])[:, None]
    return GradientField(arr[:, 0:2], dirs, arr[:, 4])
