"""Minimal SVG 1.1 writers for contours, gradient quivers and deformed grids."""
from __future__ import annotations

import base64
import struct
import zlib

import numpy as np

__all__ = ["png_bytes", "overlay_svg", "quiver_svg", "grid_svg"]


def png_bytes(pixels: np.ndarray) -> bytes:
    """8-bit grayscale PNG of an array with values in [0, 1]."""
    q = np.floor(np.asarray(pixels) * 255.0 + 0.5).astype(np.uint8)
    h, w = q.shape
    raw = b"".join(b"\x00" + q[y].tobytes() for y in range(h))

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


def _f(x):
    s = f"{float(x):.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _head(width, height, title=None):
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" version="1.1" '
        f'width="{width}px" height="{height}px" viewBox="-0.5 -0.5 {width} {height}">',
    ]
    if title:
        out.append(f"<title>{title}</title>")
    return out


def _points(v):
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in v)


def _background(img, width, height):
    uri = base64.b64encode(png_bytes(img.pixels)).decode("ascii")
    return (f'<image x="-0.5" y="-0.5" width="{width}" height="{height}" '
            f'style="image-rendering:pixelated" xlink:href="data:image/png;base64,{uri}"/>')


def overlay_svg(img, curve, snapshots=(), title="segmentation") -> str:
    """Input image as background, snapshot contours in gray, final contour in red."""
    w, h = img.width, img.height
    out = _head(w, h, title)
    out.append(_background(img, w, h))
    for it, c in snapshots:
        out.append(f'<polygon class="snapshot" data-iter="{it}" points="{_points(c.vertices)}" '
                   f'fill="none" stroke="#3a7" stroke-width="0.3" stroke-opacity="0.7"/>')
    out.append(f'<polygon class="final" points="{_points(curve.vertices)}" fill="none" stroke="red" '
               f'stroke-width="0.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def quiver_svg(field, width, height, img=None, scale=None) -> str:
    """One segment per field atom, from its pixel along its direction, length ``scale * mass``."""
    m = field.masses
    if scale is None:
        scale = 1.5 / m.max() if len(m) and m.max() > 0 else 1.0
    out = _head(width, height, "gradient field")
    if img is not None:
        out.append(_background(img, width, height))
    out.append('<g stroke="blue" stroke-width="0.15">')
    for (x, y), (dx, dy), mass in zip(field.points, field.dirs, m):
        ln = scale * mass
        out.append(f'<line x1="{_f(x)}" y1="{_f(y)}" x2="{_f(x + ln * dx)}" y2="{_f(y + ln * dy)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def grid_svg(points, nx, ny, width, height, controls=None, title=None) -> str:
    """Deformed lattice drawn as row and column polylines; ``points`` ordered row by row."""
    P = np.asarray(points).reshape(ny, nx, 2)
    out = _head(width, height, title)
    out.append('<g fill="none" stroke="black" stroke-width="0.2">')
    for r in range(ny):
        out.append(f'<polyline class="row" points="{_points(P[r])}"/>')
    for c in range(nx):
        out.append(f'<polyline class="col" points="{_points(P[:, c])}"/>')
    out.append("</g>")
    if controls is not None:
        out.append('<g fill="red">')
        for x, y in controls:
            out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="0.6"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
