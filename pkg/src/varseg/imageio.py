"""Grayscale images: PGM (P2/P5) reading and writing, seeded noise injection.

Noise is drawn from ``numpy.random.Generator(PCG64(seed))``; the same seed
gives the same output on every platform numpy supports.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PGMError, PGMFormatError, PGMHeaderError, PGMTruncationError

__all__ = [
    "Image",
    "load_pgm",
    "save_pgm",
    "read_pgm",
    "write_pgm",
    "add_gaussian_noise",
    "add_salt_pepper",
]


@dataclass(frozen=True, eq=False)
class Image:
    """Intensities in [0, 1] stored as a ``(height, width)`` float array.

    Pixel ``(x, y)`` is ``pixels[y, x]``; y grows downward.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"image must be a non-empty 2D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.all(self.pixels == other.pixels))


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and whole-line comments, then read one token
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMHeaderError("unexpected end of PGM header")
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, name: str) -> tuple[int, int]:
    tok, pos = _next_token(data, pos)
    if not tok.isdigit():
        raise PGMHeaderError(f"bad {name} token {tok!r}")
    return int(tok), pos


def load_pgm(data: bytes) -> Image:
    """Parse a P2 or P5 byte stream into an :class:`Image`."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMFormatError(f"unsupported magic {magic!r}, expected P2 or P5")
    pos = 2
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PGMHeaderError(f"invalid dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise PGMHeaderError(f"maxval {maxval} outside [1, 65535]")
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PGMTruncationError("missing raster after header")
        raster = data[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(raster) != need:
            raise PGMTruncationError(f"expected {need} raster bytes, found {len(raster)}")
        values = np.frombuffer(raster, dtype=dtype).astype(float)
    else:
        tokens = data[pos:].split()
        if len(tokens) != count:
            raise PGMTruncationError(f"expected {count} samples, found {len(tokens)}")
        try:
            values = np.array([int(t) for t in tokens], dtype=float)
        except ValueError as exc:
            raise PGMError(f"non-integer sample: {exc}") from None

    if values.size and values.max() > maxval:
        raise PGMError(f"sample value exceeds maxval {maxval}")
    return Image(values.reshape(height, width) / maxval)


def save_pgm(img: Image, binary: bool = True) -> bytes:
    """Encode with maxval 255; intensities are rounded half-up."""
    q = np.floor(img.pixels * 255.0 + 0.5).astype(np.uint8)
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n255\n".encode("ascii")
    if binary:
        return header + q.tobytes()
    rows = "".join(" ".join(str(v) for v in row) + "\n" for row in q)
    return header + rows.encode("ascii")


def read_pgm(path) -> Image:
    with open(path, "rb") as f:
        return load_pgm(f.read())


def write_pgm(path, img: Image, binary: bool = True) -> None:
    with open(path, "wb") as f:
        f.write(save_pgm(img, binary=binary))


def add_gaussian_noise(img: Image, stddev: float, seed: int) -> Image:
    """Add i.i.d. N(0, stddev^2) noise and clamp to [0, 1]."""
    if not stddev >= 0:
        raise ValueError(f"stddev must be >= 0, got {stddev}")
    if stddev == 0:
        return img
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(img.pixels.shape) * stddev
    return Image(np.clip(img.pixels + noise, 0.0, 1.0))


def add_salt_pepper(img: Image, density: float, seed: int) -> Image:
    """Replace each pixel with probability ``density`` by 0 or 1 (even odds)."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    hit = rng.random(img.pixels.shape) < density
    salt = rng.random(img.pixels.shape) < 0.5
    out = np.where(hit, salt.astype(float), img.pixels)
    return Image(out)
