"""Binary PGM (P5) image I/O with byte-stable output.

Written files always use maxval 255, carry no comments and separate the
header from the raster with a single newline, so identical pixel data
yields identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import GrayImage


class PgmError(ValueError):
    """Unreadable or unsupported PGM data."""


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmError("truncated PGM header")
    return data[start:pos], pos


def read_pgm(path) -> GrayImage:
    """Read an 8-bit binary PGM (P5, maxval at most 255)."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise PgmError("not a binary PGM (P5) file")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _next_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise PgmError(f"bad PGM header token {token!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PgmError("PGM dimensions must be positive")
    if not 1 <= maxval <= 255:
        raise PgmError("only 8-bit PGM (maxval <= 255) is supported")
    pos += 1  # single whitespace byte after maxval
    need = width * height
    raster = data[pos:pos + need]
    if len(raster) < need:
        raise PgmError("truncated PGM raster")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels.astype(np.float64))


def write_pgm(path, image) -> None:
    """Write an 8-bit binary PGM.

    Values are clamped to [0, 255] and rounded half away from zero.
    """
    arr = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise PgmError("expected a 2D grid")
    clamped = np.clip(arr, 0.0, 255.0)
    quantized = np.floor(clamped + 0.5).astype(np.uint8)
    height, width = arr.shape
    header = b"P5\n%d %d\n255\n" % (width, height)
    Path(path).write_bytes(header + quantized.tobytes())
