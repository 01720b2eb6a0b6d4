"""Quarter-sampling sensor emulation and baseline fills.

The random pixel choice inside each cell comes from SplitMix64, a small
shift/multiply generator, so masks regenerate bit-identically on any
platform. Cells are visited row-major; the c-th cell (0-based) consumes
output ``mix(seed + (c + 1) * 0x9E3779B97F4A7C15)`` of the generator and
keeps pixel ``z mod npix`` of the cell, counted row-major inside the cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BlockDescriptor, GrayImage, SampledBlock

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of SplitMix64 seeded with ``seed`` (mod 2**64)."""
    base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    z = base + np.arange(1, count + 1, dtype=np.uint64) * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class SampledImage:
    """Image with a boolean mask of known pixels; unknown pixels hold zero."""

    image: GrayImage
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, order="C")
        if mask.shape != self.image.shape:
            raise ValueError("image and mask dimensions differ")
        if np.any(self.image.pixels[~mask] != 0):
            raise ValueError("unknown pixels must hold zero")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape


def quarter_sample(original: GrayImage, seed: int) -> SampledImage:
    """Keep exactly one pixel per 2x2 cell, chosen by the SplitMix64 stream.

    Trailing cells at odd image edges shrink to 1x2, 2x1 or 1x1 and still
    keep exactly one of their pixels. Identical (image, seed) pairs produce
    identical masks.
    """
    y, x = original.shape
    rows = (y + 1) // 2
    cols = (x + 1) // 2
    z = splitmix64(seed, rows * cols).reshape(rows, cols)

    cell_h = np.full((rows, 1), 2, dtype=np.uint64)
    if y % 2:
        cell_h[-1, 0] = 1
    cell_w = np.full((1, cols), 2, dtype=np.uint64)
    if x % 2:
        cell_w[0, -1] = 1

    sel = z % (cell_h * cell_w)
    dr = (sel // cell_w).astype(np.int64)
    dc = (sel % cell_w).astype(np.int64)
    rr = (np.arange(rows, dtype=np.int64)[:, None] * 2 + dr).ravel()
    cc = (np.arange(cols, dtype=np.int64)[None, :] * 2 + dc).ravel()

    mask = np.zeros((y, x), dtype=bool)
    mask[rr, cc] = True
    return SampledImage(GrayImage(np.where(mask, original.pixels, 0.0)), mask)


def mean_fill(sampled: SampledImage) -> GrayImage:
    """Fill unknown pixels with the mean of all sampled pixels."""
    count = int(np.count_nonzero(sampled.mask))
    if count == 0:
        raise ValueError("no known samples")
    # unknown pixels hold zero, so the full sum is the sum over samples
    mean = float(sampled.image.pixels.sum()) / count
    return GrayImage(np.where(sampled.mask, sampled.image.pixels, mean))


def extract_support_block(sampled: SampledImage, desc: BlockDescriptor, support: int) -> SampledBlock:
    """Cut the support window; positions outside the image stay unknown."""
    y, x = sampled.shape
    signal = np.zeros((support, support), dtype=np.float64)
    mask = np.zeros((support, support), dtype=bool)
    r0 = max(desc.support_row, 0)
    r1 = min(desc.support_row + support, y)
    c0 = max(desc.support_col, 0)
    c1 = min(desc.support_col + support, x)
    if r1 > r0 and c1 > c0:
        wr = r0 - desc.support_row
        wc = c0 - desc.support_col
        signal[wr:wr + (r1 - r0), wc:wc + (c1 - c0)] = sampled.image.pixels[r0:r1, c0:c1]
        mask[wr:wr + (r1 - r0), wc:wc + (c1 - c0)] = sampled.mask[r0:r1, c0:c1]
    return SampledBlock(signal=signal, mask=mask)
