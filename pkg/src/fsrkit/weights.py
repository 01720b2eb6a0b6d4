"""Spatial and frequency weighting for support blocks.

The spatial weighting decays exponentially with distance from the block
center and is zero at unknown positions; it depends on the per-block mask.
The frequency weighting favors low frequencies and depends only on the
support size, so it is computed once per run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _decay_grid(support: int, rho: float) -> np.ndarray:
    # rho ** distance to the center at (support-1)/2, between pixels for even sizes
    center = (support - 1) / 2.0
    m = np.arange(support, dtype=np.float64)
    d2 = (m - center) ** 2
    dist = np.sqrt(d2[:, None] + d2[None, :])
    grid = rho ** dist
    grid.setflags(write=False)
    return grid


def spatial_weight(support: int, rho: float, mask) -> np.ndarray:
    """Exponentially decaying weight gated by the known-sample mask."""
    if not 0.0 < rho < 1.0:
        raise ValueError("decay factor rho must lie in (0, 1)")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (support, support):
        raise ValueError("mask dimensions do not match the support size")
    return _decay_grid(support, rho) * mask


@lru_cache(maxsize=None)
def frequency_weight(support: int) -> np.ndarray:
    """Low-frequency preference on folded spectrum indices.

    Equal to 1 at DC and 0 at the Nyquist corner, symmetric under index
    folding k -> S - k.
    """
    if support < 2:
        raise ValueError("support must be at least 2")
    idx = np.arange(support, dtype=np.float64)
    folded = support / 2.0 - np.abs(idx - support / 2.0)
    norm = folded * folded / float(support * support)
    inner = 1.0 - math.sqrt(2.0) * np.sqrt(norm[:, None] + norm[None, :])
    wf = inner * inner
    np.maximum(wf, 0.0, out=wf)  # analytically non-negative
    wf.setflags(write=False)
    return wf


def weight_spectrum(w) -> np.ndarray:
    """Unnormalized forward 2D DFT of the spatial weighting.

    With this convention the DC entry equals the plain sum of the weights,
    which is exactly the normalizer the projection coefficient divides by.
    """
    return np.fft.fft2(np.asarray(w, dtype=np.float64))


@dataclass(frozen=True)
class WeightSet:
    """Weighting data for one support block: w, its spectrum, and the prior."""

    spatial: np.ndarray
    spectrum: np.ndarray
    frequency: np.ndarray
    support: int
    rho: float


def build_weight_set(support: int, rho: float, mask) -> WeightSet:
    w = spatial_weight(support, rho, mask)
    return WeightSet(
        spatial=w,
        spectrum=weight_spectrum(w),
        frequency=frequency_weight(support),
        support=support,
        rho=rho,
    )
