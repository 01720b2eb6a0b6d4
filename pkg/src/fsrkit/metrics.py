"""Image quality and timing measurement."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import GrayImage

PEAK = 255.0  # 8-bit grayscale convention


@dataclass(frozen=True)
class QualityReport:
    """PSNR in dB (infinite for identical images) and the underlying MSE."""

    psnr_db: float
    mse: float
    pixel_count: int

    @property
    def identical(self) -> bool:
        return self.mse == 0.0


def _pixels(image) -> np.ndarray:
    if isinstance(image, GrayImage):
        return image.pixels
    return np.asarray(image, dtype=np.float64)


def psnr(reference, test) -> QualityReport:
    """PSNR over all pixels on the [0, 255] scale.

    Unclamped test values are clamped to the scale first; the reference is
    taken as is.
    """
    ref = _pixels(reference)
    tst = _pixels(test)
    if ref.shape != tst.shape:
        raise ValueError("image dimensions differ")
    diff = np.clip(tst, 0.0, PEAK) - ref
    mse = float(np.mean(diff * diff))
    value = math.inf if mse == 0.0 else 10.0 * math.log10(PEAK * PEAK / mse)
    return QualityReport(psnr_db=value, mse=mse, pixel_count=ref.size)


def time_block(label: str, work):
    """Run ``work()`` and return (result, wall-clock seconds).

    Single measurement on a monotonic clock; callers that need warm-up or
    medians repeat it themselves. ``label`` only tags the measurement.
    """
    start = time.perf_counter()
    result = work()
    return result, time.perf_counter() - start
