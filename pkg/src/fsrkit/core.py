"""Shared domain types and block-grid geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reduce import MAX_BLOCK_RECORDS


@dataclass(frozen=True)
class GrayImage:
    """Grayscale image, float64 pixels on the nominal [0, 255] scale.

    Pixel values stay unquantized inside the pipeline; clamping and rounding
    to 8 bit happen only when an image file is written, so reconstruction
    outputs may slightly overshoot the nominal range.
    """

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64, order="C")
        if pixels.ndim != 2 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("image must be a 2D grid with at least one pixel")
        if not np.all(np.isfinite(pixels)):
            raise ValueError("image pixels must be finite")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


@dataclass(frozen=True)
class FsrParams:
    """Reconstruction parameters.

    The support block spans the target block plus ``border`` context pixels
    on every side, so its side length is ``block + 2 * border``. The square
    of that side length may not exceed the 1024-record capacity of the
    two-phase lane-group reduction.
    """

    block: int = 4
    border: int = 6
    rho: float = 0.7
    gamma: float = 0.5
    iterations: int = 200
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.block < 1:
            raise ValueError("target block size must be at least 1")
        if self.border < 0:
            raise ValueError("border must be non-negative")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("decay factor rho must lie in (0, 1)")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("compensation factor gamma must lie in (0, 1]")
        if self.iterations < 0:
            raise ValueError("iteration count must be non-negative")
        if self.threads < 1:
            raise ValueError("thread count must be at least 1")
        s = self.support
        if s * s > MAX_BLOCK_RECORDS:
            raise ValueError(
                f"support block {s}x{s} exceeds the {MAX_BLOCK_RECORDS}-lane reduction capacity"
            )

    @property
    def support(self) -> int:
        """Side length of the support block."""
        return self.block + 2 * self.border


@dataclass(frozen=True)
class BlockDescriptor:
    """Placement of one target block and its support window.

    ``height``/``width`` give the in-image target extent (truncated at the
    bottom/right edges); the support origin is always the target origin
    shifted up-left by the border and may be negative, extraction treats
    out-of-image positions as unknown.
    """

    target_row: int
    target_col: int
    height: int
    width: int
    support_row: int
    support_col: int


@dataclass(frozen=True)
class SampledBlock:
    """Support-block signal with its known-sample mask.

    Unknown positions (mask False) hold zero, including positions that fall
    outside the image.
    """

    signal: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        signal = np.asarray(self.signal)
        if not np.iscomplexobj(signal):
            signal = np.asarray(signal, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if signal.ndim != 2 or signal.shape[0] != signal.shape[1]:
            raise ValueError("support block must be square")
        if mask.shape != signal.shape:
            raise ValueError("signal and mask dimensions differ")
        if not np.all(signal[~mask] == 0):
            raise ValueError("unknown positions must hold zero")
        object.__setattr__(self, "signal", signal)
        object.__setattr__(self, "mask", mask)

    @property
    def support(self) -> int:
        return self.signal.shape[0]


def block_partition(height: int, width: int, params: FsrParams) -> list[BlockDescriptor]:
    """Tile the image into target blocks, row-major over target origins.

    Every pixel belongs to exactly one target block; blocks at the bottom or
    right edge shrink to the image boundary. The list has exactly
    ``ceil(height / block) * ceil(width / block)`` entries, independent of
    any threading configuration.
    """
    if height < 1 or width < 1:
        raise ValueError("image must have at least one pixel")
    b = params.block
    out = []
    for r in range(0, height, b):
        h = min(b, height - r)
        for c in range(0, width, b):
            w = min(b, width - c)
            out.append(
                BlockDescriptor(
                    target_row=r,
                    target_col=c,
                    height=h,
                    width=w,
                    support_row=r - params.border,
                    support_col=c - params.border,
                )
            )
    return out
