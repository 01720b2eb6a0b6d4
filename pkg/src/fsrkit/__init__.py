"""Frequency-selective reconstruction of images with missing pixels."""

from .core import BlockDescriptor, FsrParams, GrayImage, SampledBlock, block_partition
from .metrics import QualityReport, psnr, time_block
from .pgm import PgmError, read_pgm, write_pgm
from .reconstruction import reconstruct_block, reconstruct_image
from .sampling import SampledImage, mean_fill, quarter_sample

__version__ = "0.1.0"

__all__ = [
    "BlockDescriptor",
    "FsrParams",
    "GrayImage",
    "PgmError",
    "QualityReport",
    "SampledBlock",
    "SampledImage",
    "block_partition",
    "mean_fill",
    "psnr",
    "quarter_sample",
    "read_pgm",
    "reconstruct_block",
    "reconstruct_image",
    "time_block",
    "write_pgm",
]
