import numpy as np
import pytest

from fsrkit.core import GrayImage, SampledBlock
from fsrkit.sampling import quarter_sample


def make_natural_image(size: int = 512, seed: int = 7) -> GrayImage:
    """Synthetic natural-looking test image: smooth 1/f^2 clouds, a global
    gradient, a disc-shaped edge and a textured band."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((size, size))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    radial = np.hypot(fy, fx)
    smooth = np.fft.ifft2(np.fft.fft2(noise) / (1.0 + (radial * size / 6.0) ** 2)).real
    smooth = (smooth - smooth.min()) / np.ptp(smooth)

    yy, xx = np.mgrid[0:size, 0:size] / size
    img = 30.0 + 150.0 * smooth + 35.0 * yy
    disc = (yy - 0.35) ** 2 + (xx - 0.6) ** 2 < 0.04
    img = np.where(disc, 0.5 * img + 110.0, img)
    band = (yy > 0.7) & (yy < 0.85)
    img = img + band * 12.0 * np.sin(2 * np.pi * 14 * xx) * np.sin(2 * np.pi * 9 * yy)
    return GrayImage(np.clip(img, 0.0, 255.0))


def random_quarter_block(size: int, rng: np.random.Generator, seed: int) -> SampledBlock:
    """Quarter-sampled random block of the given support size."""
    image = GrayImage(rng.uniform(0.0, 255.0, (size, size)))
    sampled = quarter_sample(image, seed)
    return SampledBlock(signal=np.where(sampled.mask, image.pixels, 0.0),
                        mask=sampled.mask)


def random_masked_block(size: int, rng: np.random.Generator,
                        density: float = 0.3) -> SampledBlock:
    """Random block with a Bernoulli mask (at least one known sample)."""
    mask = rng.random((size, size)) < density
    if not mask.any():
        mask[rng.integers(size), rng.integers(size)] = True
    signal = np.where(mask, rng.uniform(0.0, 255.0, (size, size)), 0.0)
    return SampledBlock(signal=signal, mask=mask)


def raw_psnr_db(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR between unclamped grids (no quantization, peak 255)."""
    mse = float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(255.0 ** 2 / mse)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
