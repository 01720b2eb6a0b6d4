"""Blockwise frequency-domain reconstruction.

One support block at a time: transform the masked, weighted signal, then
greedily pick the frequency with the largest weighted residual energy,
project onto it, and update model and residual spectra in place. The image
pipeline distributes whole blocks over a worker pool; blocks never share
mutable state, so the output is identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .core import FsrParams, GrayImage, SampledBlock, block_partition
from .reduce import LANE_GROUP_WIDTH, block_argmax_arrays
from .sampling import SampledImage
from .weights import WeightSet, _decay_grid, frequency_weight

REDUCERS = ("tree", "linear")

# optional early stop: objective below this fraction of the initial weighted energy
EARLY_STOP_RELATIVE = 1e-12


@dataclass
class BlockState:
    """Model and weighted-residual spectra of one block at iteration ``nu``."""

    model: np.ndarray
    residual: np.ndarray
    nu: int = 0


@dataclass(frozen=True)
class Selection:
    """Chosen frequency component and the objective value it attained."""

    u: int
    v: int
    objective: float


@dataclass(frozen=True)
class BlockResult:
    output: np.ndarray          # merged support block, known samples copied through
    objectives: np.ndarray      # selected objective per iteration
    selections: np.ndarray      # selected flat frequency index per iteration
    ties: np.ndarray            # True where the maximum was attained more than once
    empty_support: bool         # no known sample in the window, output is all zero
    iterations_run: int


def _check_reducer(reducer: str) -> bool:
    if reducer not in REDUCERS:
        raise ValueError(f"unknown argmax strategy {reducer!r}, expected one of {REDUCERS}")
    return reducer == "tree"


@lru_cache(maxsize=8)
def _flat_indices(support: int):
    t = np.arange(support * support, dtype=np.int64)
    return t // support, t % support


def init_residual(block: SampledBlock, weights: WeightSet) -> BlockState:
    """Zero model plus the spectrum of the masked, weighted signal."""
    if block.support != weights.support:
        raise ValueError("block and weight dimensions differ")
    residual = np.fft.fft2(block.signal * weights.spatial)
    return BlockState(model=np.zeros_like(residual), residual=residual, nu=0)


def select_basis(state: BlockState, weights: WeightSet, reducer: str = "tree") -> Selection:
    """Pick the frequency with the largest weighted residual energy.

    The returned objective is the exact maximum; on ties the two strategies
    may return different (equally maximal) indices.
    """
    use_tree = _check_reducer(reducer)
    r = state.residual
    obj = (weights.frequency * (r.real ** 2 + r.imag ** 2)).ravel()
    if use_tree:
        kk, ll = _flat_indices(weights.support)
        o, u, v = block_argmax_arrays(obj, kk, ll, LANE_GROUP_WIDTH)
    else:
        t = int(np.argmax(obj))
        o, u, v = float(obj[t]), t // weights.support, t % weights.support
    return Selection(u=u, v=v, objective=o)


def projection_coefficient(state: BlockState, weights: WeightSet, sel: Selection) -> complex:
    """Optimal coefficient for the selected basis image.

    The residual entry divided by the DC weight sum; real and imaginary
    parts are divided separately.
    """
    w00 = weights.spectrum[0, 0].real
    if w00 <= 0.0:
        raise ValueError("empty support")
    c = state.residual[sel.u, sel.v]
    return complex(c.real / w00, c.imag / w00)


def update_model(state: BlockState, sel: Selection, p: complex, gamma: float) -> BlockState:
    """Add the scaled coefficient to the selected model entry only."""
    model = state.model.copy()
    model[sel.u, sel.v] += (gamma * p) * model.size
    return BlockState(model=model, residual=state.residual.copy(), nu=state.nu)


def update_residual(state: BlockState, sel: Selection, p: complex, gamma: float,
                    weights: WeightSet) -> BlockState:
    """Subtract the scaled weight spectrum, circularly shifted to the selection.

    Entry (k, l) sees spectrum index (k - u, l - v) with negative indices
    wrapped by adding the support size; this completes the iteration, so
    ``nu`` advances.
    """
    shifted = np.roll(weights.spectrum, (sel.u, sel.v), axis=(0, 1))
    residual = state.residual - (gamma * p) * shifted
    return BlockState(model=state.model.copy(), residual=residual, nu=state.nu + 1)


def iterate_block(state: BlockState, weights: WeightSet, gamma: float,
                  reducer: str = "tree") -> tuple[BlockState, Selection, complex]:
    """One full iteration built from the granular operations."""
    sel = select_basis(state, weights, reducer)
    p = projection_coefficient(state, weights, sel)
    after_model = update_model(state, sel, p, gamma)
    return update_residual(after_model, sel, p, gamma, weights), sel, p


def run_iterations(state: BlockState, weights: WeightSet, gamma: float, iterations: int,
                   reducer: str = "tree") -> int:
    """Advance ``state`` in place through the compiled iteration loop.

    Driving this one iteration at a time yields exactly the same state
    trajectory as a single call, which the invariant tests rely on.
    """
    use_tree = _check_reducer(reducer)
    objectives = np.zeros(max(iterations, 1), dtype=np.float64)
    selections = np.zeros(max(iterations, 1), dtype=np.int64)
    ties = np.zeros(max(iterations, 1), dtype=np.uint8)
    done = _kernels.reconstruct_iterations(
        state.residual, state.model, weights.spectrum,
        np.ascontiguousarray(weights.frequency).ravel(),
        gamma, iterations, LANE_GROUP_WIDTH, use_tree, 0.0,
        objectives, selections, ties,
    )
    state.nu += done
    return done


def reconstruct_block_full(block: SampledBlock, weights: WeightSet, params: FsrParams,
                           reducer: str = "tree", early_stop: bool = False) -> BlockResult:
    """Reconstruct one support block and keep the per-iteration trace."""
    use_tree = _check_reducer(reducer)
    s = weights.support
    if block.support != s:
        raise ValueError("block and weight dimensions differ")
    w00 = weights.spectrum[0, 0].real
    if w00 <= 0.0:
        return BlockResult(
            output=np.zeros((s, s)),
            objectives=np.zeros(0),
            selections=np.zeros(0, dtype=np.int64),
            ties=np.zeros(0, dtype=bool),
            empty_support=True,
            iterations_run=0,
        )
    residual = np.fft.fft2(block.signal * weights.spatial)
    model = np.zeros((s, s), dtype=np.complex128)
    objectives = np.zeros(max(params.iterations, 1), dtype=np.float64)
    selections = np.zeros(max(params.iterations, 1), dtype=np.int64)
    ties = np.zeros(max(params.iterations, 1), dtype=np.uint8)
    threshold = 0.0
    if early_stop:
        initial_energy = float(np.sum((block.signal.real ** 2 + np.imag(block.signal) ** 2)
                                      * weights.spatial))
        threshold = EARLY_STOP_RELATIVE * initial_energy
    done = _kernels.reconstruct_iterations(
        residual, model, weights.spectrum,
        np.ascontiguousarray(weights.frequency).ravel(),
        params.gamma, params.iterations, LANE_GROUP_WIDTH, use_tree, threshold,
        objectives, selections, ties,
    )
    g = np.fft.ifft2(model)
    if not np.iscomplexobj(block.signal):
        g = g.real
    merged = np.where(block.mask, block.signal, g)
    return BlockResult(
        output=merged,
        objectives=objectives[:done],
        selections=selections[:done],
        ties=ties[:done].astype(bool),
        empty_support=False,
        iterations_run=done,
    )


def reconstruct_block(block: SampledBlock, weights: WeightSet, params: FsrParams,
                      reducer: str = "tree") -> np.ndarray:
    """Reconstruct one support block; known samples are copied through."""
    return reconstruct_block_full(block, weights, params, reducer).output


# blocks per worker task; fixed so chunking never depends on the thread count
SPAN_BLOCKS = 128


def reconstruct_image(sampled: SampledImage, params: FsrParams, reducer: str = "tree",
                      early_stop: bool = False) -> GrayImage:
    """Reconstruct every target block independently and assemble the image.

    Blocks are processed in fixed-size spans distributed over
    ``params.threads`` workers; spans stack their support windows so the
    transforms and the iteration loop run once per span. Each worker writes
    only its own disjoint target regions and the per-block arithmetic never
    depends on span membership, so the result is bitwise identical for any
    thread count and any processing order. Support windows without a single
    known sample fall back to the mean of all sampled pixels.
    """
    use_tree = _check_reducer(reducer)
    height, width = sampled.shape
    descriptors = block_partition(height, width, params)
    s = params.support
    border = params.border
    wf_flat = np.ascontiguousarray(frequency_weight(s)).ravel()
    decay = _decay_grid(s, params.rho)

    known = int(np.count_nonzero(sampled.mask))
    fill_value = float(sampled.image.pixels.sum()) / known if known else 0.0

    pixels = sampled.image.pixels
    mask = sampled.mask
    out = np.array(pixels)

    def run_span(lo: int, hi: int) -> None:
        span = descriptors[lo:hi]
        count = len(span)
        signals = np.zeros((count, s, s))
        masks = np.zeros((count, s, s), dtype=bool)
        for i, desc in enumerate(span):
            r0 = max(desc.support_row, 0)
            r1 = min(desc.support_row + s, height)
            c0 = max(desc.support_col, 0)
            c1 = min(desc.support_col + s, width)
            if r1 > r0 and c1 > c0:
                wr = r0 - desc.support_row
                wc = c0 - desc.support_col
                signals[i, wr:wr + (r1 - r0), wc:wc + (c1 - c0)] = pixels[r0:r1, c0:c1]
                masks[i, wr:wr + (r1 - r0), wc:wc + (c1 - c0)] = mask[r0:r1, c0:c1]
        weights = decay * masks
        spectra = np.fft.fft2(weights, axes=(-2, -1))
        residuals = np.fft.fft2(signals * weights, axes=(-2, -1))
        models = np.zeros_like(residuals)
        if early_stop:
            thresholds = EARLY_STOP_RELATIVE * np.sum(signals * signals * weights,
                                                      axis=(1, 2))
        else:
            thresholds = np.zeros(count)
        _kernels.reconstruct_batch(residuals, models, spectra, wf_flat,
                                   params.gamma, params.iterations, LANE_GROUP_WIDTH,
                                   use_tree, thresholds)
        merged = np.where(masks, signals, np.fft.ifft2(models, axes=(-2, -1)).real)
        for i, desc in enumerate(span):
            if spectra[i, 0, 0].real <= 0.0:
                if known == 0:
                    raise ValueError("no known samples")
                tile = np.full((desc.height, desc.width), fill_value)
            else:
                tile = merged[i, border:border + desc.height,
                              border:border + desc.width]
            out[desc.target_row:desc.target_row + desc.height,
                desc.target_col:desc.target_col + desc.width] = tile

    n = len(descriptors)
    spans = [(lo, min(lo + SPAN_BLOCKS, n)) for lo in range(0, n, SPAN_BLOCKS)]
    if params.threads == 1 or len(spans) == 1:
        for lo, hi in spans:
            run_span(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            list(pool.map(lambda span: run_span(*span), spans))
    return GrayImage(out)
