"""Spatial-domain reference reconstruction by explicit basis projection.

Everything here is evaluated by direct summation against explicitly
constructed complex exponential basis images; no FFT is involved anywhere.
The fast frequency-domain path is validated against this module on small
blocks, so keep it independent of `reconstruction` internals. Quadratic
cost per iteration in the pixel count; intended for supports up to 16.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import FsrParams, SampledBlock
from .reconstruction import Selection
from .weights import WeightSet

# objectives this close to the maximum count as tied for trajectory purposes
TIE_RELATIVE = 1e-9


@lru_cache(maxsize=4)
def basis_images(support: int):
    """All basis images as a (S*S, S*S) matrix: row k*S+l, column m*S+n.

    Returns the matrix and its conjugate (the projection kernel).
    """
    n = support * support
    t = np.arange(n)
    k = t // support  # row index of a flat position, also the m of a pixel
    l = t % support
    phase = 2.0 * np.pi / support * (np.outer(k, k) + np.outer(l, l))
    phi = np.exp(1j * phase)
    phi.setflags(write=False)
    phi_conj = phi.conj()
    phi_conj.setflags(write=False)
    return phi, phi_conj


@dataclass
class OracleState:
    """Spatial model, weighted residual and weighted residual energy."""

    model: np.ndarray
    residual_w: np.ndarray
    energy: float


def _weighted_energy(residual: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum((residual.real ** 2 + residual.imag ** 2) * w))


def initial_state(signal: np.ndarray, weights: WeightSet) -> OracleState:
    """Zero model; residual is the signal itself."""
    model = np.zeros(signal.shape, dtype=np.complex128)
    residual = signal - model
    return OracleState(
        model=model,
        residual_w=residual * weights.spatial,
        energy=_weighted_energy(residual, weights.spatial),
    )


def _step(state: OracleState, block: SampledBlock, weights: WeightSet, gamma: float):
    s = weights.support
    phi, phi_conj = basis_images(s)
    # weighted projection onto every basis image by direct summation
    proj = phi_conj @ state.residual_w.ravel()
    obj = np.ascontiguousarray(weights.frequency).ravel() * (proj.real ** 2 + proj.imag ** 2)
    t = int(np.argmax(obj))
    best = float(obj[t])
    tie = int(np.count_nonzero(obj >= best * (1.0 - TIE_RELATIVE))) > 1 if best > 0 else True

    w00 = float(np.sum(weights.spatial))
    if w00 <= 0.0:
        raise ValueError("empty support")
    p = complex(proj[t].real / w00, proj[t].imag / w00)

    model = state.model + (gamma * p) * phi[t].reshape(s, s)
    residual = block.signal - model
    new_state = OracleState(
        model=model,
        residual_w=residual * weights.spatial,
        energy=_weighted_energy(residual, weights.spatial),
    )
    return new_state, Selection(u=t // s, v=t % s, objective=best), p, tie


def oracle_step(state: OracleState, block: SampledBlock, weights: WeightSet,
                gamma: float) -> tuple[OracleState, Selection, complex]:
    """One greedy step: project, select, update, recompute from scratch.

    The selection scans the objective array in index order and keeps the
    first maximum. The residual and its energy are recomputed from the
    updated model rather than updated incrementally.
    """
    new_state, sel, p, _ = _step(state, block, weights, gamma)
    return new_state, sel, p


@dataclass(frozen=True)
class OracleRun:
    """Trace of a full reference reconstruction."""

    output: np.ndarray
    objectives: np.ndarray
    selections: np.ndarray   # flat frequency index per iteration
    ties: np.ndarray
    energies: np.ndarray     # weighted residual energy, length iterations + 1


def oracle_reconstruct_traced(block: SampledBlock, weights: WeightSet,
                              params: FsrParams) -> OracleRun:
    """Reference reconstruction with the full per-iteration trace."""
    s = weights.support
    state = initial_state(block.signal, weights)
    objectives = np.zeros(params.iterations, dtype=np.float64)
    selections = np.zeros(params.iterations, dtype=np.int64)
    ties = np.zeros(params.iterations, dtype=bool)
    energies = np.zeros(params.iterations + 1, dtype=np.float64)
    energies[0] = state.energy
    for it in range(params.iterations):
        state, sel, _, tie = _step(state, block, weights, params.gamma)
        objectives[it] = sel.objective
        selections[it] = sel.u * s + sel.v
        ties[it] = tie
        energies[it + 1] = state.energy
    merged = np.where(block.mask, block.signal, state.model.real)
    return OracleRun(merged, objectives, selections, ties, energies)


def oracle_reconstruct(block: SampledBlock, weights: WeightSet, params: FsrParams) -> np.ndarray:
    """Reference reconstruction; known samples are copied through."""
    return oracle_reconstruct_traced(block, weights, params).output
