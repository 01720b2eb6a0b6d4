"""Compiled per-block iteration loop.

The lane-group reduction here mirrors `reduce` step for step (same lockstep
order, same strict comparison, same double buffering); the test suite pins
both implementations to bitwise-identical selections.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def lane_pass(reg_obj, reg_idx, active, width, buf_obj, buf_idx):
    offset = width // 2
    while offset >= 1:
        # gather first so every read observes pre-step register values
        for i in range(active):
            p = i + offset
            if p < active:
                buf_obj[i] = reg_obj[p]
                buf_idx[i] = reg_idx[p]
            else:
                buf_obj[i] = reg_obj[i]
                buf_idx[i] = reg_idx[i]
        for i in range(active):
            if buf_obj[i] > reg_obj[i]:
                reg_obj[i] = buf_obj[i]
                reg_idx[i] = buf_idx[i]
        offset //= 2


@njit(cache=True, nogil=True)
def tree_argmax(obj, width, reg_obj, reg_idx, buf_obj, buf_idx, win_obj, win_idx):
    """Two-phase argmax over flat records; returns (objective, flat index)."""
    n = obj.size
    ngroups = (n + width - 1) // width
    for g in range(ngroups):
        base = g * width
        active = n - base
        if active > width:
            active = width
        for i in range(active):
            reg_obj[i] = obj[base + i]
            reg_idx[i] = base + i
        lane_pass(reg_obj, reg_idx, active, width, buf_obj, buf_idx)
        win_obj[g] = reg_obj[0]
        win_idx[g] = reg_idx[0]
    lane_pass(win_obj, win_idx, ngroups, width, buf_obj, buf_idx)
    return win_obj[0], win_idx[0]


@njit(cache=True, nogil=True)
def linear_argmax(obj):
    """First flat index attaining the maximum objective."""
    best = 0
    for t in range(1, obj.size):
        if obj[t] > obj[best]:
            best = t
    return obj[best], best


@njit(cache=True, nogil=True)
def reconstruct_iterations(residual, model, spectrum, freq_weight, gamma,
                           iterations, width, use_tree, stop_threshold,
                           objectives, selections, tie_flags):
    """Run the greedy select/project/update loop in place.

    ``residual`` and ``model`` are modified; ``objectives``/``selections``/
    ``tie_flags`` record the selected objective, its flat frequency index,
    and whether the maximum was attained by more than one frequency.
    Returns the number of model updates applied (fewer than ``iterations``
    only when the early-stop threshold is positive and hit).
    """
    S = residual.shape[0]
    n = S * S
    w00 = spectrum[0, 0].real
    obj = np.empty(n, np.float64)
    ngroups = (n + width - 1) // width
    reg_obj = np.empty(width, np.float64)
    reg_idx = np.empty(width, np.int64)
    buf_obj = np.empty(width, np.float64)
    buf_idx = np.empty(width, np.int64)
    win_obj = np.empty(ngroups, np.float64)
    win_idx = np.empty(ngroups, np.int64)

    done = 0
    for it in range(iterations):
        for t in range(n):
            k = t // S
            l = t - k * S
            c = residual[k, l]
            obj[t] = freq_weight[t] * (c.real * c.real + c.imag * c.imag)

        if use_tree:
            best_obj, best_t = tree_argmax(obj, width, reg_obj, reg_idx,
                                           buf_obj, buf_idx, win_obj, win_idx)
        else:
            best_obj, best_t = linear_argmax(obj)

        ties = 0
        for t in range(n):
            if obj[t] == best_obj:
                ties += 1
        objectives[it] = best_obj
        selections[it] = best_t
        tie_flags[it] = 1 if ties > 1 else 0

        if stop_threshold > 0.0 and best_obj < stop_threshold:
            break

        u = best_t // S
        v = best_t - u * S
        c = residual[u, v]
        gp = gamma * complex(c.real / w00, c.imag / w00)
        model[u, v] += gp * n
        for k in range(S):
            i = k - u
            if i < 0:
                i += S
            for l in range(S):
                j = l - v
                if j < 0:
                    j += S
                residual[k, l] -= gp * spectrum[i, j]
        done = it + 1
    return done


@njit(cache=True, nogil=True)
def reconstruct_batch(residuals, models, spectra, freq_weight, gamma,
                      iterations, width, use_tree, stop_thresholds):
    """Per-block loop over stacked spectra; one GIL release for the batch.

    Blocks without any known sample (DC weight 0) are skipped and keep
    their zero model. Identical per-block arithmetic to
    ``reconstruct_iterations``.
    """
    count = residuals.shape[0]
    n = max(iterations, 1)
    objectives = np.empty(n, np.float64)
    selections = np.empty(n, np.int64)
    tie_flags = np.empty(n, np.uint8)
    for b in range(count):
        if spectra[b, 0, 0].real <= 0.0:
            continue
        reconstruct_iterations(residuals[b], models[b], spectra[b],
                               freq_weight, gamma, iterations, width,
                               use_tree, stop_thresholds[b],
                               objectives, selections, tie_flags)
