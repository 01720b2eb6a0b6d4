import numpy as np
import pytest

from fsrkit.core import FsrParams, GrayImage, SampledBlock, block_partition
from fsrkit.reconstruction import (BlockState, Selection, init_residual,
                                   iterate_block, projection_coefficient,
                                   reconstruct_block, reconstruct_block_full,
                                   reconstruct_image, select_basis,
                                   update_model, update_residual)
from fsrkit.sampling import (SampledImage, extract_support_block, mean_fill,
                             quarter_sample)
from fsrkit.metrics import psnr
from fsrkit.weights import build_weight_set

from conftest import make_natural_image, random_masked_block, random_quarter_block


def random_state(rng, size=16) -> BlockState:
    residual = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return BlockState(model=np.zeros((size, size), complex), residual=residual * 50)


class TestInitResidual:
    def test_zero_signal_gives_zero_residual(self):
        block = SampledBlock(np.zeros((8, 8)), np.ones((8, 8), bool))
        ws = build_weight_set(8, 0.7, block.mask)
        state = init_residual(block, ws)
        assert np.all(state.residual == 0)
        assert np.all(state.model == 0)
        assert state.nu == 0

    def test_constant_signal_scales_weight_spectrum(self):
        c = 37.5
        block = SampledBlock(np.full((16, 16), c), np.ones((16, 16), bool))
        ws = build_weight_set(16, 0.7, block.mask)
        state = init_residual(block, ws)
        scale = np.abs(ws.spectrum).max()
        assert np.allclose(state.residual, c * ws.spectrum, atol=1e-12 * c * scale)

    def test_dc_equals_direct_sum(self, rng):
        for trial in range(10):
            block = random_masked_block(16, rng)
            ws = build_weight_set(16, 0.7, block.mask)
            state = init_residual(block, ws)
            direct = float(np.sum(block.signal * ws.spatial))  # summation oracle
            assert state.residual[0, 0].real == pytest.approx(direct, rel=1e-9)


class TestSelectBasis:
    def test_single_nonzero_entry(self):
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        state = BlockState(model=np.zeros((16, 16), complex),
                           residual=np.zeros((16, 16), complex))
        state.residual[3, 5] = 7.0 + 2.0j
        for reducer in ("tree", "linear"):
            sel = select_basis(state, ws, reducer)
            assert (sel.u, sel.v) == (3, 5)
            expected = ws.frequency[3, 5] * (7.0 ** 2 + 2.0 ** 2)
            assert sel.objective == expected

    def test_conjugate_pair_tie(self):
        s = 16
        ws = build_weight_set(s, 0.7, np.ones((s, s), bool))
        state = BlockState(model=np.zeros((s, s), complex),
                           residual=np.zeros((s, s), complex))
        z = 5.0 + 3.0j
        state.residual[1, 2] = z
        state.residual[s - 1, s - 2] = np.conj(z)
        tree = select_basis(state, ws, "tree")
        scan = select_basis(state, ws, "linear")
        assert tree.objective == scan.objective
        assert (tree.u, tree.v) in ((1, 2), (s - 1, s - 2))

    def test_matches_exhaustive_scan_bitwise(self, rng):
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        for _ in range(50):
            state = random_state(rng)
            obj = ws.frequency * (state.residual.real ** 2 + state.residual.imag ** 2)
            best = float(obj.max())
            assert select_basis(state, ws, "tree").objective == best
            assert select_basis(state, ws, "linear").objective == best

    def test_unknown_reducer_rejected(self, rng):
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        with pytest.raises(ValueError, match="strategy"):
            select_basis(random_state(rng), ws, "fastest")


class TestProjectionCoefficient:
    def test_zero_residual_entry(self, rng):
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        state = random_state(rng)
        state.residual[4, 9] = 0.0
        assert projection_coefficient(state, ws, Selection(4, 9, 0.0)) == 0.0

    def test_residual_equal_to_dc_weight(self):
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        state = BlockState(model=np.zeros((16, 16), complex),
                           residual=np.zeros((16, 16), complex))
        state.residual[2, 2] = ws.spectrum[0, 0].real
        assert projection_coefficient(state, ws, Selection(2, 2, 0.0)) == 1.0

    def test_roundtrip_against_residual_entry(self, rng):
        # (c / w00) * w00 recovers c up to one rounding of each component
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        w00 = ws.spectrum[0, 0].real
        for _ in range(20):
            state = random_state(rng)
            sel = select_basis(state, ws, "linear")
            p = projection_coefficient(state, ws, sel)
            c = state.residual[sel.u, sel.v]
            assert p.real * w00 == pytest.approx(c.real, rel=5e-16, abs=0.0)
            assert p.imag * w00 == pytest.approx(c.imag, rel=5e-16, abs=0.0)

    def test_empty_support_raises(self, rng):
        ws = build_weight_set(16, 0.7, np.zeros((16, 16), bool))
        with pytest.raises(ValueError, match="empty support"):
            projection_coefficient(random_state(rng), ws, Selection(0, 0, 0.0))


class TestUpdates:
    def test_model_update_adds_scaled_coefficient(self, rng):
        state = random_state(rng)
        before = state.model.copy()
        updated = update_model(state, Selection(3, 7, 0.0), 1.0 + 0.0j, 0.5)
        assert updated.model[3, 7] == before[3, 7] + 128.0  # 0.5 * 1 * 16^2
        changed = np.zeros((16, 16), bool)
        changed[3, 7] = True
        assert np.array_equal(updated.model[~changed], before[~changed])

    def test_zero_coefficient_is_noop(self, rng):
        state = random_state(rng)
        updated = update_model(state, Selection(1, 1, 0.0), 0.0, 0.5)
        assert np.array_equal(updated.model, state.model)

    def test_two_updates_accumulate(self, rng):
        state = random_state(rng)
        sel = Selection(5, 5, 0.0)
        state = update_model(state, sel, 1.0, 0.5)
        state = update_model(state, sel, 2.0, 0.5)
        # gamma * S^2 * (p1 + p2) with exactly representable values
        assert state.model[5, 5] == pytest.approx(0.5 * 256 * 3.0)

    def test_residual_update_zero_shift(self, rng):
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        state = random_state(rng)
        p = 0.3 - 0.8j
        updated = update_residual(state, Selection(0, 0, 0.0), p, 0.5, ws)
        expected = state.residual - (0.5 * p) * ws.spectrum
        assert np.array_equal(updated.residual, expected)
        assert updated.nu == state.nu + 1

    def test_residual_update_wraparound_indexing(self, rng):
        s = 16
        ws = build_weight_set(s, 0.7, np.ones((s, s), bool))
        state = random_state(rng)
        p = 1.0 + 0.0j
        u, v = 5, 11
        updated = update_residual(state, Selection(u, v, 0.0), p, 1.0, ws)
        # spot-check the wrapped branch: k=2, u=5 -> i = 16 + 2 - 5 = 13
        k, l = 2, 3
        expected = state.residual[k, l] - ws.spectrum[13, (l - v) % s]
        assert updated.residual[k, l] == expected

    def test_selected_entry_changes_by_dc_amount(self, rng):
        ws = build_weight_set(16, 0.7, np.ones((16, 16), bool))
        state = random_state(rng)
        p = 0.7 + 0.1j
        sel = Selection(4, 6, 0.0)
        updated = update_residual(state, sel, p, 0.5, ws)
        expected = state.residual[4, 6] - (0.5 * p) * ws.spectrum[0, 0]
        assert updated.residual[4, 6].real == pytest.approx(expected.real, rel=1e-14)
        assert updated.residual[4, 6].imag == pytest.approx(expected.imag, rel=1e-14)


class TestIterationConsistency:
    def test_residual_matches_recomputation_after_each_iteration(self, rng):
        # identity: residual spectrum == transform of (signal - model) * w
        for trial in range(5):
            block = random_quarter_block(16, rng, trial + 50)
            ws = build_weight_set(16, 0.7, block.mask)
            state = init_residual(block, ws)
            for _ in range(20):
                state, _, _ = iterate_block(state, ws, 0.5, "tree")
                g = np.fft.ifft2(state.model)
                recomputed = np.fft.fft2((block.signal - g) * ws.spatial)
                err = np.abs(state.residual - recomputed).max()
                assert err <= 1e-8 * 16 * 16

    def test_energy_monotone(self, rng):
        for gamma in (0.2, 1.0):
            block = random_masked_block(16, rng)
            ws = build_weight_set(16, 0.7, block.mask)
            state = init_residual(block, ws)
            energy = [float(np.sum(block.signal ** 2 * ws.spatial))]
            for _ in range(32):
                state, _, _ = iterate_block(state, ws, gamma, "tree")
                g = np.fft.ifft2(state.model)
                resid = block.signal - g
                energy.append(float(np.sum((resid.real ** 2 + resid.imag ** 2)
                                           * ws.spatial)))
            energy = np.array(energy)
            assert np.all(np.diff(energy) <= 1e-9 * energy[0])


class TestReconstructBlock:
    def test_fully_known_block_is_identity(self, rng):
        signal = rng.uniform(0, 255, (16, 16))
        block = SampledBlock(signal, np.ones((16, 16), bool))
        ws = build_weight_set(16, 0.7, block.mask)
        out = reconstruct_block(block, ws, FsrParams(iterations=8))
        assert np.array_equal(out, signal)

    def test_zero_iterations_leaves_unknowns_zero(self, rng):
        block = random_quarter_block(16, rng, 3)
        ws = build_weight_set(16, 0.7, block.mask)
        out = reconstruct_block(block, ws, FsrParams(iterations=0))
        assert np.array_equal(out[block.mask], block.signal[block.mask])
        assert np.all(out[~block.mask] == 0)

    def test_known_samples_preserved_bitwise(self, rng):
        block = random_quarter_block(16, rng, 4)
        ws = build_weight_set(16, 0.7, block.mask)
        out = reconstruct_block(block, ws, FsrParams(iterations=64))
        assert np.array_equal(out[block.mask], block.signal[block.mask])

    def test_empty_support_flagged(self):
        block = SampledBlock(np.zeros((16, 16)), np.zeros((16, 16), bool))
        ws = build_weight_set(16, 0.7, block.mask)
        result = reconstruct_block_full(block, ws, FsrParams(iterations=8))
        assert result.empty_support
        assert np.all(result.output == 0)
        assert result.iterations_run == 0

    def test_reducers_agree_on_objectives(self, rng):
        block = random_quarter_block(16, rng, 5)
        ws = build_weight_set(16, 0.7, block.mask)
        params = FsrParams(iterations=32)
        tree = reconstruct_block_full(block, ws, params, "tree")
        scan = reconstruct_block_full(block, ws, params, "linear")
        assert np.array_equal(tree.objectives, scan.objectives)

    def test_early_stop_runs_fewer_iterations(self):
        # a single known sample is fitted almost immediately at gamma = 1
        signal = np.zeros((16, 16))
        mask = np.zeros((16, 16), bool)
        signal[8, 8] = 200.0
        mask[8, 8] = True
        block = SampledBlock(signal, mask)
        ws = build_weight_set(16, 0.7, mask)
        params = FsrParams(iterations=100, gamma=1.0)
        eager = reconstruct_block_full(block, ws, params, early_stop=True)
        plain = reconstruct_block_full(block, ws, params, early_stop=False)
        assert eager.iterations_run < 100
        assert plain.iterations_run == 100
        assert np.array_equal(eager.output[mask], signal[mask])


class TestReconstructImage:
    def test_fully_sampled_image_is_identity(self, rng):
        img = GrayImage(rng.uniform(0, 255, (20, 20)))
        sampled = SampledImage(img, np.ones((20, 20), bool))
        out = reconstruct_image(sampled, FsrParams(iterations=4))
        assert np.array_equal(out.pixels, img.pixels)

    def test_thread_count_does_not_change_output(self):
        img = make_natural_image(48, seed=13)
        sampled = quarter_sample(img, 21)
        base = reconstruct_image(sampled, FsrParams(iterations=40, threads=1))
        for threads in (2, 4):
            other = reconstruct_image(sampled, FsrParams(iterations=40, threads=threads))
            assert np.array_equal(base.pixels, other.pixels)

    def test_matches_independent_per_block_assembly(self, rng):
        img = make_natural_image(32, seed=5)
        sampled = quarter_sample(img, 2)
        params = FsrParams(iterations=24, threads=2)
        pipeline = reconstruct_image(sampled, params)
        descs = block_partition(32, 32, params)
        order = rng.permutation(len(descs))
        manual = np.array(sampled.image.pixels)
        for idx in order:
            d = descs[idx]
            block = extract_support_block(sampled, d, params.support)
            ws = build_weight_set(params.support, params.rho, block.mask)
            out = reconstruct_block(block, ws, params)
            manual[d.target_row:d.target_row + d.height,
                   d.target_col:d.target_col + d.width] = \
                out[params.border:params.border + d.height,
                    params.border:params.border + d.width]
        assert np.array_equal(pipeline.pixels, manual)

    def test_known_pixels_preserved(self):
        img = make_natural_image(32, seed=3)
        sampled = quarter_sample(img, 7)
        out = reconstruct_image(sampled, FsrParams(iterations=24))
        assert np.array_equal(out.pixels[sampled.mask], img.pixels[sampled.mask])

    def test_beats_mean_fill_on_natural_image(self):
        img = make_natural_image(64, seed=10)
        sampled = quarter_sample(img, 11)
        fsr = reconstruct_image(sampled, FsrParams(iterations=60, threads=2))
        baseline = mean_fill(sampled)
        assert psnr(img, fsr).psnr_db > psnr(img, baseline).psnr_db + 3.0

    def test_empty_support_falls_back_to_mean(self):
        # knowns only in the top-left corner leave far blocks without support
        pixels = np.zeros((64, 64))
        mask = np.zeros((64, 64), bool)
        pixels[0:2, 0:2] = 100.0
        mask[0:2, 0:2] = True
        sampled = SampledImage(GrayImage(pixels), mask)
        out = reconstruct_image(sampled, FsrParams(iterations=4))
        assert np.all(out.pixels[-4:, -4:] == 100.0)  # mean of samples

    def test_truncated_edge_blocks_covered(self, rng):
        img = GrayImage(rng.uniform(0, 255, (18, 22)))
        sampled = quarter_sample(img, 1)
        out = reconstruct_image(sampled, FsrParams(iterations=12))
        assert out.shape == (18, 22)
        assert np.all(np.isfinite(out.pixels))

    def test_early_stop_changes_nothing_material(self):
        img = make_natural_image(32, seed=9)
        sampled = quarter_sample(img, 6)
        params = FsrParams(iterations=80)
        plain = reconstruct_image(sampled, params)
        eager = reconstruct_image(sampled, params, early_stop=True)
        assert np.array_equal(eager.pixels[sampled.mask], img.pixels[sampled.mask])
        # skipped updates carry at most 1e-12 of the initial block energy
        assert np.abs(plain.pixels - eager.pixels).max() < 1e-3
