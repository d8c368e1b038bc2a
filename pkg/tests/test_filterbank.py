import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plcorridor.filterbank import (
    BANK_ANGLES_DEG,
    DirectionalBlockParams,
    build_bank,
    cell_line_length,
    channel_energies,
    default_block_params,
    directional_block_forward,
    directional_features,
    export_block_weights,
    frequency_response,
    highpass_prototype,
    kernel_response_at,
    load_block_weights,
    lowpass_prototype,
    perpendicular_angle,
    prototype_response_at,
    rotate_filter,
)
from plcorridor.imaging import RasterImage, to_grayscale
from plcorridor.synth import dashed_line_image

DEG_26 = math.degrees(math.atan(0.5))
DEG_63 = math.degrees(math.atan(2.0))


def sampled_cell_lengths(n, theta_deg, samples=10_000):
    """Independent oracle: midpoint-rule line sampling within each column."""
    t = math.tan(math.radians(theta_deg))
    c = n / 2
    sec = math.hypot(1.0, t)
    lengths = np.zeros((n, n))
    for i in range(n):
        xs = i + (np.arange(samples) + 0.5) / samples
        ys = (xs - c) * t + c
        js = np.floor(ys).astype(int)
        ok = (js >= 0) & (js < n)
        for j, count in zip(*np.unique(js[ok], return_counts=True)):
            lengths[i, j] = count / samples * sec
    return lengths


class TestPrototypes:
    def test_highpass_exact_values(self):
        assert highpass_prototype().taps == (1 / 16, 0.0, -9 / 16, 1.0, -9 / 16, 0.0, 1 / 16)

    def test_highpass_zero_sum_and_symmetry(self):
        taps = highpass_prototype().taps
        assert sum(taps) == 0.0
        assert all(taps[i] == taps[6 - i] for i in range(7))

    def test_lowpass_exact_values(self):
        assert lowpass_prototype().taps == (-1 / 4, -1 / 2, 1.0, 2.0, 1.0, -1 / 2, -1 / 4)

    def test_lowpass_dc_gain(self):
        assert sum(lowpass_prototype().taps) == pytest.approx(2.5, abs=1e-15)


class TestCellLineLength:
    def test_horizontal_middle_row(self):
        for i in range(7):
            for j in range(7):
                expected = 1.0 if j == 3 else 0.0
                assert cell_line_length(7, 0.0, i, j) == pytest.approx(expected)

    def test_diagonal_cells(self):
        for i in range(7):
            for j in range(7):
                got = cell_line_length(7, 45.0, i, j)
                if i == j:
                    assert got == pytest.approx(math.sqrt(2), abs=1e-9)
                else:
                    assert got == pytest.approx(0.0, abs=1e-9)

    def test_center_cell_is_secant(self):
        got = cell_line_length(7, DEG_26, 3, 3)
        assert got == pytest.approx(1 / math.cos(math.radians(DEG_26)), abs=1e-9)
        assert got == pytest.approx(math.sqrt(1.25), abs=1e-12)

    @pytest.mark.parametrize("theta", [DEG_26, 45.0])
    def test_matches_dense_sampling_oracle(self, theta):
        oracle = sampled_cell_lengths(7, theta)
        for i in range(7):
            for j in range(7):
                assert cell_line_length(7, theta, i, j) == \
                    pytest.approx(oracle[i, j], abs=1e-4)

    @given(theta=st.floats(0.0, 45.0), n=st.sampled_from([5, 7, 9]))
    def test_column_sums_equal_secant(self, theta, n):
        # the line crosses every column's full width inside the grid
        sec = math.hypot(1.0, math.tan(math.radians(theta)))
        for i in range(n):
            total = sum(cell_line_length(n, theta, i, j) for j in range(n))
            assert total == pytest.approx(sec, abs=1e-6)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            cell_line_length(6, 10.0, 0, 0)
        with pytest.raises(ValueError):
            cell_line_length(7, 50.0, 0, 0)
        with pytest.raises(ValueError):
            cell_line_length(7, 10.0, 7, 0)


class TestRotateFilter:
    def test_zero_degrees_middle_row(self):
        k = rotate_filter(highpass_prototype(), 0.0)
        assert np.array_equal(k.weights[3], np.asarray(highpass_prototype().taps))
        mask = np.ones(7, dtype=bool)
        mask[3] = False
        assert np.all(k.weights[mask] == 0.0)

    def test_ninety_is_transpose_of_zero(self):
        k0 = rotate_filter(highpass_prototype(), 0.0)
        k90 = rotate_filter(highpass_prototype(), 90.0)
        assert np.array_equal(k90.weights, k0.weights.T)

    def test_forty_five_diagonal_equals_prototype(self):
        k = rotate_filter(highpass_prototype(), 45.0)
        taps = np.asarray(highpass_prototype().taps)
        assert np.allclose(np.diag(k.weights), taps, atol=1e-12)
        off = k.weights - np.diag(np.diag(k.weights))
        assert np.all(np.abs(off) <= 1e-12)

    def test_transposition_pair(self):
        k26 = rotate_filter(highpass_prototype(), DEG_26)
        k63 = rotate_filter(highpass_prototype(), DEG_63)
        assert np.array_equal(k63.weights, k26.weights.T)

    def test_transpose_exact_at_complement_angles(self):
        for p in (highpass_prototype(), lowpass_prototype()):
            for theta in (DEG_26, 45.0):
                a = rotate_filter(p, 90.0 - theta).weights
                b = rotate_filter(p, theta).weights.T
                assert np.array_equal(a, b)

    def test_negative_is_vertical_mirror(self):
        for theta in (DEG_26, 45.0, DEG_63):
            pos = rotate_filter(highpass_prototype(), theta)
            neg = rotate_filter(highpass_prototype(), -theta)
            assert np.array_equal(neg.weights, pos.weights[::-1, :])

    def test_even_prototype_rejected(self):
        with pytest.raises(ValueError):
            rotate_filter(
                highpass_prototype().__class__((0.5, 0.5), "lowpass"), 0.0)


class TestBank:
    def test_eight_exact_angles(self):
        bank = build_bank(highpass_prototype())
        assert [k.angle_deg for k in bank.kernels] == list(BANK_ANGLES_DEG)
        assert len(set(BANK_ANGLES_DEG)) == 8

    def test_zero_kernel_row_sums_to_zero(self):
        bank = build_bank(highpass_prototype())
        assert bank.kernel_at(0.0).weights.sum() == pytest.approx(0.0, abs=1e-15)

    def test_mirror_pairs_against_independent_construction(self):
        # oracle: rebuild the positive kernel and mirror it by hand
        bank = build_bank(lowpass_prototype())
        for theta in (DEG_26, 45.0, DEG_63):
            mirrored = rotate_filter(lowpass_prototype(), theta).weights[::-1, :]
            assert np.array_equal(bank.kernel_at(-theta).weights, mirrored)

    def test_perpendicular_angle_folds_into_bank(self):
        folded = {round(perpendicular_angle(a), 6) for a in BANK_ANGLES_DEG}
        assert folded == {round(a, 6) for a in BANK_ANGLES_DEG}


class TestFrequencyResponse:
    def test_highpass_dc_and_nyquist(self):
        hp = highpass_prototype()
        assert prototype_response_at(hp, 0.0) == pytest.approx(0.0, abs=1e-9)
        assert prototype_response_at(hp, math.pi) == pytest.approx(2.0, abs=1e-9)

    def test_lowpass_dc(self):
        assert prototype_response_at(lowpass_prototype(), 0.0) == \
            pytest.approx(2.5, abs=1e-9)

    def test_rotated_highpass_kernels_block_dc(self):
        for k in build_bank(highpass_prototype()).kernels:
            assert kernel_response_at(k, 0.0, 0.0) == pytest.approx(0.0, abs=1e-9)

    def test_grid_contains_dc_sample(self):
        k = rotate_filter(highpass_prototype(), 0.0)
        grid = frequency_response(k, 64)
        assert grid.values[32, 32] == pytest.approx(0.0, abs=1e-9)

    def test_directional_dominance_at_half_nyquist(self):
        # response along the filter's tap direction beats the orthogonal one
        for k in build_bank(highpass_prototype()).kernels:
            th = math.radians(k.angle_deg)
            w = math.pi / 2
            along = kernel_response_at(k, w * math.cos(th), w * math.sin(th))
            ortho = kernel_response_at(k, -w * math.sin(th), w * math.cos(th))
            assert along > ortho

    def test_grid_size_validated(self):
        with pytest.raises(ValueError):
            frequency_response(rotate_filter(highpass_prototype(), 0.0), 8)


class TestDirectionalBlock:
    def test_zero_image_gives_zero_output(self):
        img = RasterImage(np.zeros((32, 32, 3), dtype=np.uint8))
        out = directional_block_forward(img)
        assert np.all(out.pixels == 0)

    def test_constant_image_interior_features_vanish(self):
        # oracle: every high-pass kernel sums to ~0, so DC cannot pass
        params = default_block_params()
        for k in params.hp_bank.kernels:
            assert abs(k.weights.sum()) < 1e-12
        img = RasterImage(np.full((40, 40, 3), 137, dtype=np.uint8))
        feats = directional_features(to_grayscale(img), params)
        assert np.all(np.abs(feats[:, 13:-13, 13:-13]) < 1e-9)

    def test_line_selectivity_smoke(self):
        params = default_block_params()
        for target in (0.0, 45.0, 90.0):
            img = dashed_line_image(64, target, (31.0, 34.0), phase=0.25)
            energies = channel_energies(img, params)
            assert BANK_ANGLES_DEG[int(np.argmax(energies))] == target

    def test_translation_equivariance(self):
        rng = np.random.default_rng(5)
        patch = rng.integers(0, 256, (24, 24, 3), dtype=np.uint8)
        canvas1 = np.zeros((64, 64, 3), dtype=np.uint8)
        canvas2 = np.zeros((64, 64, 3), dtype=np.uint8)
        canvas1[10:34, 12:36] = patch
        canvas2[15:39, 15:39] = patch  # shifted by (5, 3)
        out1 = directional_block_forward(RasterImage(canvas1)).pixels.astype(int)
        out2 = directional_block_forward(RasterImage(canvas2)).pixels.astype(int)
        inner1 = out1[17:27, 19:29]
        inner2 = out2[22:32, 22:32]
        assert np.max(np.abs(inner1 - inner2)) <= 1

    def test_forward_deterministic(self):
        img = dashed_line_image(48, 45.0, (20.0, 25.0))
        a = directional_block_forward(img).pixels
        b = directional_block_forward(img).pixels
        assert np.array_equal(a, b)

    def test_invalid_params_rejected(self):
        bank = build_bank(highpass_prototype())
        with pytest.raises(ValueError):
            DirectionalBlockParams(bank, bank, leaky_slope=1.5)
        with pytest.raises(ValueError):
            DirectionalBlockParams(bank, bank, converter=np.ones((2, 8)))


class TestWeightExport:
    def test_round_trip(self, tmp_path):
        params = default_block_params()
        path = tmp_path / "weights.json"
        export_block_weights(params, path)
        again = load_block_weights(path)
        for a, b in zip(params.hp_bank.kernels, again.hp_bank.kernels):
            assert np.array_equal(a.weights, b.weights)
        for a, b in zip(params.lp_bank.kernels, again.lp_bank.kernels):
            assert np.array_equal(a.weights, b.weights)
        assert again.leaky_slope == params.leaky_slope
        assert np.array_equal(again.converter, params.converter)

    def test_file_contains_eight_angles_and_shapes(self, tmp_path):
        path = tmp_path / "weights.json"
        export_block_weights(default_block_params(), path)
        doc = json.loads(path.read_text())
        assert len(doc["angles_deg"]) == 8
        shapes = {layer["name"]: layer["shape"] for layer in doc["layers"]}
        assert shapes["directional_highpass"] == [8, 1, 7, 7]
        assert shapes["directional_lowpass"] == [8, 8, 7, 7]
        assert shapes["channel_converter"] == [3, 8, 1, 1]

    def test_zero_angle_highpass_middle_row(self, tmp_path):
        path = tmp_path / "weights.json"
        export_block_weights(default_block_params(), path)
        doc = json.loads(path.read_text())
        hp = next(l for l in doc["layers"] if l["name"] == "directional_highpass")
        idx = hp["kernel_angles_deg"].index(0.0)
        grid = np.asarray(hp["weights"][idx]).reshape(7, 7)
        assert np.array_equal(grid[3], np.asarray(highpass_prototype().taps))

    def test_byte_stable(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        export_block_weights(default_block_params(), p1)
        export_block_weights(default_block_params(), p2)
        assert p1.read_bytes() == p2.read_bytes()
