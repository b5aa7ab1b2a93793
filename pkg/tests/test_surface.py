"""Tests for height maps, file formats, preprocessing and roughness."""

import numpy as np
import pytest

from fractomatch.errors import (
    GridShapeError,
    HeightMapError,
    MalformedHeaderError,
    MaskFractionError,
    PitchError,
    RoughnessError,
    UnderdeterminedPlaneError,
)
from fractomatch.simharness import SimSpec, synth_surface
from fractomatch.surface import (
    HeightMap,
    RoughnessCurve,
    analyze_roughness,
    despike,
    detrend_plane,
    fit_self_affine,
    height_height_correlation,
    height_map_stats,
    load_height_map,
    save_height_map,
)
from fractomatch.surface.preprocess import fit_plane


class TestHeightMap:
    def test_too_small_grid_rejected(self):
        with pytest.raises(GridShapeError):
            HeightMap(np.zeros((63, 128)), pitch=1.0)

    def test_pitch_must_be_positive(self):
        with pytest.raises(PitchError):
            HeightMap(np.zeros((64, 64)), pitch=0.0)

    def test_mask_fraction_limit(self):
        heights = np.zeros((100, 100))
        heights[:11, :] = np.nan
        with pytest.raises(MaskFractionError):
            HeightMap(heights, pitch=1.0)

    def test_ten_percent_masked_is_accepted(self):
        heights = np.zeros((100, 100))
        heights[:10, :] = np.nan
        height_map = HeightMap(heights, pitch=1.0)
        assert height_map.mask_fraction == pytest.approx(0.10)
        assert not height_map.mask[:10].any()

    def test_arrays_are_read_only(self, random_map):
        with pytest.raises(ValueError):
            random_map.heights[0, 0] = 1.0

    def test_crop_outside_raises(self, random_map):
        with pytest.raises(GridShapeError):
            random_map.crop(100, 0, 64, 64)


class TestFileFormats:
    def test_fhm1_round_trip_keeps_float32_values_and_mask(self, tmp_path, rng):
        heights = rng.standard_normal((70, 90))
        heights[3, 4] = np.nan
        original = HeightMap(heights, pitch=0.55)
        path = save_height_map(original, tmp_path / "a.fhm")

        loaded = load_height_map(path)
        assert loaded.shape == (70, 90)
        assert loaded.pitch == 0.55
        assert not loaded.mask[3, 4]
        np.testing.assert_array_equal(
            loaded.heights[loaded.mask], heights.astype(np.float32).astype(np.float64)[original.mask]
        )

    def test_csv_needs_pitch(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("\n".join(",".join(["0.5"] * 64) for _ in range(64)))
        with pytest.raises(PitchError):
            load_height_map(path)
        assert load_height_map(path, pitch=0.55).pitch == 0.55

    def test_ragged_csv_rejected(self, tmp_path):
        rows = [",".join(["1.0"] * 64) for _ in range(64)]
        rows[10] = ",".join(["1.0"] * 63)
        path = tmp_path / "ragged.csv"
        path.write_text("\n".join(rows))
        with pytest.raises(GridShapeError):
            load_height_map(path, pitch=1.0)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.fhm"
        path.write_bytes(b"XXXX" + b"\x00" * 64)
        with pytest.raises(MalformedHeaderError):
            load_height_map(path)

    def test_truncated_header_rejected(self, tmp_path):
        path = tmp_path / "short.fhm"
        path.write_bytes(b"FHM1")
        with pytest.raises(HeightMapError):
            load_height_map(path)


class TestPreprocess:
    def test_plane_is_removed(self, tilted_map):
        leveled = detrend_plane(tilted_map)
        coeffs, _ = fit_plane(leveled)
        assert abs(coeffs[1]) < 1e-12
        assert abs(coeffs[2]) < 1e-12
        assert abs(np.mean(leveled.heights)) < 1e-12
        assert leveled.meta["tilt_um_per_mm"] == pytest.approx(np.hypot(3.0, 2.0), rel=0.05)

    def test_plane_needs_three_cells(self):
        heights = np.full((64, 64), np.nan)
        heights[0, :2] = 1.0
        height_map = HeightMap(heights, pitch=1.0, validate=False)
        with pytest.raises(UnderdeterminedPlaneError):
            fit_plane(height_map)

    def test_despike_replaces_single_spike(self, random_map):
        heights = random_map.filled()
        heights[40, 50] = 500.0
        cleaned = despike(random_map.with_heights(heights), window=5, z_thresh=6.0)
        assert cleaned.meta["spikes_replaced"] >= 1
        assert abs(cleaned.heights[40, 50]) < 10.0

    def test_despike_rejects_unknown_window(self, random_map):
        with pytest.raises(HeightMapError):
            despike(random_map, window=4)

    def test_preprocessing_twice_is_idempotent(self, tilted_map):
        once = despike(detrend_plane(tilted_map))
        twice = despike(detrend_plane(once))
        assert abs(height_map_stats(once)["rms_um"] - height_map_stats(twice)["rms_um"]) < 1e-9

    def test_stats_report(self, tilted_map):
        stats = height_map_stats(detrend_plane(tilted_map))
        assert stats["rows"] == 96
        assert stats["cols"] == 80
        assert stats["mask_percent"] == 0.0
        assert stats["tilt_um_per_mm"] < 1e-6


class TestRoughness:
    def test_max_lag_limited_to_half_width(self, random_map):
        with pytest.raises(RoughnessError):
            height_height_correlation(random_map, max_lag=64.0)

    def test_lags_are_integer_pixels(self, random_map):
        curve = height_height_correlation(random_map, max_lag=10.5)
        np.testing.assert_array_equal(curve.lags, np.arange(1, 11, dtype=float))

    def test_white_noise_is_flat(self, random_map):
        curve = height_height_correlation(random_map, max_lag=20.0)
        np.testing.assert_allclose(curve.values, np.sqrt(2.0), rtol=0.05)

    def test_power_law_with_plateau(self):
        lags = np.arange(1, 201, dtype=float)
        values = np.minimum(lags, 100.0) ** 0.6
        exponent, transition = fit_self_affine(RoughnessCurve(lags, values), (3.0, 15.0))
        assert exponent == pytest.approx(0.6, abs=1e-12)
        assert transition == 119.0

    def test_pure_power_law_has_no_transition(self):
        lags = np.arange(1, 101, dtype=float)
        exponent, transition = fit_self_affine(RoughnessCurve(lags, 2.0 * lags ** 0.8), (2.0, 20.0))
        assert exponent == pytest.approx(0.8, abs=1e-12)
        assert transition is None

    def test_fit_range_needs_five_lags(self):
        lags = np.arange(1, 51, dtype=float)
        with pytest.raises(RoughnessError):
            fit_self_affine(RoughnessCurve(lags, lags ** 0.5), (3.0, 6.0))

    @pytest.mark.slow
    def test_synthetic_surfaces_are_self_affine_below_a_few_grains(self):
        grain = 35.0
        spec = SimSpec(hurst=0.6, grain_scale=grain, image_size=1024, pitch=5.0, k=2, overlap=0.0, misalign_px=0)
        passed = 0
        for seed in range(20):
            curve = analyze_roughness(synth_surface(spec, seed=seed), max_lag=300.0, fit_range=(10.0, 30.0))
            exponent_ok = abs(curve.fitted_exponent - 0.6) <= 0.1
            transition_ok = curve.transition_scale is not None and 2 * grain <= curve.transition_scale <= 8 * grain
            passed += int(exponent_ok and transition_ok)
        assert passed >= 18
