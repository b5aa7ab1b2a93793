"""Tests for band plans, amplitude spectra, band correlations and the dataset CSV."""

import numpy as np
import pytest
from pydantic import ValidationError

from fractomatch.errors import BandCorrelationError, DatasetError, FisherZError, SpectrumError
from fractomatch.models import PairLabel
from fractomatch.spectral import (
    BandPlan,
    PairObservation,
    amplitude_spectrum,
    band_cell_count,
    band_correlation,
    band_mask,
    build_pair_observation,
    fisher_z,
    full_amplitude,
    read_dataset,
    restrict_columns,
    undersized_bands,
    write_dataset,
)
from fractomatch.spectral.bands import frequency_axes
from fractomatch.surface import HeightMap


class TestBandPlan:
    def test_default_bands(self):
        plan = BandPlan()
        assert plan.bands == [(5.0, 10.0), (10.0, 20.0)]
        assert plan.p == 2

    def test_parse_cli_form(self):
        plan = BandPlan.parse("5-10, 10-20,20-40")
        assert plan.bands == [(5.0, 10.0), (10.0, 20.0), (20.0, 40.0)]
        assert plan.describe() == "5-10,10-20,20-40"

    def test_overlapping_bands_rejected(self):
        with pytest.raises(ValidationError):
            BandPlan(bands=[(5.0, 12.0), (10.0, 20.0)])

    def test_empty_band_rejected(self):
        with pytest.raises(ValidationError):
            BandPlan(bands=[(10.0, 10.0)])

    def test_sector_bounds(self):
        with pytest.raises(ValidationError):
            BandPlan(angular_sector=(90.0, 200.0))

    def test_cell_count_at_simulator_geometry(self):
        assert band_cell_count((5.0, 10.0), 256, 4.4) >= 50
        assert undersized_bands(BandPlan(), 256, 4.4) == []

    def test_undersized_band_reported(self):
        short = undersized_bands(BandPlan(bands=[(5.0, 6.0)]), 64, 1.0)
        assert short and short[0][0] == (5.0, 6.0)


class TestBandMask:
    def test_conjugate_duplicates_excluded(self):
        n = 64
        mask = band_mask(n, 1.0, (0.0, 1e9))
        _, fx = frequency_axes(n, 1.0)
        for row in (0, n // 2):
            assert not mask[row, fx < 0].any()
            assert mask[row, fx >= 0].all()
        assert mask[1:n // 2].all()

    def test_half_plane_cell_count(self):
        n = 32
        mask = band_mask(n, 1.0, (0.0, 1e9))
        assert mask.shape == (n // 2 + 1, n)
        assert int(mask.sum()) == n * n // 2

    def test_sector_halves_the_band(self):
        full = band_cell_count((100.0, 300.0), 64, 1.0)
        right = band_cell_count((100.0, 300.0), 64, 1.0, sector=(0.0, 90.0))
        left = band_cell_count((100.0, 300.0), 64, 1.0, sector=(90.0, 180.0))
        assert right + left == full


class TestAmplitudeSpectrum:
    def test_single_tone_peak_location(self):
        n, m = 128, 10
        x = np.arange(n)
        heights = np.tile(np.cos(2 * np.pi * m * x / n), (n, 1))
        spectrum = amplitude_spectrum(HeightMap(heights, pitch=2.0), n)
        positive = spectrum.amplitude[:, n // 2:]
        row, col = np.unravel_index(np.argmax(positive), positive.shape)
        assert row == 0
        assert col == m
        assert spectrum.fx_axis[n // 2 + col] == pytest.approx(m * 1000.0 / (n * 2.0))

    def test_conjugate_symmetry(self, random_map):
        amplitude = full_amplitude(random_map, 128)
        mirrored = np.roll(np.flip(amplitude, axis=(0, 1)), 1, axis=(0, 1))
        np.testing.assert_allclose(amplitude, mirrored, atol=1e-10)

    def test_shape_and_geometry(self, random_map):
        spectrum = amplitude_spectrum(random_map, 256)
        assert spectrum.amplitude.shape == (129, 256)
        assert spectrum.spacing == pytest.approx(1000.0 / 256.0)

    def test_transform_size_must_be_power_of_two(self, random_map):
        with pytest.raises(SpectrumError):
            amplitude_spectrum(random_map, 200)

    def test_transform_smaller_than_image_refused(self, random_map):
        with pytest.raises(SpectrumError):
            amplitude_spectrum(random_map, 64)

    def test_hann_window_changes_spectrum(self, random_map):
        plain = amplitude_spectrum(random_map, 128).amplitude
        tapered = amplitude_spectrum(random_map, 128, hann=True).amplitude
        assert not np.allclose(plain, tapered)


class TestBandCorrelation:
    BAND = (100.0, 300.0)

    def test_self_correlation_is_one(self, random_map):
        spectrum = amplitude_spectrum(random_map, 128)
        assert band_correlation(spectrum, spectrum, self.BAND) == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_force_enumeration(self, rng):
        a = amplitude_spectrum(HeightMap(rng.standard_normal((64, 64)), pitch=1.0), 64)
        b = amplitude_spectrum(HeightMap(rng.standard_normal((64, 64)), pitch=1.0), 64)
        xs, ys = [], []
        for i, fy in enumerate(a.fy_axis):
            for j, fx in enumerate(a.fx_axis):
                if (i == 0 or i == 32) and fx < 0:
                    continue
                radius = np.hypot(fx, fy)
                if self.BAND[0] <= radius < self.BAND[1]:
                    xs.append(a.amplitude[i, j])
                    ys.append(b.amplitude[i, j])
        expected = np.corrcoef(xs, ys)[0, 1]
        assert band_correlation(a, b, self.BAND) == pytest.approx(expected, abs=1e-12)

    def test_symmetric(self, rng):
        a = amplitude_spectrum(HeightMap(rng.standard_normal((64, 64)), pitch=1.0), 64)
        b = amplitude_spectrum(HeightMap(rng.standard_normal((64, 64)), pitch=1.0), 64)
        assert band_correlation(a, b, self.BAND) == band_correlation(b, a, self.BAND)

    def test_too_few_cells(self, random_map):
        spectrum = amplitude_spectrum(random_map, 128)
        with pytest.raises(BandCorrelationError):
            band_correlation(spectrum, spectrum, (7.8, 16.0))

    def test_geometry_mismatch(self, random_map):
        with pytest.raises(BandCorrelationError):
            band_correlation(amplitude_spectrum(random_map, 128), amplitude_spectrum(random_map, 256), self.BAND)


class TestFisherZ:
    def test_inverse_of_tanh(self):
        for z in np.linspace(-7.0, 7.0, 57):
            assert fisher_z(np.tanh(z)) == pytest.approx(z, abs=1e-9)

    def test_clamped_at_one(self):
        assert np.isfinite(fisher_z(1.0))
        assert fisher_z(1.0) == pytest.approx(np.arctanh(1.0 - 1e-12))
        assert fisher_z(-1.0) == -fisher_z(1.0)

    def test_out_of_range(self):
        with pytest.raises(FisherZError):
            fisher_z(1.5)


class TestPairObservation:
    def test_needs_two_images(self):
        with pytest.raises(DatasetError):
            PairObservation(np.zeros((2, 1)), ("a", "b"))

    def test_band_plan_must_match_rows(self):
        with pytest.raises(DatasetError):
            PairObservation(np.zeros((3, 4)), ("a", "b"))

    def test_key_and_involvement(self):
        obs = PairObservation(np.zeros((2, 4)), ("K1", "K2"), PairLabel.NON_MATCH)
        assert obs.key == "K1:K2"
        assert obs.involves("K2") and not obs.involves("K3")

    def test_build_from_images(self, rng):
        base = [HeightMap(rng.standard_normal((64, 64)), pitch=1.0) for _ in range(3)]
        plan = BandPlan(bands=[(100.0, 200.0), (200.0, 300.0)])
        obs = build_pair_observation(base, base, plan, 64, pair_id=("s", "s"), label=PairLabel.MATCH)
        assert obs.shape == (2, 3)
        np.testing.assert_allclose(obs.r, 1.0, atol=1e-12)

    def test_unequal_image_counts(self, rng):
        images = [HeightMap(rng.standard_normal((64, 64)), pitch=1.0) for _ in range(3)]
        with pytest.raises(DatasetError):
            build_pair_observation(images, images[:2], BandPlan(bands=[(100.0, 300.0)]), 64)

    def test_restrict_columns(self):
        z = np.arange(12, dtype=float).reshape(2, 6) / 10.0
        restricted = restrict_columns(PairObservation(z, ("a", "b")), [0, 2, 4])
        np.testing.assert_array_equal(restricted.z, z[:, [0, 2, 4]])


class TestDataset:
    def test_write_and_read(self, tmp_path, rng):
        observations = [
            PairObservation(np.tanh(rng.standard_normal((2, 3))), ("B1", "T2"), PairLabel.NON_MATCH),
            PairObservation(np.tanh(rng.standard_normal((2, 3))), ("B1", "T1"), PairLabel.MATCH),
        ]
        path = tmp_path / "data.csv"
        rows = write_dataset(observations, path, header="# fractomatch test config=abc\n")
        assert rows == 12
        assert path.read_text().startswith("# fractomatch")

        loaded = read_dataset(path)
        assert [obs.key for obs in loaded] == ["B1:T1", "B1:T2"]
        np.testing.assert_array_equal(loaded[0].z, observations[1].z)
        assert loaded[0].label == PairLabel.MATCH
        assert loaded[1].band_plan.bands == [(5.0, 10.0), (10.0, 20.0)]

    def test_missing_cells_rejected(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text(
            "pair_id,label,band_lo,band_hi,image_index,r,z\n"
            "a:b,match,5.0,10.0,0,0.5,0.55\n"
            "a:b,match,5.0,10.0,1,0.5,0.55\n"
            "a:b,match,10.0,20.0,0,0.5,0.55\n"
        )
        with pytest.raises(DatasetError):
            read_dataset(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("pair,label\n")
        with pytest.raises(DatasetError):
            read_dataset(path)
