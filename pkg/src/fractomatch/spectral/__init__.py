"""
Spectral analysis: amplitude spectra, banded correlations, pair observations.
"""

from fractomatch.spectral.bands import BandPlan, band_cell_count, band_mask, undersized_bands
from fractomatch.spectral.correlation import (
    PairObservation,
    band_correlation,
    build_pair_observation,
    compute_spectra,
    correlate_spectra,
    fisher_z,
    restrict_columns,
)
from fractomatch.spectral.dataset import read_dataset, split_by_label, write_dataset
from fractomatch.spectral.spectrum import BandSpectrum, amplitude_spectrum, full_amplitude

__all__ = [
    "BandPlan",
    "band_mask",
    "band_cell_count",
    "undersized_bands",
    "BandSpectrum",
    "amplitude_spectrum",
    "full_amplitude",
    "PairObservation",
    "band_correlation",
    "fisher_z",
    "correlate_spectra",
    "compute_spectra",
    "build_pair_observation",
    "restrict_columns",
    "read_dataset",
    "write_dataset",
    "split_by_label",
]
