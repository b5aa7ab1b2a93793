"""
Exception hierarchy for fractomatch.

Every failure raised by the library derives from FractomatchError so batch
commands can catch one type and turn it into a per-item diagnostic.
"""

from typing import Any, Dict, Optional


class FractomatchError(Exception):
    """Base class for all fractomatch errors."""

    hint: str = "Check the input and the configuration"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{key}={value}" for key, value in self.context.items())
        return f"{self.message} ({details})"


class ConfigError(FractomatchError):
    """Invalid or unknown configuration value."""

    hint = "Fix the config file or the command-line flag"


# Height maps

class HeightMapError(FractomatchError):
    """A height map violates one of its invariants."""


class MalformedHeaderError(HeightMapError):
    """The file header does not parse under the declared format."""

    hint = "Check the file format (FHM1 magic, header length) or re-export the capture"


class GridShapeError(HeightMapError):
    """The grid is not rectangular, too small, or inconsistent with its header."""

    hint = "Captures must be rectangular and at least 64 x 64 pixels"


class PitchError(HeightMapError):
    """Pixel pitch missing or not positive."""

    hint = "Pass --pitch with the instrument's micrometres per pixel"


class MaskFractionError(HeightMapError):
    """Too many invalid pixels in the capture."""

    hint = "Re-image the field of view; at most 10% of pixels may be invalid"


class UnderdeterminedPlaneError(HeightMapError):
    """Fewer than three valid pixels to fit a plane through."""


class RoughnessError(FractomatchError):
    """Height-height correlation or self-affine fit cannot be computed."""


# Spectra and correlations

class SpectrumError(FractomatchError):
    """Amplitude spectrum cannot be computed for the requested geometry."""

    hint = "transform_size must be a power of two no smaller than the image"


class BandCorrelationError(FractomatchError):
    """A band correlation is undefined (too few cells or zero variance)."""

    hint = "Check the band plan against the image pitch and transform size"


class FisherZError(FractomatchError):
    """Correlation outside [-1, 1]."""


class DatasetError(FractomatchError):
    """Correlation dataset or pairing manifest is inconsistent."""

    hint = "Every pair needs the same number of base and tip images, all of one geometry"


# Distributions and fitting

class DistributionError(FractomatchError):
    """Invalid distribution parameters or a failed factorisation."""


class FitError(FractomatchError):
    """EM fitting cannot proceed on the given data."""

    hint = "Each class needs at least two observations and n*q > p"


class DegenerateFitError(FitError):
    """A fit collapsed onto a degenerate solution."""

    hint = "The training observations carry no spread; check for duplicated surfaces"


# Models

class ModelError(FractomatchError):
    """A trained match model is inconsistent."""


class ShapeMismatchError(ModelError):
    """Observation shape does not match the model."""

    hint = "Correlate with the same band plan and number of images the model was trained on"


class ModelFormatError(ModelError):
    """Model file cannot be read."""

    hint = "Re-train the model with this version of fractomatch"


class CalibrationError(FractomatchError):
    """Threshold calibration cannot be performed."""

    hint = "Calibration needs at least 20 non-match scores with non-zero spread"


class ProtocolError(FractomatchError):
    """An evaluation protocol was invoked with unusable inputs."""
