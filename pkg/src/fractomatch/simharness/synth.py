"""
Synthetic self-affine fracture surfaces and their simulated captures.

A surface is spectral synthesis on a strip: uniform random phases on a fixed
isotropic amplitude max(f, f_r)^(-(1 + H)), flat below the roll-off
f_r = 1000 / (ROLLOFF_GRAINS * grain_scale) cycles/mm. Height differences
then follow a power law of exponent H up to about two grain diameters and
fall below it within two to eight.

A capture of one fragment adds white noise and a small lateral shift, then
the strip is cut into k overlapping windows. The tip fragment is the
height-inverted surface.
"""

import logging
import zlib
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import fft

from fractomatch.models import PairLabel, Side
from fractomatch.surface.heightmap import MIN_SIDE, HeightMap

logger = logging.getLogger("fractomatch.simharness")

OVERLAP_PROTOCOLS = (0.75, 0.5, 0.0)

# Plateau wavelength of the synthesis spectrum, in grain diameters.
ROLLOFF_GRAINS = 36.0

Seed = Union[int, Sequence[int]]


class SimSpec(BaseModel):
    """Simulator settings; the defaults mirror the 9-image, 75%-overlap protocol."""
    model_config = ConfigDict(extra="forbid")

    hurst: float = Field(default=0.6, gt=0.0, lt=1.0)
    grain_scale: float = Field(default=30.0, gt=0.0)
    image_size: int = Field(default=128, ge=MIN_SIDE)
    pitch: float = Field(default=4.4, gt=0.0)
    k: int = Field(default=9, ge=2)
    overlap: float = 0.75
    noise_sigma: float = Field(default=0.2, ge=0.0)
    misalign_px: int = Field(default=2, ge=0)
    seed: int = 0

    @field_validator("overlap")
    @classmethod
    def _check_overlap(cls, value: float) -> float:
        if value not in OVERLAP_PROTOCOLS:
            raise ValueError(f"overlap must be one of {OVERLAP_PROTOCOLS}")
        return float(value)

    @model_validator(mode="after")
    def _check_image_size(self) -> "SimSpec":
        if self.image_size % 4:
            raise ValueError("image_size must be divisible by 4")
        return self

    @property
    def stride(self) -> int:
        """Window step in pixels."""
        return int(round(self.image_size * (1.0 - self.overlap)))

    @property
    def strip_width(self) -> int:
        """image_size * (1 + (k - 1)(1 - overlap)) pixels."""
        return self.image_size + (self.k - 1) * self.stride


def _rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def spectral_synthesis(
    rows: int,
    cols: int,
    pitch: float,
    hurst: float,
    grain_scale: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Zero-mean, RMS-1 height field with the roll-off spectrum above."""
    fy = fft.fftfreq(rows, d=pitch) * 1000.0
    fx = fft.rfftfreq(cols, d=pitch) * 1000.0
    radius = np.hypot(fy[:, None], fx[None, :])
    rolloff = 1000.0 / (ROLLOFF_GRAINS * grain_scale)
    amplitude = np.maximum(radius, rolloff) ** (-(1.0 + hurst))
    amplitude[0, 0] = 0.0

    phases = rng.uniform(0.0, 2.0 * np.pi, size=amplitude.shape)
    heights = fft.irfft2(amplitude * np.exp(1j * phases), s=(rows, cols))
    heights -= heights.mean()
    return heights / np.sqrt(np.mean(heights * heights))


def synth_surface(spec: SimSpec, seed: Optional[Seed] = None) -> HeightMap:
    """
    One fracture surface as a strip wide enough for k windows plus shift margins.

    Args:
        spec: Simulator settings
        seed: Overrides spec.seed

    Returns:
        HeightMap of shape (image_size + 2 m, strip_width + 2 m), RMS 1 um
    """
    margin = spec.misalign_px
    rows = spec.image_size + 2 * margin
    cols = spec.strip_width + 2 * margin
    rng = _rng(spec.seed if seed is None else seed)
    heights = spectral_synthesis(rows, cols, spec.pitch, spec.hurst, spec.grain_scale, rng)
    return HeightMap(heights, spec.pitch, meta={"synthetic": True, "hurst": spec.hurst})


def capture(surface: HeightMap, spec: SimSpec, rng: np.random.Generator, invert: bool = False) -> HeightMap:
    """Shifted, noisy capture of the strip; invert gives the mating fragment."""
    margin = spec.misalign_px
    dy, dx = rng.integers(-margin, margin + 1, size=2)
    strip = surface.crop(int(margin + dy), int(margin + dx), spec.image_size, spec.strip_width)
    heights = -strip.heights if invert else strip.heights
    if spec.noise_sigma > 0:
        heights = heights + rng.normal(0.0, spec.noise_sigma, size=heights.shape)
    return strip.with_heights(heights, shift=(int(dy), int(dx)))


def cut_windows(strip: HeightMap, spec: SimSpec) -> List[HeightMap]:
    """k windows of image_size x image_size at the SimSpec stride."""
    return [
        strip.crop(0, j * spec.stride, spec.image_size, spec.image_size, image_index=j)
        for j in range(spec.k)
    ]


def synth_pair(
    spec: SimSpec,
    matched: bool,
    seed: Optional[Seed] = None,
) -> Tuple[List[HeightMap], List[HeightMap]]:
    """
    Base and tip image sequences for one simulated comparison.

    Matched pairs observe one surface twice; non-matched pairs observe two
    independent surfaces. Both use the same capture model.
    """
    root = spec.seed if seed is None else seed
    root = list(root) if isinstance(root, (list, tuple)) else [int(root)]
    base_surface = synth_surface(spec, seed=root + [0])
    tip_surface = base_surface if matched else synth_surface(spec, seed=root + [1])
    rng = _rng(root + [2])
    base = cut_windows(capture(base_surface, spec, rng), spec)
    tip = cut_windows(capture(tip_surface, spec, rng, invert=True), spec)
    return base, tip


class SyntheticSet:
    """n simulated specimens, each captured once on the base and once on the tip side."""

    def __init__(
        self,
        name: str,
        spec: SimSpec,
        base_images: Dict[str, List[HeightMap]],
        tip_images: Dict[str, List[HeightMap]],
    ):
        self.name = name
        self.spec = spec
        self.base_images = base_images
        self.tip_images = tip_images

    @property
    def specimens(self) -> List[str]:
        return sorted(self.base_images)

    def pairs(self) -> List[Tuple[str, str, PairLabel]]:
        """All n^2 base/tip combinations; n matches and n(n-1) non-matches."""
        return [
            (base, tip, PairLabel.MATCH if base == tip else PairLabel.NON_MATCH)
            for base in self.specimens
            for tip in self.specimens
        ]

    def __len__(self) -> int:
        return len(self.base_images)

    def __repr__(self) -> str:
        return f"SyntheticSet({self.name}, n={len(self)}, k={self.spec.k})"


def simulate_set(spec: SimSpec, n_surfaces: int, name: str = "S") -> SyntheticSet:
    """Simulate n specimens named <name>01, <name>02, ..."""
    if n_surfaces < 1:
        raise ValueError("n_surfaces must be >= 1")
    key = _name_key(name)
    base_images: Dict[str, List[HeightMap]] = {}
    tip_images: Dict[str, List[HeightMap]] = {}
    for i in range(n_surfaces):
        specimen = f"{name}{i + 1:02d}"
        surface = synth_surface(spec, seed=[spec.seed, key, i, 0])
        rng = _rng([spec.seed, key, i, 1])
        base_images[specimen] = [
            image.with_heights(image.heights, specimen=specimen, side=Side.BASE.value)
            for image in cut_windows(capture(surface, spec, rng), spec)
        ]
        tip_images[specimen] = [
            image.with_heights(image.heights, specimen=specimen, side=Side.TIP.value)
            for image in cut_windows(capture(surface, spec, rng, invert=True), spec)
        ]
    logger.info("simulated set %s: %d specimens, k=%d, overlap=%g", name, n_surfaces, spec.k, spec.overlap)
    return SyntheticSet(name, spec, base_images, tip_images)
