"""
Height maps: loading, preprocessing and roughness statistics.
"""

from fractomatch.surface.heightmap import HeightMap
from fractomatch.surface.io import load_height_map, save_height_map
from fractomatch.surface.preprocess import despike, detrend_plane, height_map_stats
from fractomatch.surface.roughness import (
    RoughnessCurve,
    analyze_roughness,
    fit_self_affine,
    height_height_correlation,
)

__all__ = [
    "HeightMap",
    "load_height_map",
    "save_height_map",
    "detrend_plane",
    "despike",
    "height_map_stats",
    "RoughnessCurve",
    "height_height_correlation",
    "fit_self_affine",
    "analyze_roughness",
]
