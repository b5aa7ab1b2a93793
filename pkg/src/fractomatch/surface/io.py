"""
Height map import and export.

FHM1 binary layout (little-endian):
    b"FHM1" | u32 rows | u32 cols | f64 pitch_um | rows*cols f32 heights, row-major
NaN heights encode masked pixels.

CSV grids are rectangular comma-separated floats; blank or "nan" fields are
masked. The pitch is not stored in CSV and must be supplied by the caller.
"""

import csv
import logging
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from fractomatch.errors import GridShapeError, MalformedHeaderError, PitchError
from fractomatch.models import HeightMapFormat
from fractomatch.surface.heightmap import HeightMap

logger = logging.getLogger("fractomatch.surface")

FHM1_MAGIC = b"FHM1"
_HEADER = struct.Struct("<4sIId")

PathLike = Union[str, Path]


def detect_format(path: PathLike) -> HeightMapFormat:
    """Guess the format from the file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".txt"):
        return HeightMapFormat.CSV
    return HeightMapFormat.FHM1


def load_height_map(
    path: PathLike,
    format: Optional[HeightMapFormat] = None,
    pitch: Optional[float] = None,
) -> HeightMap:
    """
    Load a height map and validate every invariant.

    Args:
        path: File location
        format: FHM1 or CSV; guessed from the suffix when omitted
        pitch: Pixel pitch in um; required for CSV, ignored for FHM1

    Returns:
        A validated HeightMap with masked cells taken from NaN sentinels
    """
    path = Path(path)
    fmt = format or detect_format(path)
    if fmt == HeightMapFormat.CSV:
        heights = _read_csv_grid(path)
        if pitch is None:
            raise PitchError("CSV grids need an explicit pitch", {"path": str(path)})
        map_pitch = pitch
    else:
        heights, map_pitch = _read_fhm1(path)

    height_map = HeightMap(
        heights,
        map_pitch,
        meta={"source": str(path), "specimen": path.stem},
    )
    logger.debug("Loaded %s", height_map)
    return height_map


def save_height_map(height_map: HeightMap, path: PathLike) -> Path:
    """Write a map as FHM1 (or CSV when the suffix says so)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    heights = np.where(height_map.mask, height_map.heights, np.nan)

    if detect_format(path) == HeightMapFormat.CSV:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            for row in heights:
                writer.writerow(["nan" if np.isnan(v) else repr(float(v)) for v in row])
        return path

    header = _HEADER.pack(FHM1_MAGIC, height_map.rows, height_map.cols, height_map.pitch)
    with open(path, "wb") as f:
        f.write(header)
        f.write(heights.astype("<f4").tobytes(order="C"))
    return path


def _read_fhm1(path: Path) -> tuple:
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise MalformedHeaderError("File shorter than the FHM1 header", {"path": str(path)})

    magic, rows, cols, pitch = _HEADER.unpack_from(data)
    if magic != FHM1_MAGIC:
        raise MalformedHeaderError("Missing FHM1 magic bytes", {"path": str(path), "magic": magic})
    if not np.isfinite(pitch) or pitch <= 0:
        raise PitchError("Pixel pitch must be positive", {"path": str(path), "pitch": pitch})

    payload = data[_HEADER.size:]
    expected = rows * cols * 4
    if len(payload) != expected:
        raise GridShapeError(
            "Payload size does not match header dimensions",
            {"path": str(path), "rows": rows, "cols": cols, "bytes": len(payload)},
        )
    heights = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)
    return heights, float(pitch)


def _read_csv_grid(path: Path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        for line_no, row in enumerate(reader, 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([_parse_cell(cell) for cell in row])
            except ValueError as e:
                raise MalformedHeaderError(
                    "Unparseable CSV value", {"path": str(path), "line": line_no, "error": str(e)}
                ) from e

    if not rows:
        raise GridShapeError("Empty CSV grid", {"path": str(path)})
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise GridShapeError(
            "Non-rectangular CSV grid", {"path": str(path), "row_lengths": sorted(widths)}
        )
    return np.array(rows, dtype=np.float64)


def _parse_cell(cell: str) -> float:
    cell = cell.strip()
    if not cell or cell.lower() == "nan":
        return float("nan")
    return float(cell)
