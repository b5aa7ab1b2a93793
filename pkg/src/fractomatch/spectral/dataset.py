"""
Correlation dataset CSV.

One row per (pair, band, image): pair_id, label, band_lo, band_hi,
image_index, r, z. Lines starting with '#' are provenance comments.
"""

import csv
import io
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from fractomatch.errors import DatasetError
from fractomatch.models import PairLabel
from fractomatch.spectral.bands import BandPlan
from fractomatch.spectral.correlation import PairObservation, parse_pair_key

DATASET_COLUMNS = ["pair_id", "label", "band_lo", "band_hi", "image_index", "r", "z"]

PathLike = Union[str, Path]


def provenance_header(version: str, config_hash: str) -> str:
    return f"# fractomatch {version} config={config_hash}\n"


def write_dataset(
    observations: Iterable[PairObservation],
    path: PathLike,
    header: Optional[str] = None,
) -> int:
    """
    Write observations sorted by pair_id, band, image.

    Returns:
        Number of data rows written
    """
    ordered = sorted(observations, key=lambda obs: obs.key)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header:
            f.write(header)
        writer = csv.DictWriter(f, fieldnames=DATASET_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for obs in ordered:
            for i, (lo, hi) in enumerate(obs.band_plan.bands):
                for j in range(obs.shape[1]):
                    writer.writerow({
                        "pair_id": obs.key,
                        "label": obs.label.value,
                        "band_lo": repr(lo),
                        "band_hi": repr(hi),
                        "image_index": j,
                        "r": repr(float(obs.r[i, j])),
                        "z": repr(float(obs.z[i, j])),
                    })
                    count += 1
    return count


def read_dataset(path: PathLike) -> List[PairObservation]:
    """Read a dataset CSV back into PairObservations, in file order of first appearance."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        content = "".join(line for line in f if not line.startswith("#"))

    reader = csv.DictReader(io.StringIO(content))
    if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != DATASET_COLUMNS:
        raise DatasetError("Dataset header mismatch", {"path": str(path), "header": reader.fieldnames})

    groups: "OrderedDict[str, Dict]" = OrderedDict()
    for line_no, row in enumerate(reader, 2):
        try:
            key = row["pair_id"]
            band = (float(row["band_lo"]), float(row["band_hi"]))
            image = int(row["image_index"])
            r = float(row["r"])
            z = float(row["z"])
            label = PairLabel(row["label"])
        except (TypeError, ValueError) as e:
            raise DatasetError("Malformed dataset row", {"path": str(path), "line": line_no}) from e

        group = groups.setdefault(key, {"label": label, "cells": {}})
        if group["label"] != label:
            raise DatasetError("Pair has conflicting labels", {"pair_id": key})
        group["cells"][(band, image)] = (r, z)

    observations = []
    for key, group in groups.items():
        observations.append(_assemble(key, group["label"], group["cells"]))
    return observations


def _assemble(
    key: str,
    label: PairLabel,
    cells: Dict[Tuple[Tuple[float, float], int], Tuple[float, float]],
) -> PairObservation:
    bands = sorted({band for band, _ in cells})
    images = sorted({image for _, image in cells})
    if images != list(range(len(images))):
        raise DatasetError("Image indices must run 0..q-1", {"pair_id": key, "images": images})
    if len(cells) != len(bands) * len(images):
        raise DatasetError("Pair is missing (band, image) cells", {"pair_id": key})

    r = np.empty((len(bands), len(images)))
    z = np.empty_like(r)
    for i, band in enumerate(bands):
        for j in images:
            r[i, j], z[i, j] = cells[(band, j)]
    return PairObservation(z, parse_pair_key(key), label, BandPlan(bands=bands), r)


def split_by_label(observations: Iterable[PairObservation]) -> Tuple[List[PairObservation], List[PairObservation]]:
    """(matches, non-matches); unlabelled pairs are dropped."""
    matches, nonmatches = [], []
    for obs in observations:
        if obs.label == PairLabel.MATCH:
            matches.append(obs)
        elif obs.label == PairLabel.NON_MATCH:
            nonmatches.append(obs)
    return matches, nonmatches
