"""
Classification report CSV.
"""

import csv
from pathlib import Path
from typing import Iterable, Optional, Union

from fractomatch.models import ClassificationRecord

REPORT_COLUMNS = ["pair_id", "logodds", "posterior", "decision", "threshold", "label"]


def format_record(record: ClassificationRecord) -> dict:
    """Fixed-precision text form of one record."""
    return {
        "pair_id": record.pair_id,
        "logodds": f"{record.logodds:.6f}",
        "posterior": f"{record.posterior:.6f}",
        "decision": record.decision.value,
        "threshold": f"{record.threshold:.6f}",
        "label": record.label.value,
    }


def write_report(
    records: Iterable[ClassificationRecord],
    path: Union[str, Path],
    header: Optional[str] = None,
) -> Path:
    """Write records sorted by pair_id."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header:
            f.write(header)
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in sorted(records, key=lambda r: r.pair_id):
            writer.writerow(format_record(record))
    return path
