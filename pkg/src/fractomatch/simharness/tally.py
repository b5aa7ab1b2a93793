"""
Match / non-match decision tallies.
"""

import csv
from pathlib import Path
from typing import Iterable, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from fractomatch.models import ClassificationRecord, Decision, PairLabel

TALLY_COLUMNS = ["model", "k", "false_pos", "false_neg", "true_pos", "true_neg", "true_match", "true_nonmatch"]


class TallyRow(BaseModel):
    """Decision counts for one (model, k) row."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: str
    k: int = Field(ge=1)
    false_pos: int = Field(ge=0)
    false_neg: int = Field(ge=0)
    true_pos: int = Field(ge=0)
    true_neg: int = Field(ge=0)
    true_match: int = Field(ge=0)
    true_nonmatch: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_sums(self) -> "TallyRow":
        if self.false_pos + self.true_neg != self.true_nonmatch:
            raise ValueError("false_pos + true_neg must equal true_nonmatch")
        if self.false_neg + self.true_pos != self.true_match:
            raise ValueError("false_neg + true_pos must equal true_match")
        return self

    @property
    def errors(self) -> int:
        return self.false_pos + self.false_neg


class Tally:
    """Mutable counter that becomes a TallyRow."""

    def __init__(self, model: str, k: int):
        self.model = model
        self.k = k
        self.false_pos = self.false_neg = self.true_pos = self.true_neg = 0

    def add(self, record: ClassificationRecord) -> None:
        said_match = record.decision == Decision.MATCH
        if record.label == PairLabel.MATCH:
            if said_match:
                self.true_pos += 1
            else:
                self.false_neg += 1
        elif record.label == PairLabel.NON_MATCH:
            if said_match:
                self.false_pos += 1
            else:
                self.true_neg += 1

    def extend(self, records: Iterable[ClassificationRecord]) -> "Tally":
        for record in records:
            self.add(record)
        return self

    def row(self) -> TallyRow:
        return TallyRow(
            model=self.model,
            k=self.k,
            false_pos=self.false_pos,
            false_neg=self.false_neg,
            true_pos=self.true_pos,
            true_neg=self.true_neg,
            true_match=self.true_pos + self.false_neg,
            true_nonmatch=self.false_pos + self.true_neg,
        )


class TallyTable:
    """Ordered tally rows; CSV in the model,k,false_pos,... layout."""

    def __init__(self, rows: Optional[Iterable[TallyRow]] = None):
        self.rows: List[TallyRow] = list(rows or [])

    def append(self, row: TallyRow) -> None:
        self.rows.append(row)

    def extend(self, other: "TallyTable") -> None:
        self.rows.extend(other.rows)

    def find(self, model: str, k: int) -> TallyRow:
        for row in self.rows:
            if row.model == model and row.k == k:
                return row
        raise KeyError((model, k))

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, path: Union[str, Path], header: Optional[str] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            if header:
                f.write(header)
            writer = csv.DictWriter(f, fieldnames=TALLY_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row.model_dump())
        return path
