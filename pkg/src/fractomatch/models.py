"""
Shared enums and serialisable records for fractomatch.
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field


# Enums
class Side(str, Enum):
    BASE = "base"
    TIP = "tip"


class PairLabel(str, Enum):
    MATCH = "match"
    NON_MATCH = "non-match"
    UNKNOWN = "unknown"


class Decision(str, Enum):
    MATCH = "match"
    NON_MATCH = "non-match"


class HeightMapFormat(str, Enum):
    FHM1 = "fhm1"
    CSV = "csv"


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


# Records
class Diagnostic(BaseModel):
    """Outcome of one item in a batch command."""
    item: str
    ok: bool
    error_type: Optional[str] = None
    message: str = ""
    severity: Severity = Severity.LOW
    hint: Optional[str] = None


class PreprocessReport(BaseModel):
    """Per-file summary printed by the preprocess command."""
    source: str
    output: str
    rows: int
    cols: int
    mask_percent: float = Field(ge=0.0, le=100.0)
    rms_um: float = Field(ge=0.0)
    tilt_um_per_mm: float = Field(ge=0.0)
    spikes_replaced: int = Field(ge=0)


class ClassificationRecord(BaseModel):
    """One row of a classify report."""
    pair_id: str
    logodds: float
    posterior: float = Field(gt=0.0, lt=1.0)
    decision: Decision
    threshold: float
    label: PairLabel = PairLabel.UNKNOWN


class PairManifestEntry(BaseModel):
    """One base/tip pair in a correlate manifest."""
    pair_id: Optional[str] = None
    base_specimen: str
    tip_specimen: str
    label: PairLabel = PairLabel.UNKNOWN
    base: List[str]
    tip: List[str]

    def resolved_pair_id(self) -> str:
        return self.pair_id or f"{self.base_specimen}:{self.tip_specimen}"


class PairManifest(BaseModel):
    """Pairing manifest consumed by the correlate command."""
    pairs: List[PairManifestEntry] = Field(default_factory=list)
