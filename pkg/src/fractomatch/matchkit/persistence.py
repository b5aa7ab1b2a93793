"""
Versioned JSON model files.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from fractomatch import __version__
from fractomatch.errors import DistributionError, ModelError, ModelFormatError
from fractomatch.matchkit.model import MatchModel
from fractomatch.mxdist.params import MxVtParams
from fractomatch.spectral.bands import BandPlan

FORMAT_VERSION = 1
# 17 significant digits with the decimal point kept; reads back bit-exact.
FLOAT_FORMAT = "#.17g"


class ClassParamsDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    M_row_means: List[float]
    Sigma: List[List[float]]
    rho: float


class ModelDocument(BaseModel):
    """On-disk form of a MatchModel."""
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    tool_version: str = __version__
    config_hash: Optional[str] = None
    p: int = Field(ge=1)
    q: int = Field(ge=2)
    nu: float = Field(ge=1.0)
    band_plan: BandPlan
    prior: float = Field(gt=0.0, lt=1.0)
    threshold: float
    match: ClassParamsDocument
    nonmatch: ClassParamsDocument
    provenance: Dict[str, Any] = Field(default_factory=dict)


def _class_document(params: MxVtParams) -> ClassParamsDocument:
    return ClassParamsDocument(
        M_row_means=[float(v) for v in params.row_means],
        Sigma=[[float(v) for v in row] for row in params.Sigma],
        rho=params.rho,
    )


def _class_params(doc: ClassParamsDocument, q: int, nu: float) -> MxVtParams:
    params = MxVtParams.from_row_means(doc.M_row_means, q, np.asarray(doc.Sigma), doc.rho, nu)
    if not params.is_anchored:
        raise ModelFormatError("Stored Sigma is not anchored at Sigma[0][0] = 1")
    return params


def model_to_document(model: MatchModel, config_hash: Optional[str] = None) -> ModelDocument:
    return ModelDocument(
        config_hash=config_hash,
        p=model.p,
        q=model.q,
        nu=model.nu,
        band_plan=model.band_plan,
        prior=model.prior_match,
        threshold=model.threshold_logodds,
        match=_class_document(model.match_params),
        nonmatch=_class_document(model.nonmatch_params),
        provenance=model.provenance,
    )


def document_to_model(doc: ModelDocument) -> MatchModel:
    try:
        match_params = _class_params(doc.match, doc.q, doc.nu)
        nonmatch_params = _class_params(doc.nonmatch, doc.q, doc.nu)
        if match_params.p != doc.p or nonmatch_params.p != doc.p:
            raise ModelFormatError("Stored parameters disagree with p", {"p": doc.p})
        return MatchModel(
            match_params,
            nonmatch_params,
            doc.band_plan,
            k=doc.q,
            prior_match=doc.prior,
            threshold_logodds=doc.threshold,
            provenance=doc.provenance,
        )
    except (DistributionError, ModelError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"Stored model is invalid: {e.message}", e.context) from e


def _render(value: Any, depth: int = 0) -> str:
    """JSON text with two-space indents and every finite float in FLOAT_FORMAT."""
    inner = "  " * (depth + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(key)}: {_render(item, depth + 1)}" for key, item in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * depth + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [f"{inner}{_render(item, depth + 1)}" for item in value]
        return "[\n" + ",\n".join(items) + "\n" + "  " * depth + "]"
    if isinstance(value, float) and math.isfinite(value):
        return format(value, FLOAT_FORMAT)
    return json.dumps(value)


def save_model(model: MatchModel, path: Union[str, Path], config_hash: Optional[str] = None) -> Path:
    """
    Write the model as JSON.

    Args:
        model: Model to store
        path: Destination file
        config_hash: Digest of the run configuration, kept with the tool version

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = model_to_document(model, config_hash).model_dump(mode="json")
    path.write_text(_render(document) + "\n", encoding="utf-8")
    return path


def load_model(path: Union[str, Path]) -> MatchModel:
    """
    Read a model file.

    Raises:
        ModelFormatError: unreadable JSON, unknown format_version or invalid content
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatError("Model file cannot be read", {"path": str(path)}) from e
    if not isinstance(raw, dict):
        raise ModelFormatError("Model file must hold a JSON object", {"path": str(path)})
    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError("Unknown model format_version", {"path": str(path), "format_version": version})
    try:
        doc = ModelDocument.model_validate(raw)
    except ValidationError as e:
        raise ModelFormatError(
            "Model file does not validate", {"path": str(path), "errors": e.error_count()}
        ) from e
    return document_to_model(doc)
