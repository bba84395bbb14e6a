"""Keyword rules assigning each record an approximate gold tissue label.

The rules inspect only the canonical "tissue" field. Matching is
case-insensitive substring containment rather than word-boundary matching:
values like "lung-tumor" or "PBMCs" defeat tokenizers, so the wider rule is
deliberate. Rule order is significant; the first match wins.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional

from .records import MetadataRecord, canon


class TissueLabel(str, Enum):
    LUNG = "lung"
    LIVER = "liver"
    OVARY = "ovary"
    BLOOD = "blood"
    PLASMA = "plasma"
    LYMPH = "lymph"
    UNKNOWN = "unknown"


#: Ordered rules: first rule whose keyword occurs in the tissue value wins.
LABEL_RULES: tuple[tuple[tuple[str, ...], TissueLabel], ...] = (
    (("lung",), TissueLabel.LUNG),
    (("liver", "hcc"), TissueLabel.LIVER),
    (("ovary", "ovarian"), TissueLabel.OVARY),
    (("pbmc", "blood"), TissueLabel.BLOOD),
    (("plasma",), TissueLabel.PLASMA),
    (("lymph",), TissueLabel.LYMPH),
)


def assign_tissue_label(record: MetadataRecord) -> TissueLabel:
    """Label a record by its tissue value; total and deterministic."""
    value = record.lookup("tissue")
    if value is None or value == "" or canon(value) == "na":
        return TissueLabel.UNKNOWN
    hay = canon(value)
    for keywords, label in LABEL_RULES:
        if any(kw in hay for kw in keywords):
            return label
    return TissueLabel.UNKNOWN


#: Labels that are retrieval targets; plasma/lymph/unknown are not queried.
_QUERY_LABELS = {
    TissueLabel.LUNG: "lung",
    TissueLabel.LIVER: "liver",
    TissueLabel.OVARY: "ovary",
    TissueLabel.BLOOD: "blood",
}


def label_to_query_value(label: TissueLabel) -> Optional[str]:
    """Query value for a label, or None when the label is not a query target."""
    return _QUERY_LABELS.get(label)


def query_value_to_label(value: str) -> Optional[TissueLabel]:
    """Inverse of label_to_query_value over the four query targets."""
    wanted = canon(value)
    for label, query_value in _QUERY_LABELS.items():
        if query_value == wanted:
            return label
    return None
