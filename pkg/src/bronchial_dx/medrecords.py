"""Optional pulmonary test values: validation, flagged encoding, findings.

Every report field is optional.  Encoding emits a (presence flag,
normalized value) pair per field so a classifier can tell "absent"
from "measured zero".  Discretization turns the continuous values into
named findings for the associative memory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields as dataclass_fields
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Literal, Mapping

import numpy as np

from .errors import ConfigError, ValidationError

# Encoding order; changing it changes the meaning of every stored vector.
FIELD_ORDER = (
    "fvc_l",
    "fev1_l",
    "fef_l_s",
    "fif_l_s",
    "mvv_l_min",
    "lung_volume_l",
    "airway_resistance_kpa_s_l",
    "ios_resistance_kpa_s_l",
    "ios_reactance_kpa_s_l",
)

# Only reactance is a signed quantity; everything else must be > 0.
_SIGNED_FIELDS = frozenset({"ios_reactance_kpa_s_l"})

ENCODED_SLOTS = 2 * len(FIELD_ORDER)

REPORT_FINDING_IDS = ("fev1_fvc_low", "airway_resistance_high", "ios_reactance_low")
IMAGING_FINDING_IDS = ("roi_texture_heterogeneous", "roi_low_solidity")


@dataclass(frozen=True)
class MedicalReport:
    fvc_l: float | None = None
    fev1_l: float | None = None
    fef_l_s: float | None = None
    fif_l_s: float | None = None
    mvv_l_min: float | None = None
    lung_volume_l: float | None = None
    airway_resistance_kpa_s_l: float | None = None
    ios_resistance_kpa_s_l: float | None = None
    ios_reactance_kpa_s_l: float | None = None

    def present_fields(self) -> tuple[str, ...]:
        return tuple(f for f in FIELD_ORDER if getattr(self, f) is not None)

    def is_empty(self) -> bool:
        return not self.present_fields()


assert tuple(f.name for f in dataclass_fields(MedicalReport)) == FIELD_ORDER


@dataclass(frozen=True)
class ReferenceRange:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError("reference range bounds must be finite")
        if self.lo >= self.hi:
            raise ConfigError(f"reference range needs lo < hi, got [{self.lo}, {self.hi}]")

    def normalize(self, value: float) -> float:
        """Map to [0, 1], clamping values outside the band."""
        return min(1.0, max(0.0, (value - self.lo) / (self.hi - self.lo)))

    def denormalize(self, unit: float) -> float:
        return self.lo + unit * (self.hi - self.lo)


def _ranges_from_payload(payload: Mapping[str, Mapping[str, float]]) -> dict[str, ReferenceRange]:
    unknown = sorted(set(payload) - set(FIELD_ORDER))
    if unknown:
        raise ConfigError(f"reference ranges for unknown fields: {unknown}")
    missing = sorted(set(FIELD_ORDER) - set(payload))
    if missing:
        raise ConfigError(f"reference ranges missing fields: {missing}")
    return {
        name: ReferenceRange(lo=float(entry["lo"]), hi=float(entry["hi"]))
        for name, entry in payload.items()
    }


@lru_cache(maxsize=None)
def default_ranges() -> dict[str, ReferenceRange]:
    text = resources.files("bronchial_dx.data").joinpath("reference_ranges.json").read_text(
        encoding="utf-8"
    )
    return _ranges_from_payload(json.loads(text))


def load_reference_ranges(path: str | Path) -> dict[str, ReferenceRange]:
    return _ranges_from_payload(json.loads(Path(path).read_text(encoding="utf-8")))


def validate_report(raw: Mapping[str, object]) -> MedicalReport:
    """Check types, signs and internal consistency of a raw value map.

    Absent keys (or explicit nulls) mean the test was not taken; that
    is always legal.  Errors carry the offending field name.
    """
    unknown = sorted(set(raw) - set(FIELD_ORDER))
    if unknown:
        raise ValidationError(f"unknown report fields: {unknown}", field=unknown[0])
    values: dict[str, float | None] = {}
    for name in FIELD_ORDER:
        value = raw.get(name)
        if value is None:
            values[name] = None
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{name} must be a number, got {value!r}", field=name)
        value = float(value)
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite", field=name)
        if name not in _SIGNED_FIELDS and value <= 0:
            raise ValidationError(f"{name} must be positive, got {value}", field=name)
        values[name] = value
    fvc, fev1 = values["fvc_l"], values["fev1_l"]
    if fvc is not None and fev1 is not None and fev1 > fvc:
        raise ValidationError(
            f"fev1 exceeds fvc ({fev1} > {fvc})", field="fev1_l"
        )
    return MedicalReport(**values)


def encode_report(
    report: MedicalReport, ranges: Mapping[str, ReferenceRange] | None = None
) -> np.ndarray:
    """Encode into 18 slots: a (flag, normalized value) pair per field."""
    if ranges is None:
        ranges = default_ranges()
    out = np.zeros(ENCODED_SLOTS, dtype=np.float64)
    for index, name in enumerate(FIELD_ORDER):
        value = getattr(report, name)
        if value is None:
            continue
        out[2 * index] = 1.0
        out[2 * index + 1] = ranges[name].normalize(value)
    return out


def decode_report(
    block: np.ndarray, ranges: Mapping[str, ReferenceRange] | None = None
) -> MedicalReport:
    """Invert encode_report for slots produced from in-range values.

    Clamped (out-of-band) inputs come back at the band edge; that is
    the best the unit-scaled slots can reconstruct.
    """
    if ranges is None:
        ranges = default_ranges()
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (ENCODED_SLOTS,):
        raise ValidationError(f"expected {ENCODED_SLOTS} slots, got {block.shape}")
    values: dict[str, float | None] = {}
    for index, name in enumerate(FIELD_ORDER):
        if block[2 * index] > 0.5:
            values[name] = ranges[name].denormalize(float(block[2 * index + 1]))
        else:
            values[name] = None
    return MedicalReport(**values)


FindingSource = Literal["questionnaire", "report", "imaging"]


@dataclass(frozen=True)
class Finding:
    """A named categorical observation feeding the associative memory."""

    id: str
    source: FindingSource


@dataclass(frozen=True)
class FindingThresholds:
    """Cut-points for turning report values into findings.

    Defaults follow common clinical conventions; all overridable.
    """

    fev1_fvc_ratio: float = 0.70
    airway_resistance_kpa_s_l: float = 0.3
    ios_reactance_kpa_s_l: float = -0.2


DEFAULT_THRESHOLDS = FindingThresholds()


def discretize_findings(
    report: MedicalReport, thresholds: FindingThresholds = DEFAULT_THRESHOLDS
) -> list[Finding]:
    """Threshold findings from a validated report; absent fields emit nothing."""
    out: list[Finding] = []
    if report.fvc_l is not None and report.fev1_l is not None:
        if report.fev1_l / report.fvc_l < thresholds.fev1_fvc_ratio:
            out.append(Finding("fev1_fvc_low", "report"))
    if report.airway_resistance_kpa_s_l is not None:
        if report.airway_resistance_kpa_s_l > thresholds.airway_resistance_kpa_s_l:
            out.append(Finding("airway_resistance_high", "report"))
    if report.ios_reactance_kpa_s_l is not None:
        if report.ios_reactance_kpa_s_l < thresholds.ios_reactance_kpa_s_l:
            out.append(Finding("ios_reactance_low", "report"))
    return out


@dataclass(frozen=True)
class ImagingCuts:
    """Cut-points for turning ROI texture features into findings."""

    homogeneity: float = 0.6
    solidity: float = 0.9


DEFAULT_IMAGING_CUTS = ImagingCuts()


def discretize_imaging(features, cuts: ImagingCuts = DEFAULT_IMAGING_CUTS) -> list[Finding]:
    """Findings from ROI features (anything exposing homogeneity/solidity)."""
    out: list[Finding] = []
    if features.homogeneity < cuts.homogeneity:
        out.append(Finding("roi_texture_heterogeneous", "imaging"))
    if features.solidity < cuts.solidity:
        out.append(Finding("roi_low_solidity", "imaging"))
    return out
