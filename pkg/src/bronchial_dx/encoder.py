"""Fixed-layout input vector shared by every classifier.

Layout (0-based slices of a 181-slot vector):

    [0:100]    expanded self-assessment answers (binary)
    [100:150]  expanded professional answers (binary)
    [150:154]  named subscores, each scaled by its own maximum
    [154:172]  medical block: 9 x (presence flag, normalized value)
    [172]      imaging presence flag
    [173:181]  eight unit-scaled region features

Optional blocks stay zero when absent, so the layout never shifts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .medrecords import ENCODED_SLOTS

CORE_SLOTS = 100
PROFESSIONAL_SLOTS = 50
SUBSCORE_ORDER = ("bronchial_obstruction", "pollutant_effect", "nocturnal", "exertional")
IMAGING_SLOTS = 8

CORE_SLICE = slice(0, 100)
PROFESSIONAL_SLICE = slice(100, 150)
SUBSCORE_SLICE = slice(150, 154)
MEDICAL_SLICE = slice(154, 172)
IMAGING_FLAG_SLOT = 172
IMAGING_SLICE = slice(173, 181)
TOTAL_SLOTS = 181


def _require_binary(segment: np.ndarray, label: str) -> None:
    if not np.isin(segment, (0.0, 1.0)).all():
        raise ValidationError(f"{label} segment must be binary")


@dataclass(frozen=True, eq=False)
class ReflectiveInputMatrix:
    """Immutable 181-slot feature vector with named views."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (TOTAL_SLOTS,):
            raise ValidationError(f"expected {TOTAL_SLOTS} slots, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("all slots must be finite")
        _require_binary(arr[CORE_SLICE], "core questionnaire")
        _require_binary(arr[PROFESSIONAL_SLICE], "professional questionnaire")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def core(self) -> np.ndarray:
        return self.values[CORE_SLICE]

    @property
    def professional(self) -> np.ndarray:
        return self.values[PROFESSIONAL_SLICE]

    @property
    def subscores(self) -> np.ndarray:
        return self.values[SUBSCORE_SLICE]

    @property
    def medical(self) -> np.ndarray:
        return self.values[MEDICAL_SLICE]

    @property
    def imaging_flag(self) -> float:
        return float(self.values[IMAGING_FLAG_SLOT])

    @property
    def imaging(self) -> np.ndarray:
        return self.values[IMAGING_SLICE]

    def as_list(self) -> list[float]:
        return [float(v) for v in self.values]


def assemble_input(
    core_matrix: np.ndarray,
    professional_matrix: np.ndarray | None = None,
    subscores: Mapping[str, object] | None = None,
    medical_block: np.ndarray | None = None,
    imaging_block: np.ndarray | None = None,
) -> ReflectiveInputMatrix:
    """Place the blocks into the fixed layout; absent blocks stay zero.

    ``subscores`` maps the four known names to either plain fractions
    or objects exposing a ``fraction`` attribute.  A present imaging
    block sets the presence flag.
    """
    core = np.asarray(core_matrix, dtype=np.float64)
    if core.shape != (CORE_SLOTS,):
        raise ValidationError(f"core matrix must have {CORE_SLOTS} slots, got {core.shape}")
    out = np.zeros(TOTAL_SLOTS, dtype=np.float64)
    out[CORE_SLICE] = core

    if professional_matrix is not None:
        prof = np.asarray(professional_matrix, dtype=np.float64)
        if prof.shape != (PROFESSIONAL_SLOTS,):
            raise ValidationError(
                f"professional matrix must have {PROFESSIONAL_SLOTS} slots, got {prof.shape}"
            )
        out[PROFESSIONAL_SLICE] = prof

    if subscores is not None:
        unknown = sorted(set(subscores) - set(SUBSCORE_ORDER))
        if unknown:
            raise ValidationError(f"unknown subscore names: {unknown}", field=unknown[0])
        for index, name in enumerate(SUBSCORE_ORDER):
            if name not in subscores:
                continue
            value = subscores[name]
            fraction = float(getattr(value, "fraction", value))
            if not 0.0 <= fraction <= 1.0:
                raise ValidationError(f"subscore {name} must lie in [0, 1], got {fraction}")
            out[SUBSCORE_SLICE.start + index] = fraction

    if medical_block is not None:
        med = np.asarray(medical_block, dtype=np.float64)
        if med.shape != (ENCODED_SLOTS,):
            raise ValidationError(f"medical block must have {ENCODED_SLOTS} slots, got {med.shape}")
        out[MEDICAL_SLICE] = med

    if imaging_block is not None:
        img = np.asarray(imaging_block, dtype=np.float64)
        if img.shape != (IMAGING_SLOTS,):
            raise ValidationError(f"imaging block must have {IMAGING_SLOTS} slots, got {img.shape}")
        out[IMAGING_FLAG_SLOT] = 1.0
        out[IMAGING_SLICE] = img

    return ReflectiveInputMatrix(values=out)
