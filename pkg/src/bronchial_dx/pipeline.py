"""Case-level glue: raw inputs to input vector and to sign lists.

A case bundles whatever the patient supplied: self-assessment answers,
optional professional answers, optional test report, optional imaging
features.  Two views of the same case must always agree: the flat
input vector (for the numeric learners) and the categorical sign list
(for the associative memory).  ``signs_from_vector`` closes the loop by
recovering the sign list from an encoded vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import encoder
from .errors import ValidationError
from .imaging import FEATURE_ORDER
from .medrecords import (
    IMAGING_FINDING_IDS,
    REPORT_FINDING_IDS,
    MedicalReport,
    decode_report,
    discretize_findings,
    discretize_imaging,
    encode_report,
)
from .questionnaire import (
    QuestionnaireDefinition,
    compute_subscores,
    expand_response_matrix,
    load_core_definition,
    load_professional_definition,
    normalize_responses,
)

_HOMOGENEITY_INDEX = FEATURE_ORDER.index("homogeneity")
_SOLIDITY_INDEX = FEATURE_ORDER.index("solidity")


@dataclass(frozen=True)
class _UnitRoi:
    """Adapter giving finding cuts access to unit-scaled feature slots."""

    homogeneity: float
    solidity: float


@dataclass(frozen=True, eq=False)
class CaseInput:
    """Everything a single screening case may carry.

    ``imaging_features`` is the unit-scaled 8-slot vector from
    ``FeatureExtraction.unit_scaled()``; pass None when no image was
    taken.
    """

    core_responses: Mapping[str, object]
    professional_responses: Mapping[str, object] | None = None
    report: MedicalReport | None = None
    imaging_features: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.imaging_features is not None:
            arr = np.asarray(self.imaging_features, dtype=np.float64)
            if arr.shape != (encoder.IMAGING_SLOTS,):
                raise ValidationError(
                    f"imaging features must have {encoder.IMAGING_SLOTS} slots, got {arr.shape}"
                )
            if not np.isfinite(arr).all():
                raise ValidationError("imaging features must be finite")
            object.__setattr__(self, "imaging_features", arr)


def _definitions() -> tuple[QuestionnaireDefinition, QuestionnaireDefinition]:
    return load_core_definition(), load_professional_definition()


def encode_case(case: CaseInput) -> encoder.ReflectiveInputMatrix:
    """Build the flat input vector for one case."""
    core_def, prof_def = _definitions()
    core_matrix = expand_response_matrix(core_def, case.core_responses)
    prof_matrix = None
    if case.professional_responses is not None:
        prof_matrix = expand_response_matrix(prof_def, case.professional_responses)
    merged: dict[str, object] = dict(case.core_responses)
    merged.update(case.professional_responses or {})
    subscores = compute_subscores([core_def, prof_def], merged)
    medical_block = encode_report(case.report) if case.report is not None else None
    return encoder.assemble_input(
        core_matrix=core_matrix,
        professional_matrix=prof_matrix,
        subscores=subscores,
        medical_block=medical_block,
        imaging_block=case.imaging_features,
    )


def extract_signs(case: CaseInput) -> list[str]:
    """Categorical observations for the associative memory, in layout order.

    Yes answers contribute their question ids; report and imaging
    values contribute their threshold finding ids.
    """
    core_def, prof_def = _definitions()
    signs: list[str] = []
    core_answers = normalize_responses(core_def, case.core_responses)
    signs.extend(q.id for q, _ in core_def.iter_questions() if core_answers[q.id])
    if case.professional_responses is not None:
        prof_answers = normalize_responses(prof_def, case.professional_responses)
        signs.extend(q.id for q, _ in prof_def.iter_questions() if prof_answers[q.id])
    if case.report is not None:
        signs.extend(f.id for f in discretize_findings(case.report))
    if case.imaging_features is not None:
        roi = _UnitRoi(
            homogeneity=float(case.imaging_features[_HOMOGENEITY_INDEX]),
            solidity=float(case.imaging_features[_SOLIDITY_INDEX]),
        )
        signs.extend(f.id for f in discretize_imaging(roi))
    return signs


def signs_from_vector(vector) -> list[str]:
    """Recover the sign list from an encoded vector.

    Exact for questionnaire segments.  Report findings re-apply the
    cuts to denormalized slot values, so values clamped at a band edge
    may differ from the raw report; in-band values round-trip.
    """
    matrix = (
        vector
        if isinstance(vector, encoder.ReflectiveInputMatrix)
        else encoder.ReflectiveInputMatrix(values=np.asarray(vector, dtype=np.float64))
    )
    core_def, prof_def = _definitions()
    signs: list[str] = []
    for definition, segment in ((core_def, matrix.core), (prof_def, matrix.professional)):
        for qid, (start, stop) in definition.positions().items():
            if segment[start:stop].max() > 0.5:
                signs.append(qid)
    report = decode_report(matrix.medical)
    signs.extend(f.id for f in discretize_findings(report))
    if matrix.imaging_flag > 0.5:
        roi = _UnitRoi(
            homogeneity=float(matrix.imaging[_HOMOGENEITY_INDEX]),
            solidity=float(matrix.imaging[_SOLIDITY_INDEX]),
        )
        signs.extend(f.id for f in discretize_imaging(roi))
    return signs


def sign_vocabulary() -> tuple[str, ...]:
    """Every sign id the pipeline can emit, in a stable order."""
    core_def, prof_def = _definitions()
    return (
        core_def.question_ids()
        + prof_def.question_ids()
        + REPORT_FINDING_IDS
        + IMAGING_FINDING_IDS
    )
