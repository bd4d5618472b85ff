"""HTTP service and persistence for the screening pipeline."""

from .app import (
    DiagnoseRequest,
    EvaluateRequest,
    FeedbackRequest,
    ServiceSettings,
    create_app,
    default_disease_doc,
)
from .store import (
    CASE_LOG,
    MEMORY_SNAPSHOT,
    CaseRecord,
    CaseStore,
    DuplicateFeedbackError,
    UnknownCaseError,
)

__all__ = [
    "CASE_LOG",
    "MEMORY_SNAPSHOT",
    "CaseRecord",
    "CaseStore",
    "DiagnoseRequest",
    "DuplicateFeedbackError",
    "EvaluateRequest",
    "FeedbackRequest",
    "ServiceSettings",
    "UnknownCaseError",
    "create_app",
    "default_disease_doc",
]
