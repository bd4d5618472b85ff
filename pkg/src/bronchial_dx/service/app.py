"""HTTP facade over the screening pipeline.

One JSON API: questionnaire definitions out, case payloads in,
per-disease probabilities back.  Every diagnosis is persisted to the
append-only case store; feedback carrying a confirmed label folds the
case into the association memory on the spot.
"""

from __future__ import annotations

import base64
import binascii
import io
import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field, StrictBool, StrictInt, StrictStr

from ..baselines import DecisionTree, MlpModel, NaiveBayesModel, hybrid_predict
from ..cdamm import InconclusivePolicy, classify
from ..cohort import (
    build_dataset,
    generate,
    load_cohort_config,
    load_default_config,
    load_full_config,
    read_dataset,
    split,
)
from ..errors import ConfigError, ValidationError
from ..evaluation import ALGORITHMS, evaluate_algorithm
from ..imaging import GrayImage, extract_features
from ..medrecords import validate_report
from ..pipeline import CaseInput, encode_case, extract_signs
from .store import CaseStore, DuplicateFeedbackError, UnknownCaseError

SERVING_ALGORITHMS = ("cdamm", "mlp", "pso", "c45bn")
_MODEL_FILES = {"mlp": "mlp.json", "pso": "pso.json", "c45bn": "c45bn.json"}


@dataclass(frozen=True)
class ServiceSettings:
    """Runtime knobs, every one overridable through BRONCHIAL_DX_* vars."""

    data_dir: Path = Path("service-data")
    model_dir: Path | None = None
    static_dir: Path | None = None
    min_top: float = 0.5
    min_gap: float = 0.1
    allow_origins: tuple[str, ...] = ("*",)

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "ServiceSettings":
        env = dict(os.environ if env is None else env)
        kwargs: dict[str, Any] = {}
        if "BRONCHIAL_DX_DATA_DIR" in env:
            kwargs["data_dir"] = Path(env["BRONCHIAL_DX_DATA_DIR"])
        if "BRONCHIAL_DX_MODEL_DIR" in env:
            kwargs["model_dir"] = Path(env["BRONCHIAL_DX_MODEL_DIR"])
        if "BRONCHIAL_DX_STATIC_DIR" in env:
            kwargs["static_dir"] = Path(env["BRONCHIAL_DX_STATIC_DIR"])
        try:
            if "BRONCHIAL_DX_MIN_TOP" in env:
                kwargs["min_top"] = float(env["BRONCHIAL_DX_MIN_TOP"])
            if "BRONCHIAL_DX_MIN_GAP" in env:
                kwargs["min_gap"] = float(env["BRONCHIAL_DX_MIN_GAP"])
        except ValueError as exc:
            raise ConfigError(f"policy threshold overrides must be numbers: {exc}") from exc
        return cls(**kwargs)

    @property
    def policy(self) -> InconclusivePolicy:
        return InconclusivePolicy(min_top=self.min_top, min_gap=self.min_gap)


@lru_cache(maxsize=None)
def _packaged_json(filename: str) -> dict:
    text = resources.files("bronchial_dx.data").joinpath(filename).read_text(encoding="utf-8")
    return json.loads(text)


def default_disease_doc() -> dict:
    """The curated multi-disease association document the service boots from."""
    return _packaged_json("disease_db.json")


class DiagnoseRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    responses: dict[str, StrictBool]
    professional_responses: dict[str, StrictBool] | None = None
    report: dict[str, Any] | None = None
    imaging_features: list[float] | None = None
    image: StrictStr | None = None  # base64-encoded PGM or PNG bytes
    algorithm: Literal["cdamm", "mlp", "pso", "c45bn"] = "cdamm"


class FeedbackRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rating: StrictInt = Field(ge=1, le=5)
    confirmed_label: StrictStr | None = None
    comment: StrictStr | None = None


class EvaluateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    algorithm: Literal["cdamm", "mlp", "pso", "c45bn", "threshold"] = "cdamm"
    config: Literal["default", "full"] = "default"
    dataset_dir: StrictStr | None = None
    size: int | None = Field(default=None, ge=4)
    seed: int | None = None
    train_fraction: float = Field(default=0.6, gt=0.0, lt=1.0)


def _decode_image(encoded: str) -> np.ndarray:
    """Base64 bytes -> unit-scaled imaging feature vector."""
    try:
        blob = base64.b64decode(encoded, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ValidationError(f"image is not valid base64: {exc}", field="image") from exc
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(io.BytesIO(blob)) as im:
            pixels = np.asarray(im.convert("L"), dtype=np.float64)
    except UnidentifiedImageError as exc:
        raise ValidationError("image bytes are not a readable image", field="image") from exc
    return extract_features(GrayImage(pixels=pixels)).unit_scaled()


def _case_from_request(body: DiagnoseRequest) -> CaseInput:
    if body.image is not None and body.imaging_features is not None:
        raise ValidationError("send either imaging_features or image, not both", field="image")
    features = None
    if body.imaging_features is not None:
        features = np.asarray(body.imaging_features, dtype=np.float64)
    elif body.image is not None:
        features = _decode_image(body.image)
    report = validate_report(body.report) if body.report is not None else None
    return CaseInput(
        core_responses=body.responses,
        professional_responses=body.professional_responses,
        report=report,
        imaging_features=features,
    )


class _ModelShelf:
    """Lazy loader for serialized baseline models in the model directory."""

    def __init__(self, model_dir: Path | None) -> None:
        self.model_dir = model_dir
        self._loaded: dict[str, Any] = {}

    def get(self, algorithm: str):
        if algorithm in self._loaded:
            return self._loaded[algorithm]
        if self.model_dir is None:
            return None
        path = self.model_dir / _MODEL_FILES[algorithm]
        if not path.exists():
            return None
        doc = json.loads(path.read_text(encoding="utf-8"))
        if algorithm in ("mlp", "pso"):
            model = MlpModel.from_doc(doc)
        else:
            model = (DecisionTree.from_doc(doc["tree"]), NaiveBayesModel.from_doc(doc["bayes"]))
        self._loaded[algorithm] = model
        return model


def _model_diagnosis(shelf: _ModelShelf, algorithm: str, vector: np.ndarray) -> dict | None:
    model = shelf.get(algorithm)
    if model is None:
        return None
    if algorithm == "c45bn":
        tree, bayes = model
        probabilities = hybrid_predict(tree, bayes, vector).probabilities
    else:
        probabilities = model.predict_proba(vector)
    top = max(probabilities, key=lambda name: probabilities[name])
    verdict = "positive" if top == "asthma" else "negative"
    return {"probabilities": dict(probabilities), "verdict": verdict, "top": top}


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings.from_env()
    store = CaseStore(settings.data_dir, base_doc=default_disease_doc())
    shelf = _ModelShelf(settings.model_dir)
    policy = settings.policy

    app = FastAPI(title="bronchial-dx", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.state.settings = settings
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(settings.allow_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ValidationError)
    async def _on_validation_error(request: Request, exc: ValidationError):
        body: dict[str, Any] = {"detail": str(exc)}
        if getattr(exc, "field", None):
            body["field"] = exc.field
        return JSONResponse(status_code=422, content=body)

    @app.exception_handler(UnknownCaseError)
    async def _on_unknown_case(request: Request, exc: UnknownCaseError):
        return JSONResponse(status_code=404, content={"detail": f"no case {exc.args[0]!r}"})

    @app.exception_handler(DuplicateFeedbackError)
    async def _on_duplicate_feedback(request: Request, exc: DuplicateFeedbackError):
        return JSONResponse(
            status_code=409,
            content={"detail": f"case {exc.args[0]!r} already has feedback; it is immutable"},
        )

    @app.get("/api/health")
    def health() -> dict:
        return {
            "status": "ok",
            "model_version": store.model_version,
            "cases": store.case_count,
            "diseases": list(store.memory.diseases.ids),
            "algorithms": list(SERVING_ALGORITHMS),
        }

    @app.get("/api/questionnaire")
    def questionnaire() -> dict:
        return _packaged_json("core_questionnaire.json")

    @app.get("/api/questionnaire/professional")
    def questionnaire_professional() -> dict:
        return _packaged_json("professional_questionnaire.json")

    @app.post("/api/diagnose")
    def diagnose(body: DiagnoseRequest) -> dict:
        case = _case_from_request(body)
        vector = encode_case(case).values
        signs = extract_signs(case)
        if body.algorithm == "cdamm":
            result = classify(store.memory, signs, policy=policy, positive_disease="asthma")
            diagnosis = {
                "probabilities": {k: float(v) for k, v in result.probabilities.items()},
                "verdict": result.verdict,
                "top": result.top,
            }
        else:
            diagnosis = _model_diagnosis(shelf, body.algorithm, vector)
            if diagnosis is None:
                raise HTTPException(
                    status_code=503,
                    detail=(
                        f"model {body.algorithm!r} is not available; train one with "
                        "the evaluate CLI and point the service at its directory"
                    ),
                )
        payload = {
            "responses": dict(body.responses),
            "professional_responses": (
                dict(body.professional_responses) if body.professional_responses is not None else None
            ),
            "report": dict(body.report) if body.report is not None else None,
            "imaging_features": (
                [float(v) for v in case.imaging_features] if case.imaging_features is not None else None
            ),
        }
        record = store.add_case(
            payload=payload, signs=signs, diagnosis=diagnosis, algorithm=body.algorithm
        )
        return {
            "case_id": record.case_id,
            "algorithm": record.algorithm,
            "model_version": store.model_version,
            "signs": list(record.signs),
            **diagnosis,
        }

    @app.get("/api/cases/{case_id}")
    def get_case(case_id: str) -> dict:
        return store.get_case(case_id).to_doc()

    @app.post("/api/cases/{case_id}/feedback")
    def post_feedback(case_id: str, body: FeedbackRequest) -> dict:
        record = store.add_feedback(
            case_id,
            rating=body.rating,
            confirmed_label=body.confirmed_label,
            comment=body.comment,
        )
        return {
            "case_id": record.case_id,
            "feedback": record.feedback,
            "learned": body.confirmed_label is not None,
            "model_version": store.model_version,
        }

    @app.post("/api/evaluate")
    def evaluate(body: EvaluateRequest) -> dict:
        if body.dataset_dir is not None:
            bundle = read_dataset(body.dataset_dir)
            train, test = bundle.train, bundle.test
        else:
            config = load_full_config() if body.config == "full" else load_default_config()
            records = generate(config, size=body.size, seed=body.seed)
            seed = config.seed if body.seed is None else body.seed
            train_records, test_records = split(records, body.train_fraction, seed)
            train, test = build_dataset(train_records), build_dataset(test_records)
        result = evaluate_algorithm(body.algorithm, train, test, policy=policy)
        return result.as_dict()

    static_dir = settings.static_dir
    if static_dir is None:
        bundled = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        static_dir = bundled if bundled.is_dir() else None
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="frontend")

    return app
