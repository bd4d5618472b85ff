"""Synthetic patient cohorts: generation, splitting, and dataset files.

No clinical dataset ships with this package, so cohorts are drawn from a
declared generative model: per-group yes-probabilities for the two
questionnaires, normal distributions for lung-function values, and
normal distributions for scan features, all conditioned on the latent
label. Every record is forced to carry at least one label-exclusive
questionnaire answer so the association-memory classifier has a real
signal to learn, while the shared answers overlap heavily enough that a
bare score threshold stays mediocre.

Datasets persist as a file trio inside one directory: ``Asthma.set``
(JSON sign vocabulary and per-label sign associations), ``Asthma.data``
(training rows), and ``Asthma.test`` (test rows). Data rows hold the 181
input slots comma-separated, then the class label; ``?`` marks a slot
that is absent by its availability flag, and lines starting with ``|``
are comments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .baselines import LabeledDataset
from .cdamm import MEMORY_DOC_VERSION
from .encoder import IMAGING_FLAG_SLOT, IMAGING_SLICE, MEDICAL_SLICE, TOTAL_SLOTS
from .errors import ConfigError, ValidationError
from .imaging import FEATURE_ORDER
from .medrecords import FIELD_ORDER, MedicalReport, default_ranges
from .pipeline import CaseInput, encode_case, sign_vocabulary, signs_from_vector
from .questionnaire import (
    QuestionnaireDefinition,
    load_core_definition,
    load_professional_definition,
)

COHORT_CONFIG_VERSION = 1

ASTHMA_LABEL = "asthma"
HEALTHY_LABEL = "healthy"

SET_FILENAME = "Asthma.set"
DATA_FILENAME = "Asthma.data"
TEST_FILENAME = "Asthma.test"

_RATIO_FIELD = "fev1_ratio"
_DERIVED_IMAGING = ("convex_area", "equivalent_diameter")
_DRAWN_IMAGING = tuple(f for f in FEATURE_ORDER if f not in _DERIVED_IMAGING)

_FILE_HEADER = (
    "| synthetic cohort rows: 181 comma-separated input slots, then the class label",
    "| '?' marks a value slot absent by its availability flag",
)


@dataclass(frozen=True)
class ValueSpec:
    """Normal distribution for one generated quantity."""

    mean: float
    sd: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            raise ConfigError("distribution parameters must be finite")
        if self.sd <= 0:
            raise ConfigError("distribution sd must be positive")

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sd": self.sd}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ValueSpec":
        return cls(mean=float(doc["mean"]), sd=float(doc["sd"]))


def _check_probability(value: float, what: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0) or not math.isfinite(value):
        raise ConfigError(f"{what} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class ConditionProfile:
    """Generative parameters for one latent condition."""

    core_group_yes: tuple[float, ...]
    professional_group_yes: tuple[float, ...]
    question_yes: Mapping[str, float] = field(default_factory=dict)
    forced_yes: tuple[str, ...] = ()
    report_fields: Mapping[str, ValueSpec] = field(default_factory=dict)
    fev1_ratio: ValueSpec = ValueSpec(0.8, 0.05)
    imaging: Mapping[str, ValueSpec] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "core_group_yes",
            tuple(_check_probability(p, "group yes-probability") for p in self.core_group_yes),
        )
        object.__setattr__(
            self,
            "professional_group_yes",
            tuple(_check_probability(p, "group yes-probability") for p in self.professional_group_yes),
        )
        object.__setattr__(
            self,
            "question_yes",
            {
                str(k): _check_probability(p, f"yes-probability of {k!r}")
                for k, p in dict(self.question_yes).items()
            },
        )
        object.__setattr__(self, "forced_yes", tuple(str(q) for q in self.forced_yes))
        object.__setattr__(self, "report_fields", dict(self.report_fields))
        object.__setattr__(self, "imaging", dict(self.imaging))

    def to_dict(self) -> dict:
        return {
            "core_group_yes": list(self.core_group_yes),
            "professional_group_yes": list(self.professional_group_yes),
            "question_yes": dict(sorted(self.question_yes.items())),
            "forced_yes": list(self.forced_yes),
            "report": {
                "fields": {k: v.to_dict() for k, v in sorted(self.report_fields.items())},
                _RATIO_FIELD: self.fev1_ratio.to_dict(),
            },
            "imaging": {k: v.to_dict() for k, v in sorted(self.imaging.items())},
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ConditionProfile":
        report = doc.get("report", {})
        return cls(
            core_group_yes=tuple(doc["core_group_yes"]),
            professional_group_yes=tuple(doc["professional_group_yes"]),
            question_yes=dict(doc.get("question_yes", {})),
            forced_yes=tuple(doc.get("forced_yes", ())),
            report_fields={
                k: ValueSpec.from_dict(v) for k, v in report.get("fields", {}).items()
            },
            fev1_ratio=ValueSpec.from_dict(report.get(_RATIO_FIELD, {"mean": 0.8, "sd": 0.05})),
            imaging={k: ValueSpec.from_dict(v) for k, v in doc.get("imaging", {}).items()},
        )


@dataclass(frozen=True)
class CohortConfig:
    """Everything the generator needs, including its seed."""

    size: int
    asthma_prevalence: float
    seed: int
    professional_availability: float
    report_availability: float
    imaging_availability: float
    asthma: ConditionProfile
    healthy: ConditionProfile

    def __post_init__(self) -> None:
        if int(self.size) < 0:
            raise ConfigError("cohort size must be non-negative")
        object.__setattr__(self, "size", int(self.size))
        prevalence = float(self.asthma_prevalence)
        if not 0.0 < prevalence < 1.0:
            raise ConfigError("asthma prevalence must lie strictly between 0 and 1")
        object.__setattr__(self, "asthma_prevalence", prevalence)
        object.__setattr__(self, "seed", int(self.seed))
        for name in ("professional_availability", "report_availability", "imaging_availability"):
            object.__setattr__(self, name, _check_probability(getattr(self, name), name))
        self._validate_profiles()

    def _validate_profiles(self) -> None:
        core = load_core_definition()
        professional = load_professional_definition()
        known = set(core.question_ids()) | set(professional.question_ids())
        for label, profile in ((ASTHMA_LABEL, self.asthma), (HEALTHY_LABEL, self.healthy)):
            if len(profile.core_group_yes) != len(core.groups):
                raise ConfigError(
                    f"{label} profile needs {len(core.groups)} core group probabilities"
                )
            if len(profile.professional_group_yes) != len(professional.groups):
                raise ConfigError(
                    f"{label} profile needs {len(professional.groups)} professional group probabilities"
                )
            for qid in profile.question_yes:
                if qid not in known:
                    raise ConfigError(f"{label} profile overrides unknown question {qid!r}")
            for qid in profile.forced_yes:
                if qid not in core:
                    raise ConfigError(
                        f"{label} profile forces {qid!r}, which is not a core question"
                    )
            expected_fields = set(FIELD_ORDER) - {"fev1_l"}
            if profile.report_fields or self.report_availability > 0:
                if set(profile.report_fields) != expected_fields:
                    raise ConfigError(
                        f"{label} report distributions must cover exactly {sorted(expected_fields)}"
                    )
            if profile.imaging or self.imaging_availability > 0:
                if set(profile.imaging) != set(_DRAWN_IMAGING):
                    raise ConfigError(
                        f"{label} imaging distributions must cover exactly {sorted(_DRAWN_IMAGING)}"
                    )

    def to_dict(self) -> dict:
        return {
            "version": COHORT_CONFIG_VERSION,
            "size": self.size,
            "asthma_prevalence": self.asthma_prevalence,
            "seed": self.seed,
            "professional_availability": self.professional_availability,
            "report_availability": self.report_availability,
            "imaging_availability": self.imaging_availability,
            "profiles": {
                ASTHMA_LABEL: self.asthma.to_dict(),
                HEALTHY_LABEL: self.healthy.to_dict(),
            },
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CohortConfig":
        if doc.get("version") != COHORT_CONFIG_VERSION:
            raise ConfigError(f"unsupported cohort config version {doc.get('version')!r}")
        try:
            profiles = doc["profiles"]
            return cls(
                size=doc["size"],
                asthma_prevalence=doc["asthma_prevalence"],
                seed=doc["seed"],
                professional_availability=doc["professional_availability"],
                report_availability=doc["report_availability"],
                imaging_availability=doc["imaging_availability"],
                asthma=ConditionProfile.from_dict(profiles[ASTHMA_LABEL]),
                healthy=ConditionProfile.from_dict(profiles[HEALTHY_LABEL]),
            )
        except KeyError as exc:
            raise ConfigError(f"cohort config is missing {exc.args[0]!r}") from None


def load_cohort_config(path: str | Path) -> CohortConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return CohortConfig.from_dict(json.load(handle))


def _load_packaged_config(name: str) -> CohortConfig:
    text = resources.files("bronchial_dx.data").joinpath(name).read_text("utf-8")
    return CohortConfig.from_dict(json.loads(text))


def load_default_config() -> CohortConfig:
    """Questionnaire-focused cohort: no lung-function reports, no scans."""
    return _load_packaged_config("cohort_default.json")


def load_full_config() -> CohortConfig:
    """Balanced cohort with professional answers, reports, and scan features."""
    return _load_packaged_config("cohort_full.json")


@dataclass(frozen=True)
class PatientRecord:
    """Latent label plus the inputs the patient would submit."""

    label: str
    case: CaseInput

    def __post_init__(self) -> None:
        if not self.label or any(ch in self.label for ch in ",\n\r"):
            raise ValidationError(f"label {self.label!r} is not storable")


def _draw_responses(
    rng: np.random.Generator,
    definition: QuestionnaireDefinition,
    group_yes: Sequence[float],
    overrides: Mapping[str, float],
) -> dict[str, bool]:
    """One yes/no per question; a gated question is forced no under a no parent."""
    responses: dict[str, bool] = {}
    for index, group in enumerate(definition.groups):
        for question in group.questions:
            p = overrides.get(question.id, group_yes[index])
            yes = bool(rng.random() < p)
            if question.parent is not None and not responses.get(question.parent, False):
                yes = False
            responses[question.id] = yes
    return responses


def _apply_forced_yes(
    rng: np.random.Generator, responses: dict[str, bool], pool: Sequence[str]
) -> None:
    if not pool or any(responses.get(q, False) for q in pool):
        return
    responses[pool[int(rng.integers(len(pool)))]] = True


def _draw_report(rng: np.random.Generator, profile: ConditionProfile) -> MedicalReport:
    ranges = default_ranges()

    def clipped(spec: ValueSpec, field_name: str) -> float:
        band = ranges[field_name]
        return float(np.clip(rng.normal(spec.mean, spec.sd), band.lo, band.hi))

    values: dict[str, float] = {}
    values["fvc_l"] = clipped(profile.report_fields["fvc_l"], "fvc_l")
    ratio = float(np.clip(rng.normal(profile.fev1_ratio.mean, profile.fev1_ratio.sd), 0.3, 0.98))
    fev1_band = ranges["fev1_l"]
    values["fev1_l"] = float(
        min(np.clip(values["fvc_l"] * ratio, fev1_band.lo, fev1_band.hi), values["fvc_l"])
    )
    for field_name in FIELD_ORDER:
        if field_name in ("fvc_l", "fev1_l"):
            continue
        values[field_name] = clipped(profile.report_fields[field_name], field_name)
    return MedicalReport(**values)


def _draw_imaging(rng: np.random.Generator, profile: ConditionProfile) -> np.ndarray:
    draws = {
        name: float(np.clip(rng.normal(spec.mean, spec.sd), 0.0, 1.0))
        for name, spec in ((n, profile.imaging[n]) for n in _DRAWN_IMAGING)
    }
    area = max(draws["area"], 1e-4)
    solidity = max(draws["solidity"], 1e-3)
    convex_area = min(1.0, area / solidity)
    derived = {
        "area": area,
        "convex_area": convex_area,
        "equivalent_diameter": math.sqrt(area),
        "solidity": area / convex_area,
        "energy": draws["energy"],
        "contrast": draws["contrast"],
        "homogeneity": draws["homogeneity"],
        "eccentricity": draws["eccentricity"],
    }
    return np.array([derived[name] for name in FEATURE_ORDER])


def generate(config: CohortConfig, *, size: int | None = None, seed: int | None = None) -> list[PatientRecord]:
    """Draw a cohort; identical (config, size, seed) give identical output."""
    count = config.size if size is None else int(size)
    if count < 0:
        raise ConfigError("cohort size must be non-negative")
    rng = np.random.default_rng(config.seed if seed is None else int(seed))
    core = load_core_definition()
    professional = load_professional_definition()
    records: list[PatientRecord] = []
    for _ in range(count):
        is_asthma = bool(rng.random() < config.asthma_prevalence)
        label = ASTHMA_LABEL if is_asthma else HEALTHY_LABEL
        profile = config.asthma if is_asthma else config.healthy
        core_responses = _draw_responses(rng, core, profile.core_group_yes, profile.question_yes)
        _apply_forced_yes(rng, core_responses, profile.forced_yes)
        professional_responses = None
        if rng.random() < config.professional_availability:
            professional_responses = _draw_responses(
                rng, professional, profile.professional_group_yes, profile.question_yes
            )
        report = None
        if rng.random() < config.report_availability:
            report = _draw_report(rng, profile)
        imaging = None
        if rng.random() < config.imaging_availability:
            imaging = _draw_imaging(rng, profile)
        records.append(
            PatientRecord(
                label=label,
                case=CaseInput(
                    core_responses=core_responses,
                    professional_responses=professional_responses,
                    report=report,
                    imaging_features=imaging,
                ),
            )
        )
    return records


def split(
    records: Sequence[PatientRecord], train_fraction: float, seed: int
) -> tuple[list[PatientRecord], list[PatientRecord]]:
    """Label-stratified partition into train and test, disjoint and exhaustive."""
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError("train fraction must lie strictly between 0 and 1")
    by_label: dict[str, list[int]] = {}
    for index, record in enumerate(records):
        by_label.setdefault(record.label, []).append(index)
    labels = sorted(by_label)
    total_train = round(train_fraction * len(records))

    quotas = {label: train_fraction * len(by_label[label]) for label in labels}
    take = {label: math.floor(quotas[label]) for label in labels}
    leftover = total_train - sum(take.values())
    by_remainder = sorted(labels, key=lambda lb: (take[lb] - quotas[lb], lb))
    for label in by_remainder[: max(leftover, 0)]:
        take[label] += 1

    rng = np.random.default_rng(seed)
    train_indices: set[int] = set()
    for label in labels:
        pool = by_label[label]
        order = rng.permutation(len(pool))
        train_indices.update(pool[i] for i in order[: take[label]])
    train = [records[i] for i in range(len(records)) if i in train_indices]
    test = [records[i] for i in range(len(records)) if i not in train_indices]
    return train, test


def build_dataset(records: Iterable[PatientRecord]) -> LabeledDataset:
    """Encode every record into its input vector."""
    records = list(records)
    vectors = np.zeros((len(records), TOTAL_SLOTS))
    for row, record in enumerate(records):
        vectors[row] = encode_case(record.case).values
    return LabeledDataset(samples=vectors, labels=tuple(r.label for r in records))


def association_doc(train: LabeledDataset) -> dict:
    """Sign vocabulary plus per-label sign unions seen in the training rows."""
    associations: dict[str, set[str]] = {label: set() for label in train.classes}
    counts: dict[str, int] = {label: 0 for label in train.classes}
    for row, label in zip(train.samples, train.labels):
        associations[label].update(signs_from_vector(row))
        counts[label] += 1
    return {
        "version": MEMORY_DOC_VERSION,
        "diseases": list(train.classes),
        "signs": list(sign_vocabulary()),
        "associations": {label: sorted(signs) for label, signs in associations.items()},
        "case_counts": counts,
    }


def _format_row(vector: np.ndarray, label: str) -> str:
    if vector.shape != (TOTAL_SLOTS,):
        raise ValidationError(f"rows must have {TOTAL_SLOTS} slots, got {vector.shape}")
    tokens = [repr(float(v)) for v in vector]
    for flag_slot in range(MEDICAL_SLICE.start, MEDICAL_SLICE.stop, 2):
        if vector[flag_slot] == 0.0 and vector[flag_slot + 1] == 0.0:
            tokens[flag_slot + 1] = "?"
    if vector[IMAGING_FLAG_SLOT] == 0.0:
        for slot in range(IMAGING_SLICE.start, IMAGING_SLICE.stop):
            if vector[slot] == 0.0:
                tokens[slot] = "?"
    if not label or any(ch in label for ch in ",\n\r"):
        raise ValidationError(f"label {label!r} is not storable")
    return ",".join(tokens + [label])


def _serialize_rows(dataset: LabeledDataset) -> str:
    lines = list(_FILE_HEADER)
    for vector, label in zip(dataset.samples, dataset.labels):
        lines.append(_format_row(vector, label))
    return "\n".join(lines) + "\n"


def _parse_rows(text: str, filename: str) -> LabeledDataset:
    vectors: list[np.ndarray] = []
    labels: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("|"):
            continue
        tokens = line.split(",")
        if len(tokens) != TOTAL_SLOTS + 1:
            raise ValidationError(
                f"{filename} line {lineno}: expected {TOTAL_SLOTS + 1} fields, got {len(tokens)}"
            )
        values = np.zeros(TOTAL_SLOTS)
        for slot, token in enumerate(tokens[:-1]):
            if token == "?":
                continue
            try:
                values[slot] = float(token)
            except ValueError:
                raise ValidationError(
                    f"{filename} line {lineno}: slot {slot} holds {token!r}, not a number"
                ) from None
        if not np.isfinite(values).all():
            raise ValidationError(f"{filename} line {lineno}: non-finite value")
        label = tokens[-1]
        if not label:
            raise ValidationError(f"{filename} line {lineno}: empty class label")
        vectors.append(values)
        labels.append(label)
    samples = np.array(vectors) if vectors else np.zeros((0, TOTAL_SLOTS))
    return LabeledDataset(samples=samples, labels=tuple(labels))


@dataclass(frozen=True)
class DatasetBundle:
    """The three dataset files as one in-memory object."""

    train: LabeledDataset
    test: LabeledDataset
    set_doc: dict


def write_dataset(
    out_dir: str | Path,
    train: LabeledDataset,
    test: LabeledDataset,
    set_doc: dict | None = None,
) -> dict[str, str]:
    """Write the file trio; returns filename -> absolute path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = set_doc if set_doc is not None else association_doc(train)
    paths = {
        SET_FILENAME: out / SET_FILENAME,
        DATA_FILENAME: out / DATA_FILENAME,
        TEST_FILENAME: out / TEST_FILENAME,
    }
    paths[SET_FILENAME].write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    paths[DATA_FILENAME].write_text(_serialize_rows(train), encoding="utf-8")
    paths[TEST_FILENAME].write_text(_serialize_rows(test), encoding="utf-8")
    return {name: str(path.resolve()) for name, path in paths.items()}


def read_dataset(in_dir: str | Path) -> DatasetBundle:
    """Read the trio back; the inverse of write_dataset."""
    base = Path(in_dir)
    set_path = base / SET_FILENAME
    if not set_path.exists():
        raise ValidationError(f"missing {SET_FILENAME} in {base}")
    set_doc = json.loads(set_path.read_text(encoding="utf-8"))
    train = _parse_rows((base / DATA_FILENAME).read_text(encoding="utf-8"), DATA_FILENAME)
    test = _parse_rows((base / TEST_FILENAME).read_text(encoding="utf-8"), TEST_FILENAME)
    return DatasetBundle(train=train, test=test, set_doc=set_doc)


def generate_and_write(
    config: CohortConfig,
    out_dir: str | Path,
    *,
    train_fraction: float = 0.6,
    size: int | None = None,
    seed: int | None = None,
) -> dict:
    """Generate, split, and persist a cohort; returns the manifest."""
    records = generate(config, size=size, seed=seed)
    train_records, test_records = split(
        records, train_fraction, config.seed if seed is None else int(seed)
    )
    train = build_dataset(train_records)
    test = build_dataset(test_records)
    files = write_dataset(out_dir, train, test)

    def label_counts(ds: LabeledDataset) -> dict[str, int]:
        return {label: ds.labels.count(label) for label in ds.classes}

    manifest = {
        "version": COHORT_CONFIG_VERSION,
        "size": len(records),
        "seed": config.seed if seed is None else int(seed),
        "train_fraction": train_fraction,
        "counts": {"train": label_counts(train), "test": label_counts(test)},
        "files": files,
        "config": config.to_dict(),
    }
    manifest_path = Path(out_dir) / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    manifest["files"]["manifest.json"] = str(manifest_path.resolve())
    return manifest
