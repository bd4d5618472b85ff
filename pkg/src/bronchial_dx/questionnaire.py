"""Weighted yes/no questionnaires and their score arithmetic.

A questionnaire is an ordered list of question groups.  Each group
carries an integer priority factor; answering yes to any question in
the group earns that factor toward the total score.  Expanding the
answers into a bit matrix gives every question a run of slots sized by
its factor, so high-priority answers occupy proportionally more of the
vector and the vector sum always equals the score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ValidationError


@dataclass(frozen=True)
class Question:
    """Single yes/no item. ``parent`` gates follow-up questions."""

    id: str
    text: str
    parent: str | None = None


@dataclass(frozen=True)
class QuestionGroup:
    priority_factor: int
    questions: tuple[Question, ...]

    @property
    def size(self) -> int:
        return len(self.questions)

    @property
    def capacity(self) -> int:
        """Slots this group occupies in the expanded matrix."""
        return self.priority_factor * len(self.questions)


@dataclass(frozen=True)
class QuestionnaireDefinition:
    """Ordered groups plus optional named subscore index sets.

    Subscore members may reference questions from a different
    questionnaire; they are resolved when scores are computed, not at
    load time.
    """

    name: str
    version: int
    groups: tuple[QuestionGroup, ...]
    subscores: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("questionnaire name must be non-empty")
        if not self.groups:
            raise ConfigError(f"questionnaire {self.name!r} has no groups")
        by_id: dict[str, tuple[Question, int]] = {}
        for group in self.groups:
            if not isinstance(group.priority_factor, int) or group.priority_factor <= 0:
                raise ConfigError(
                    f"questionnaire {self.name!r}: priority factor must be a "
                    f"positive integer, got {group.priority_factor!r}"
                )
            if not group.questions:
                raise ConfigError(f"questionnaire {self.name!r} has an empty group")
            for question in group.questions:
                if question.id in by_id:
                    raise ConfigError(
                        f"questionnaire {self.name!r}: duplicate question id {question.id!r}"
                    )
                by_id[question.id] = (question, group.priority_factor)
        for question, _ in by_id.values():
            if question.parent is None:
                continue
            if question.parent not in by_id:
                raise ConfigError(
                    f"question {question.id!r} gates on unknown parent {question.parent!r}"
                )
            # Walk the parent chain; revisiting a node means a gating loop.
            seen = {question.id}
            cursor = question.parent
            while cursor is not None:
                if cursor in seen:
                    raise ConfigError(f"gating cycle through question {question.id!r}")
                seen.add(cursor)
                cursor = by_id[cursor][0].parent
        for name, members in self.subscores.items():
            if len(set(members)) != len(members):
                raise ConfigError(f"subscore {name!r} lists a member twice")
        object.__setattr__(self, "_by_id", by_id)

    def __contains__(self, question_id: object) -> bool:
        return question_id in self._by_id  # type: ignore[attr-defined]

    @property
    def capacity(self) -> int:
        return sum(group.capacity for group in self.groups)

    def question_ids(self) -> tuple[str, ...]:
        return tuple(q.id for q, _ in self.iter_questions())

    def iter_questions(self) -> Iterator[tuple[Question, int]]:
        """Yield (question, priority factor) in layout order."""
        for group in self.groups:
            for question in group.questions:
                yield question, group.priority_factor

    def factor_of(self, question_id: str) -> int:
        try:
            return self._by_id[question_id][1]  # type: ignore[attr-defined]
        except KeyError:
            raise ValidationError(f"unknown question id {question_id!r}", field=question_id) from None

    def question(self, question_id: str) -> Question:
        try:
            return self._by_id[question_id][0]  # type: ignore[attr-defined]
        except KeyError:
            raise ValidationError(f"unknown question id {question_id!r}", field=question_id) from None

    def positions(self) -> dict[str, tuple[int, int]]:
        """Map each question id to its half-open slot range.

        A question in group p at in-group index q (both 0-based) starts
        at the combined capacity of the earlier groups plus q times its
        own group's factor.
        """
        out: dict[str, tuple[int, int]] = {}
        offset = 0
        for group in self.groups:
            for index, question in enumerate(group.questions):
                start = offset + group.priority_factor * index
                out[question.id] = (start, start + group.priority_factor)
            offset += group.capacity
        return out

    def position_of(self, question_id: str) -> tuple[int, int]:
        try:
            return self.positions()[question_id]
        except KeyError:
            raise ValidationError(f"unknown question id {question_id!r}", field=question_id) from None


def normalize_responses(
    definition: QuestionnaireDefinition,
    responses: Mapping[str, object],
    *,
    strict: bool = True,
) -> dict[str, bool]:
    """Produce a complete id -> bool map for one questionnaire.

    Missing answers default to no.  A yes on a gated question only
    stands if every ancestor in its parent chain is also yes.  Unknown
    ids raise unless ``strict`` is off (useful when splitting a merged
    payload across questionnaires).
    """
    unknown = sorted(k for k in responses if k not in definition)
    if unknown and strict:
        raise ValidationError(f"unknown question ids: {unknown}", field=unknown[0])
    raw = {qid: bool(responses.get(qid, False)) for qid in definition.question_ids()}
    memo: dict[str, bool] = {}

    def effective(qid: str) -> bool:
        if qid not in memo:
            parent = definition.question(qid).parent
            memo[qid] = raw[qid] and (parent is None or effective(parent))
        return memo[qid]

    return {qid: effective(qid) for qid in raw}


def compute_score(
    definition: QuestionnaireDefinition, responses: Mapping[str, object]
) -> int:
    """Total score: the sum of priority factors over effective yes answers."""
    answers = normalize_responses(definition, responses)
    return sum(factor for q, factor in definition.iter_questions() if answers[q.id])


def expand_response_matrix(
    definition: QuestionnaireDefinition, responses: Mapping[str, object]
) -> np.ndarray:
    """Expand answers into the flat slot vector (one run per question)."""
    answers = normalize_responses(definition, responses)
    vec = np.zeros(definition.capacity, dtype=np.float64)
    for qid, (start, stop) in definition.positions().items():
        if answers[qid]:
            vec[start:stop] = 1.0
    return vec


def threshold_classify(score: float, threshold: float, capacity: int) -> bool:
    """Flag positive when the score reaches the given fraction of capacity."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must lie in [0, 1], got {threshold!r}")
    if capacity <= 0:
        raise ValidationError(f"capacity must be positive, got {capacity!r}")
    return score >= threshold * capacity


@dataclass(frozen=True)
class Subscore:
    """Named partial score over a fixed member set."""

    name: str
    value: int
    maximum: int
    members: tuple[str, ...]

    @property
    def fraction(self) -> float:
        return self.value / self.maximum


def compute_subscores(
    definitions: Sequence[QuestionnaireDefinition],
    responses: Mapping[str, object],
    subscores: Mapping[str, Sequence[str]] | None = None,
) -> dict[str, Subscore]:
    """Evaluate named subscores against one merged response payload.

    ``subscores`` defaults to the union of the definitions' own tables.
    Members are resolved across all given definitions, so a table may
    mix questions from different questionnaires.
    """
    factors: dict[str, int] = {}
    for definition in definitions:
        for question, factor in definition.iter_questions():
            if question.id in factors:
                raise ConfigError(f"question id {question.id!r} appears in two questionnaires")
            factors[question.id] = factor

    unknown = sorted(k for k in responses if k not in factors)
    if unknown:
        raise ValidationError(f"unknown question ids: {unknown}", field=unknown[0])

    answers: dict[str, bool] = {}
    for definition in definitions:
        subset = {k: v for k, v in responses.items() if k in definition}
        answers.update(normalize_responses(definition, subset))

    if subscores is None:
        merged: dict[str, Sequence[str]] = {}
        for definition in definitions:
            for name, members in definition.subscores.items():
                if name in merged:
                    raise ConfigError(f"subscore {name!r} defined twice")
                merged[name] = members
        subscores = merged

    out: dict[str, Subscore] = {}
    for name, members in subscores.items():
        missing = sorted(m for m in members if m not in factors)
        if missing:
            raise ConfigError(f"subscore {name!r} references unknown questions {missing}")
        value = sum(factors[m] for m in members if answers[m])
        maximum = sum(factors[m] for m in members)
        if maximum <= 0:
            raise ConfigError(f"subscore {name!r} has zero capacity")
        out[name] = Subscore(name=name, value=value, maximum=maximum, members=tuple(members))
    return out


def definition_from_dict(payload: Mapping[str, object]) -> QuestionnaireDefinition:
    try:
        name = payload["name"]
        version = payload["version"]
        raw_groups = payload["groups"]
    except KeyError as exc:
        raise ConfigError(f"questionnaire definition missing key {exc.args[0]!r}") from None
    groups = []
    for raw_group in raw_groups:  # type: ignore[union-attr]
        questions = tuple(
            Question(id=q["id"], text=q["text"], parent=q.get("parent"))
            for q in raw_group["questions"]
        )
        groups.append(
            QuestionGroup(priority_factor=raw_group["priority_factor"], questions=questions)
        )
    subscores = {
        str(sub_name): tuple(members)
        for sub_name, members in dict(payload.get("subscores", {})).items()  # type: ignore[arg-type]
    }
    return QuestionnaireDefinition(
        name=str(name), version=int(version), groups=tuple(groups), subscores=subscores
    )


def _load_packaged(filename: str) -> QuestionnaireDefinition:
    text = resources.files("bronchial_dx.data").joinpath(filename).read_text(encoding="utf-8")
    return definition_from_dict(json.loads(text))


@lru_cache(maxsize=None)
def load_core_definition() -> QuestionnaireDefinition:
    """The 24-question self-assessment shipped with the package."""
    return _load_packaged("core_questionnaire.json")


@lru_cache(maxsize=None)
def load_professional_definition() -> QuestionnaireDefinition:
    """The clinician-administered follow-up questionnaire."""
    return _load_packaged("professional_questionnaire.json")
