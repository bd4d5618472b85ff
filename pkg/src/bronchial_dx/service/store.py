"""Append-only case store backing the diagnosis service.

Persistence is two files in one directory: ``memory.json``, a snapshot
of the association document the store booted from, and
``cases.ndjson``, one JSON event per line.  The snapshot is written
once and never rewritten; everything that happened since lives in the
log.  Startup therefore loads the snapshot and replays every event,
and the in-process memory always equals what a fresh replay produces.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Mapping

from ..cdamm import Memory, learn_case, memory_from_doc
from ..errors import ConfigError, ValidationError

MEMORY_SNAPSHOT = "memory.json"
CASE_LOG = "cases.ndjson"


class UnknownCaseError(KeyError):
    """No case with the requested id exists."""


class DuplicateFeedbackError(ValueError):
    """The case already carries feedback; it is immutable once set."""


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class CaseRecord:
    """One submitted case: input payload, derived signs, and the verdict.

    ``signs`` is persisted alongside the payload so a log replay never
    depends on re-running the encoder.
    """

    case_id: str
    created_at: str
    algorithm: str
    payload: dict
    signs: tuple[str, ...]
    diagnosis: dict
    feedback: dict | None = None

    def to_doc(self) -> dict:
        return {
            "case_id": self.case_id,
            "created_at": self.created_at,
            "algorithm": self.algorithm,
            "payload": self.payload,
            "signs": list(self.signs),
            "diagnosis": self.diagnosis,
            "feedback": self.feedback,
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "CaseRecord":
        return cls(
            case_id=str(doc["case_id"]),
            created_at=str(doc["created_at"]),
            algorithm=str(doc["algorithm"]),
            payload=dict(doc["payload"]),
            signs=tuple(doc["signs"]),
            diagnosis=dict(doc["diagnosis"]),
            feedback=dict(doc["feedback"]) if doc.get("feedback") else None,
        )


class CaseStore:
    """Event-sourced persistence with a single in-process memory.

    Writers (case appends, feedback learning) serialize through one
    lock; learning swaps in the new ``Memory`` returned by
    ``learn_case`` as the last step, so a concurrent reader sees either
    the old or the new memory, never a half-applied update.
    """

    def __init__(self, data_dir: str | Path, base_doc: Mapping | None = None) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        snapshot = self.data_dir / MEMORY_SNAPSHOT
        if snapshot.exists():
            self._base_doc = json.loads(snapshot.read_text())
        elif base_doc is not None:
            self._base_doc = json.loads(json.dumps(dict(base_doc)))
            snapshot.write_text(
                json.dumps(self._base_doc, indent=2, sort_keys=True) + "\n"
            )
        else:
            raise ConfigError(f"no {MEMORY_SNAPSHOT} in {self.data_dir} and no base document given")
        self._memory = memory_from_doc(self._base_doc)
        self._version = 1
        self._cases: dict[str, CaseRecord] = {}
        self._order: list[str] = []
        for number, event in self._iter_log():
            self._apply(event, number)

    # -- state views ---------------------------------------------------

    @property
    def memory(self) -> Memory:
        return self._memory

    @property
    def model_version(self) -> int:
        """1 at boot, +1 for every confirmed-label feedback folded in."""
        return self._version

    @property
    def case_count(self) -> int:
        return len(self._order)

    def case_ids(self) -> tuple[str, ...]:
        return tuple(self._order)

    def get_case(self, case_id: str) -> CaseRecord:
        record = self._cases.get(case_id)
        if record is None:
            raise UnknownCaseError(case_id)
        return record

    # -- writes --------------------------------------------------------

    def add_case(
        self,
        *,
        payload: Mapping,
        signs: list[str] | tuple[str, ...],
        diagnosis: Mapping,
        algorithm: str,
    ) -> CaseRecord:
        with self._lock:
            record = CaseRecord(
                case_id=f"case-{len(self._order) + 1:06d}",
                created_at=_utc_now(),
                algorithm=str(algorithm),
                payload=dict(payload),
                signs=tuple(signs),
                diagnosis=dict(diagnosis),
            )
            self._append({"type": "case", "record": record.to_doc()})
            self._cases[record.case_id] = record
            self._order.append(record.case_id)
        return record

    def add_feedback(
        self,
        case_id: str,
        *,
        rating: int,
        confirmed_label: str | None = None,
        comment: str | None = None,
    ) -> CaseRecord:
        if not isinstance(rating, int) or isinstance(rating, bool) or not 1 <= rating <= 5:
            raise ValidationError(f"rating must be an integer in [1, 5], got {rating!r}", field="rating")
        with self._lock:
            record = self._cases.get(case_id)
            if record is None:
                raise UnknownCaseError(case_id)
            if record.feedback is not None:
                raise DuplicateFeedbackError(case_id)
            if confirmed_label is not None and confirmed_label not in self._memory.diseases.ids:
                raise ValidationError(
                    f"confirmed_label {confirmed_label!r} is not a known disease",
                    field="confirmed_label",
                )
            feedback = {
                "rating": rating,
                "confirmed_label": confirmed_label,
                "comment": comment,
                "created_at": _utc_now(),
            }
            self._append({"type": "feedback", "case_id": case_id, "feedback": feedback})
            record.feedback = feedback
            if confirmed_label is not None:
                self._memory = learn_case(self._memory, confirmed_label, record.signs)
                self._version += 1
        return record

    # -- event sourcing ------------------------------------------------

    def rebuild_memory(self) -> tuple[Memory, int]:
        """Replay snapshot + log from disk, ignoring in-process state.

        Returns the reconstructed memory and its version; equality with
        the live pair is the store's core audit property.
        """
        snapshot = self.data_dir / MEMORY_SNAPSHOT
        memory = memory_from_doc(json.loads(snapshot.read_text()))
        version = 1
        signs_by_case: dict[str, tuple[str, ...]] = {}
        for number, event in self._iter_log():
            kind = event.get("type")
            if kind == "case":
                record = event["record"]
                signs_by_case[record["case_id"]] = tuple(record["signs"])
            elif kind == "feedback":
                label = event["feedback"].get("confirmed_label")
                if label is not None:
                    memory = learn_case(memory, label, signs_by_case[event["case_id"]])
                    version += 1
            else:
                raise ValidationError(f"{CASE_LOG} line {number}: unknown event type {kind!r}")
        return memory, version

    def _iter_log(self) -> Iterator[tuple[int, dict]]:
        log = self.data_dir / CASE_LOG
        if not log.exists():
            return
        with log.open(encoding="utf-8") as fh:
            for number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"{CASE_LOG} line {number}: {exc}") from exc
                yield number, event

    def _apply(self, event: Mapping, number: int) -> None:
        kind = event.get("type")
        if kind == "case":
            record = CaseRecord.from_doc(event["record"])
            if record.case_id in self._cases:
                raise ValidationError(f"{CASE_LOG} line {number}: duplicate case id {record.case_id!r}")
            self._cases[record.case_id] = record
            self._order.append(record.case_id)
        elif kind == "feedback":
            case_id = event["case_id"]
            record = self._cases.get(case_id)
            if record is None:
                raise ValidationError(f"{CASE_LOG} line {number}: feedback for unknown case {case_id!r}")
            record.feedback = dict(event["feedback"])
            label = record.feedback.get("confirmed_label")
            if label is not None:
                self._memory = learn_case(self._memory, label, record.signs)
                self._version += 1
        else:
            raise ValidationError(f"{CASE_LOG} line {number}: unknown event type {kind!r}")

    def _append(self, event: dict) -> None:
        log = self.data_dir / CASE_LOG
        with log.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
