"""Confusion tallying and screening statistics.

Inconclusive attempts are tracked separately and never enter the
confusion counts, so every ratio is computed over decided cases only.
Ratios with an empty denominator are reported as None (undefined),
never silently coerced to zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError

_VERDICT_KEYS = {
    "positive": "positive",
    "negative": "negative",
    "inconclusive": "inconclusive",
    "p": "positive",
    "n": "negative",
    "i": "inconclusive",
}

METRIC_ORDER = (
    "sensitivity",
    "specificity",
    "ppr",
    "npr",
    "mcc",
    "accuracy",
    "f1",
    "inconclusive_rate",
)


@dataclass(frozen=True)
class ConfusionTally:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    inconclusive: int = 0

    def __post_init__(self) -> None:
        for name in ("tp", "tn", "fp", "fn", "inconclusive"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValidationError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def decided(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def total(self) -> int:
        return self.decided + self.inconclusive

    def __add__(self, other: "ConfusionTally") -> "ConfusionTally":
        return ConfusionTally(
            tp=self.tp + other.tp,
            tn=self.tn + other.tn,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            inconclusive=self.inconclusive + other.inconclusive,
        )


def _verdict_of(prediction) -> str:
    raw = getattr(prediction, "verdict", prediction)
    if isinstance(raw, str) and raw.lower() in _VERDICT_KEYS:
        return _VERDICT_KEYS[raw.lower()]
    raise ValidationError(f"unknown verdict {raw!r}")


def tally(predictions: Sequence[object], truths: Sequence[object]) -> ConfusionTally:
    """Count outcomes; inconclusive predictions bypass the confusion cells."""
    if len(predictions) != len(truths):
        raise ValidationError(
            f"got {len(predictions)} predictions for {len(truths)} truths"
        )
    tp = tn = fp = fn = inconclusive = 0
    for prediction, truth in zip(predictions, truths):
        verdict = _verdict_of(prediction)
        if truth not in (0, 1, True, False):
            raise ValidationError(f"truth labels must be binary, got {truth!r}")
        actual = bool(truth)
        if verdict == "inconclusive":
            inconclusive += 1
        elif verdict == "positive":
            tp += actual
            fp += not actual
        else:
            fn += actual
            tn += not actual
    return ConfusionTally(tp=tp, tn=tn, fp=fp, fn=fn, inconclusive=inconclusive)


@dataclass(frozen=True)
class MetricsReport:
    """Screening statistics; None marks an undefined (0/0) ratio."""

    sensitivity: float | None
    specificity: float | None
    ppr: float | None
    npr: float | None
    mcc: float | None
    accuracy: float | None
    f1: float | None
    inconclusive_rate: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in METRIC_ORDER}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)

    def as_text(self) -> str:
        """Aligned two-column table, 4 decimals, 'undefined' for None."""
        width = max(len(name) for name in METRIC_ORDER)
        lines = []
        for name in METRIC_ORDER:
            value = getattr(self, name)
            shown = "undefined" if value is None else f"{value:.4f}"
            lines.append(f"{name.ljust(width)}  {shown}")
        return "\n".join(lines)


def _ratio(numerator: int, denominator: int) -> float | None:
    if denominator == 0:
        return None
    return numerator / denominator


def summarize(t: ConfusionTally) -> MetricsReport:
    """All eight statistics; decided cases only, inconclusive rated apart."""
    mcc: float | None
    mcc_denominator = (t.tp + t.fp) * (t.tp + t.fn) * (t.tn + t.fp) * (t.tn + t.fn)
    if mcc_denominator == 0:
        mcc = None
    else:
        mcc = (t.tp * t.tn - t.fp * t.fn) / math.sqrt(mcc_denominator)
    return MetricsReport(
        sensitivity=_ratio(t.tp, t.tp + t.fn),
        specificity=_ratio(t.tn, t.tn + t.fp),
        ppr=_ratio(t.tp, t.tp + t.fp),
        npr=_ratio(t.tn, t.tn + t.fn),
        mcc=mcc,
        accuracy=_ratio(t.tp + t.tn, t.decided),
        f1=_ratio(2 * t.tp, 2 * t.tp + t.fp + t.fn),
        inconclusive_rate=_ratio(t.inconclusive, t.total),
    )
