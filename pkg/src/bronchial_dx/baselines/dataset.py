"""Shared dataset container for the comparison learners."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Immutable sample matrix plus one class label per row."""

    samples: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ValidationError("samples must form a 2-D matrix")
        if not np.isfinite(samples).all():
            raise ValidationError("samples must be finite")
        labels = tuple(str(label) for label in self.labels)
        if len(labels) != samples.shape[0]:
            raise ValidationError(
                f"{samples.shape[0]} samples but {len(labels)} labels"
            )
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    def class_indices(self, classes: Sequence[str] | None = None) -> np.ndarray:
        """Label of each row as an index into ``classes`` (default: own order)."""
        order = tuple(classes) if classes is not None else self.classes
        lookup = {name: index for index, name in enumerate(order)}
        try:
            return np.array([lookup[label] for label in self.labels], dtype=np.int64)
        except KeyError as exc:
            raise ValidationError(f"label {exc.args[0]!r} not in class list") from None

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        index_array = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            samples=self.samples[index_array],
            labels=tuple(self.labels[i] for i in index_array),
        )
