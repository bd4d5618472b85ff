"""Train-and-score harness comparing every shipped classifier.

Each algorithm trains on the training rows only and is tallied on the
test rows; the association memory in particular is rebuilt from scratch
by feeding it one training case at a time, so its test behavior reflects
what those records alone taught it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .baselines import (
    LabeledDataset,
    bayes_fit,
    c45_build,
    hybrid_classify,
    mlp_train_incremental,
    pso_train_classifier,
)
from .cdamm import (
    DEFAULT_POLICY,
    InconclusivePolicy,
    Memory,
    canonical_codebook,
    classify,
    empty_memory,
    learn_case,
)
from .cohort import ASTHMA_LABEL
from .encoder import CORE_SLICE
from .errors import ValidationError
from .metrics import MetricsReport, summarize, tally
from .pipeline import sign_vocabulary, signs_from_vector
from .questionnaire import threshold_classify

ALGORITHMS = ("cdamm", "mlp", "pso", "c45bn", "threshold")

MLP_EPOCHS = 40
PSO_HIDDEN = 4
PSO_ITERATIONS = 150
PSO_PARTICLES = 30

_CORE_CAPACITY = 100
_THRESHOLD_GRID = [i / 100 for i in range(101)]


@dataclass(frozen=True)
class EvalResult:
    """Metrics plus provenance for one train/test run."""

    algorithm: str
    metrics: MetricsReport
    runtime_s: float
    train_size: int
    test_size: int
    positive_label: str
    detail: dict

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "metrics": self.metrics.as_dict(),
            "runtime_s": self.runtime_s,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "positive_label": self.positive_label,
            "detail": self.detail,
        }


def memory_from_dataset(train: LabeledDataset) -> Memory:
    """Teach a blank association memory every training case in row order."""
    memory = empty_memory(
        canonical_codebook(train.classes), canonical_codebook(sign_vocabulary())
    )
    for row, label in zip(train.samples, train.labels):
        signs = signs_from_vector(row)
        if signs:
            memory = learn_case(memory, label, signs)
    return memory


def _core_score(row: np.ndarray) -> float:
    # every yes question contributes exactly its priority factor in slots
    return float(row[CORE_SLICE].sum())


def _verdict_from_label(predicted: str, positive_label: str) -> str:
    return "positive" if predicted == positive_label else "negative"


def _tally_predictions(verdicts, truths) -> MetricsReport:
    return summarize(tally(verdicts, truths))


def fit_for_serving(algorithm: str, train: LabeledDataset, *, seed: int = 0):
    """Train one model exactly as the evaluator would and return it.

    mlp and pso give an MlpModel, c45bn a (DecisionTree, NaiveBayesModel)
    pair.  cdamm and threshold have nothing to serialize here: the memory
    comes from ``memory_from_dataset`` and the score cut is a single number.
    """
    if algorithm == "mlp":
        return mlp_train_incremental(train, epochs=MLP_EPOCHS, seed=seed)
    if algorithm == "pso":
        return pso_train_classifier(
            train,
            layer_sizes=(train.dimension, PSO_HIDDEN, len(train.classes)),
            iterations=PSO_ITERATIONS,
            particles=PSO_PARTICLES,
            seed=seed,
        )
    if algorithm == "c45bn":
        return c45_build(train), bayes_fit(train)
    raise ValidationError(f"{algorithm!r} has no servable model; pick mlp, pso or c45bn")


def evaluate_algorithm(
    algorithm: str,
    train: LabeledDataset,
    test: LabeledDataset,
    *,
    positive_label: str = ASTHMA_LABEL,
    seed: int = 0,
    policy: InconclusivePolicy = DEFAULT_POLICY,
    memory: Memory | None = None,
) -> EvalResult:
    """Train the named algorithm and report test metrics.

    ``memory`` short-circuits cdamm training with a prebuilt memory (as
    read from a dataset's association document); every other algorithm
    ignores it.
    """
    if algorithm not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algorithm!r}; pick one of {ALGORITHMS}")
    if len(train) == 0 or len(test) == 0:
        raise ValidationError("both training and test rows are required")
    if train.dimension != test.dimension:
        raise ValidationError("train and test dimensions differ")
    truths = [label == positive_label for label in test.labels]
    started = time.perf_counter()
    detail: dict = {}

    if algorithm == "cdamm":
        model = memory if memory is not None else memory_from_dataset(train)
        verdicts = [
            classify(model, signs_from_vector(row), policy=policy, positive_disease=positive_label).verdict
            for row in test.samples
        ]
        detail["diseases"] = list(model.diseases.ids)
    elif algorithm in ("mlp", "pso"):
        model = fit_for_serving(algorithm, train, seed=seed)
        verdicts = [
            _verdict_from_label(model.classify(row), positive_label) for row in test.samples
        ]
        detail["layer_sizes"] = list(model.layer_sizes)
        detail["final_mse"] = model.mse_trace[-1]
    elif algorithm == "c45bn":
        tree, bayes = fit_for_serving(algorithm, train, seed=seed)
        verdicts = []
        fallbacks = 0
        for row in test.samples:
            predicted, fused = hybrid_classify(tree, bayes, row)
            fallbacks += fused.fallback
            verdicts.append(_verdict_from_label(predicted, positive_label))
        detail["tree_leaves"] = tree.leaf_count()
        detail["bayes_fallbacks"] = fallbacks
    else:
        # sweep the score cut on the training rows, keep the best, apply to test
        train_scores = [_core_score(row) for row in train.samples]
        train_truths = [label == positive_label for label in train.labels]
        best_phi, best_correct = 0.0, -1
        for phi in _THRESHOLD_GRID:
            correct = sum(
                threshold_classify(score, phi, _CORE_CAPACITY) == truth
                for score, truth in zip(train_scores, train_truths)
            )
            if correct > best_correct:
                best_phi, best_correct = phi, correct
        verdicts = [
            "positive" if threshold_classify(_core_score(row), best_phi, _CORE_CAPACITY) else "negative"
            for row in test.samples
        ]
        detail["phi"] = best_phi
        detail["train_accuracy"] = best_correct / len(train)

    metrics = _tally_predictions(verdicts, truths)
    return EvalResult(
        algorithm=algorithm,
        metrics=metrics,
        runtime_s=time.perf_counter() - started,
        train_size=len(train),
        test_size=len(test),
        positive_label=positive_label,
        detail=detail,
    )
