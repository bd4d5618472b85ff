"""Comparison learners: gradient network, swarm trainer, tree plus Bayes."""

from .dataset import LabeledDataset
from .mlp import (
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
    DEFAULT_LEARNING_RATE,
    MLP_DOC_VERSION,
    MlpModel,
    gradient_check,
    mlp_train_incremental,
    sigmoid,
)
from .pso import (
    DEFAULT_ITERATIONS,
    DEFAULT_PARTICLES,
    PsoParams,
    PsoResult,
    pso_optimize,
    pso_train_classifier,
)
from .tree import (
    BAYES_DOC_VERSION,
    DEFAULT_CONFIDENCE,
    DEFAULT_MIN_LEAF,
    TREE_DOC_VERSION,
    DecisionTree,
    HybridPrediction,
    Leaf,
    NaiveBayesModel,
    Split,
    bayes_fit,
    c45_build,
    hybrid_classify,
    hybrid_predict,
)

__all__ = [
    "LabeledDataset",
    "MlpModel",
    "mlp_train_incremental",
    "gradient_check",
    "sigmoid",
    "PsoParams",
    "PsoResult",
    "pso_optimize",
    "pso_train_classifier",
    "DecisionTree",
    "Leaf",
    "Split",
    "NaiveBayesModel",
    "HybridPrediction",
    "c45_build",
    "bayes_fit",
    "hybrid_predict",
    "hybrid_classify",
    "DEFAULT_EPOCHS",
    "DEFAULT_HIDDEN",
    "DEFAULT_LEARNING_RATE",
    "DEFAULT_ITERATIONS",
    "DEFAULT_PARTICLES",
    "DEFAULT_MIN_LEAF",
    "DEFAULT_CONFIDENCE",
    "MLP_DOC_VERSION",
    "TREE_DOC_VERSION",
    "BAYES_DOC_VERSION",
]
