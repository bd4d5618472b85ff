"""Decision tree with gain-ratio splits, a naive Bayes model, and their fusion.

The tree treats every attribute as numeric and splits at midpoints
between adjacent distinct values, choosing the threshold with the best
gain ratio. After growing, subtrees whose pessimistic error estimate is
no better than a single leaf collapse into that leaf. The Bayes model
smooths 0/1 attributes with add-one counts and fits per-class Gaussians
to the rest. The fused predictor multiplies the two distributions and
renormalizes, falling back to the Bayes posterior when the product has
no mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from statistics import NormalDist
from typing import Union

import numpy as np

from ..errors import ValidationError
from .dataset import LabeledDataset

TREE_DOC_VERSION = 1
BAYES_DOC_VERSION = 1

DEFAULT_MIN_LEAF = 2
DEFAULT_CONFIDENCE = 0.25

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_MIN_STD = 1e-6


@dataclass(frozen=True)
class Leaf:
    """Terminal node holding the training class counts it saw."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.float64).copy()
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def size(self) -> float:
        return float(self.counts.sum())

    @property
    def distribution(self) -> np.ndarray:
        return self.counts / self.counts.sum()


@dataclass(frozen=True)
class Split:
    """Internal node sending ``value <= threshold`` left and the rest right."""

    attribute: int
    threshold: float
    gain: float
    gain_ratio: float
    left: "TreeNode"
    right: "TreeNode"
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.float64).copy()
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    classes: tuple[str, ...]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Class distribution of the leaf the sample lands in."""
        x = np.asarray(x, dtype=np.float64)
        node = self.root
        while isinstance(node, Split):
            node = node.left if x[node.attribute] <= node.threshold else node.right
        return node.distribution

    def classify(self, x: np.ndarray) -> str:
        return self.classes[int(np.argmax(self.predict_proba(x)))]

    def leaf_count(self) -> int:
        return _count_leaves(self.root)

    def depth(self) -> int:
        return _depth(self.root)

    def to_doc(self) -> dict:
        return {
            "version": TREE_DOC_VERSION,
            "kind": "decision_tree",
            "classes": list(self.classes),
            "root": _node_to_doc(self.root),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "DecisionTree":
        if doc.get("version") != TREE_DOC_VERSION:
            raise ValidationError(f"unsupported tree document version {doc.get('version')!r}")
        return cls(root=_node_from_doc(doc["root"]), classes=tuple(doc["classes"]))


def _count_leaves(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return _count_leaves(node.left) + _count_leaves(node.right)


def _depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _node_to_doc(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": True, "counts": node.counts.tolist()}
    return {
        "leaf": False,
        "attribute": node.attribute,
        "threshold": node.threshold,
        "gain": node.gain,
        "gain_ratio": node.gain_ratio,
        "counts": node.counts.tolist(),
        "left": _node_to_doc(node.left),
        "right": _node_to_doc(node.right),
    }


def _node_from_doc(doc: dict) -> TreeNode:
    if doc["leaf"]:
        return Leaf(counts=np.array(doc["counts"], dtype=np.float64))
    return Split(
        attribute=int(doc["attribute"]),
        threshold=float(doc["threshold"]),
        gain=float(doc["gain"]),
        gain_ratio=float(doc["gain_ratio"]),
        left=_node_from_doc(doc["left"]),
        right=_node_from_doc(doc["right"]),
        counts=np.array(doc["counts"], dtype=np.float64),
    )


def _entropy(counts: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits of each row of class counts."""
    counts = np.atleast_2d(counts)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 0.0)
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return -terms.sum(axis=1)


@dataclass(frozen=True)
class _Candidate:
    attribute: int
    threshold: float
    gain: float
    gain_ratio: float


def _best_split_for_attribute(
    attribute: int,
    values: np.ndarray,
    class_ids: np.ndarray,
    class_count: int,
    min_leaf: int,
) -> _Candidate | None:
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    sorted_classes = class_ids[order]
    n = len(sorted_values)
    one_hot = np.zeros((n, class_count))
    one_hot[np.arange(n), sorted_classes] = 1.0
    cumulative = np.cumsum(one_hot, axis=0)
    totals = cumulative[-1]

    cut_positions = np.nonzero(sorted_values[:-1] < sorted_values[1:])[0]
    if cut_positions.size == 0:
        return None
    left_sizes = cut_positions + 1
    right_sizes = n - left_sizes
    viable = (left_sizes >= min_leaf) & (right_sizes >= min_leaf)
    cut_positions = cut_positions[viable]
    if cut_positions.size == 0:
        return None

    left_counts = cumulative[cut_positions]
    right_counts = totals - left_counts
    left_sizes = left_sizes[viable].astype(np.float64)
    right_sizes = right_sizes[viable].astype(np.float64)

    parent_entropy = _entropy(totals)[0]
    weighted = (
        left_sizes * _entropy(left_counts) + right_sizes * _entropy(right_counts)
    ) / n
    gains = parent_entropy - weighted
    fractions = np.stack([left_sizes / n, right_sizes / n], axis=1)
    split_info = _entropy(fractions * n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(split_info > 0, gains / split_info, 0.0)

    usable = gains > 1e-12
    if not usable.any():
        return None
    ratios = np.where(usable, ratios, -np.inf)
    best = int(np.argmax(ratios))
    position = int(cut_positions[best])
    threshold = (sorted_values[position] + sorted_values[position + 1]) / 2.0
    return _Candidate(
        attribute=attribute,
        threshold=float(threshold),
        gain=float(gains[best]),
        gain_ratio=float(ratios[best]),
    )


def _class_counts(class_ids: np.ndarray, class_count: int) -> np.ndarray:
    return np.bincount(class_ids, minlength=class_count).astype(np.float64)


def _grow(
    samples: np.ndarray,
    class_ids: np.ndarray,
    class_count: int,
    min_leaf: int,
) -> TreeNode:
    counts = _class_counts(class_ids, class_count)
    if np.count_nonzero(counts) <= 1 or len(class_ids) < 2 * min_leaf:
        return Leaf(counts=counts)
    best: _Candidate | None = None
    for attribute in range(samples.shape[1]):
        candidate = _best_split_for_attribute(
            attribute, samples[:, attribute], class_ids, class_count, min_leaf
        )
        if candidate is None:
            continue
        if best is None or candidate.gain_ratio > best.gain_ratio + 1e-12:
            best = candidate
    if best is None:
        return Leaf(counts=counts)
    goes_left = samples[:, best.attribute] <= best.threshold
    left = _grow(samples[goes_left], class_ids[goes_left], class_count, min_leaf)
    right = _grow(samples[~goes_left], class_ids[~goes_left], class_count, min_leaf)
    return Split(
        attribute=best.attribute,
        threshold=best.threshold,
        gain=best.gain,
        gain_ratio=best.gain_ratio,
        left=left,
        right=right,
        counts=counts,
    )


def _pessimistic_errors(counts: np.ndarray, z: float) -> float:
    """Upper confidence bound on the error count of a leaf."""
    n = float(counts.sum())
    if n == 0:
        return 0.0
    errors = n - float(counts.max())
    f = errors / n
    z2 = z * z
    bound = (
        f
        + z2 / (2.0 * n)
        + z * np.sqrt(f / n - f * f / n + z2 / (4.0 * n * n))
    ) / (1.0 + z2 / n)
    return n * float(bound)


def _prune(node: TreeNode, z: float) -> tuple[TreeNode, float]:
    if isinstance(node, Leaf):
        return node, _pessimistic_errors(node.counts, z)
    left, left_errors = _prune(node.left, z)
    right, right_errors = _prune(node.right, z)
    subtree_errors = left_errors + right_errors
    collapsed = Leaf(counts=node.counts)
    collapsed_errors = _pessimistic_errors(node.counts, z)
    if collapsed_errors <= subtree_errors:
        return collapsed, collapsed_errors
    pruned = Split(
        attribute=node.attribute,
        threshold=node.threshold,
        gain=node.gain,
        gain_ratio=node.gain_ratio,
        left=left,
        right=right,
        counts=node.counts,
    )
    return pruned, subtree_errors


def c45_build(
    dataset: LabeledDataset,
    *,
    min_leaf: int = DEFAULT_MIN_LEAF,
    confidence: float = DEFAULT_CONFIDENCE,
    prune: bool = True,
) -> DecisionTree:
    """Grow and pessimistically prune a gain-ratio decision tree."""
    if len(dataset) == 0:
        raise ValidationError("cannot build a tree from an empty dataset")
    if min_leaf < 1:
        raise ValidationError("min_leaf must be at least 1")
    if not 0.0 < confidence < 0.5:
        raise ValidationError("confidence must lie strictly between 0 and 0.5")
    classes = dataset.classes
    class_ids = dataset.class_indices()
    root = _grow(dataset.samples, class_ids, len(classes), min_leaf)
    if prune:
        z = NormalDist().inv_cdf(1.0 - confidence)
        root, _ = _prune(root, z)
    return DecisionTree(root=root, classes=classes)


@dataclass(eq=False)
class NaiveBayesModel:
    """Class priors plus per-attribute likelihoods, split by attribute kind."""

    classes: tuple[str, ...]
    priors: np.ndarray
    binary_mask: np.ndarray
    bernoulli: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def log_posterior(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.binary_mask.size,):
            raise ValidationError(
                f"expected {self.binary_mask.size} attributes, got shape {x.shape}"
            )
        with np.errstate(divide="ignore"):
            scores = np.log(self.priors)
        if self.binary_mask.any():
            xb = x[self.binary_mask]
            p = self.bernoulli
            scores = scores + np.where(xb > 0.5, np.log(p), np.log1p(-p)).sum(axis=1)
        if (~self.binary_mask).any():
            xc = x[~self.binary_mask]
            scores = scores - (
                _LOG_SQRT_2PI
                + np.log(self.stds)
                + 0.5 * ((xc - self.means) / self.stds) ** 2
            ).sum(axis=1)
        return scores

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        scores = self.log_posterior(x)
        scores = scores - scores.max()
        weights = np.exp(scores)
        return weights / weights.sum()

    def classify(self, x: np.ndarray) -> str:
        return self.classes[int(np.argmax(self.predict_proba(x)))]

    def to_doc(self) -> dict:
        return {
            "version": BAYES_DOC_VERSION,
            "kind": "naive_bayes",
            "classes": list(self.classes),
            "priors": self.priors.tolist(),
            "binary_mask": self.binary_mask.astype(int).tolist(),
            "bernoulli": self.bernoulli.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "NaiveBayesModel":
        if doc.get("version") != BAYES_DOC_VERSION:
            raise ValidationError(f"unsupported Bayes document version {doc.get('version')!r}")
        return cls(
            classes=tuple(doc["classes"]),
            priors=np.array(doc["priors"], dtype=np.float64),
            binary_mask=np.array(doc["binary_mask"], dtype=bool),
            bernoulli=np.array(doc["bernoulli"], dtype=np.float64),
            means=np.array(doc["means"], dtype=np.float64),
            stds=np.array(doc["stds"], dtype=np.float64),
        )


def bayes_fit(
    dataset: LabeledDataset, *, binary_mask: np.ndarray | None = None
) -> NaiveBayesModel:
    """Fit the naive Bayes model, detecting 0/1 attributes when no mask is given."""
    if len(dataset) == 0:
        raise ValidationError("cannot fit on an empty dataset")
    samples = dataset.samples
    if binary_mask is None:
        binary_mask = np.array(
            [bool(np.isin(samples[:, j], (0.0, 1.0)).all()) for j in range(samples.shape[1])]
        )
    else:
        binary_mask = np.asarray(binary_mask, dtype=bool)
        if binary_mask.shape != (samples.shape[1],):
            raise ValidationError("binary mask must flag every attribute")
    classes = dataset.classes
    if len(classes) < 2:
        warnings.warn("training data holds a single class; priors are degenerate")
    class_ids = dataset.class_indices()
    k = len(classes)
    counts = np.bincount(class_ids, minlength=k).astype(np.float64)
    priors = counts / counts.sum()

    binary_columns = samples[:, binary_mask]
    continuous_columns = samples[:, ~binary_mask]
    bernoulli = np.zeros((k, binary_columns.shape[1]))
    means = np.zeros((k, continuous_columns.shape[1]))
    stds = np.ones((k, continuous_columns.shape[1]))
    for c in range(k):
        rows = class_ids == c
        n_c = float(rows.sum())
        if n_c == 0:
            bernoulli[c] = 0.5
            continue
        # add-one smoothing: (yes count + 1) / (class size + 2)
        bernoulli[c] = (binary_columns[rows].sum(axis=0) + 1.0) / (n_c + 2.0)
        if continuous_columns.shape[1]:
            means[c] = continuous_columns[rows].mean(axis=0)
            stds[c] = np.maximum(continuous_columns[rows].std(axis=0), _MIN_STD)
    return NaiveBayesModel(
        classes=classes,
        priors=priors,
        binary_mask=binary_mask,
        bernoulli=bernoulli,
        means=means,
        stds=stds,
    )


@dataclass(frozen=True)
class HybridPrediction:
    """Fused distribution plus whether the Bayes fallback had to fire."""

    probabilities: dict[str, float]
    fallback: bool


def hybrid_predict(
    tree: DecisionTree, bayes: NaiveBayesModel, x: np.ndarray
) -> HybridPrediction:
    """Multiply the tree leaf distribution with the Bayes posterior.

    A product with zero total mass (the two models exclude each other's
    classes outright) yields the Bayes posterior alone, flagged.
    """
    if tree.classes != bayes.classes:
        raise ValidationError("tree and Bayes model disagree on the class list")
    leaf = tree.predict_proba(x)
    posterior = bayes.predict_proba(x)
    product = leaf * posterior
    mass = float(product.sum())
    if mass <= 0.0:
        fused = posterior
        fallback = True
    else:
        fused = product / mass
        fallback = False
    return HybridPrediction(
        probabilities={name: float(p) for name, p in zip(tree.classes, fused)},
        fallback=fallback,
    )


def hybrid_classify(
    tree: DecisionTree, bayes: NaiveBayesModel, x: np.ndarray
) -> tuple[str, HybridPrediction]:
    """Fused argmax; exact ties go to the class the Bayes posterior favors."""
    prediction = hybrid_predict(tree, bayes, x)
    posterior = bayes.predict_proba(x)
    bayes_rank = {name: float(p) for name, p in zip(bayes.classes, posterior)}
    top = max(
        tree.classes,
        key=lambda name: (prediction.probabilities[name], bayes_rank[name]),
    )
    return top, prediction
