"""Tests for the decision tree, naive Bayes, and their fused predictor."""

import numpy as np
import pytest

from bronchial_dx.baselines import (
    DecisionTree,
    LabeledDataset,
    Leaf,
    NaiveBayesModel,
    Split,
    bayes_fit,
    c45_build,
    hybrid_classify,
    hybrid_predict,
)
from bronchial_dx.errors import ValidationError


def entropy_bits(counts):
    counts = np.asarray(counts, dtype=float)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def flat_bayes(priors, classes=("a", "b")) -> NaiveBayesModel:
    # one uninformative continuous attribute, so the posterior equals the prior
    k = len(classes)
    return NaiveBayesModel(
        classes=tuple(classes),
        priors=np.asarray(priors, dtype=float),
        binary_mask=np.array([False]),
        bernoulli=np.zeros((k, 0)),
        means=np.zeros((k, 1)),
        stds=np.ones((k, 1)),
    )


class TestTreeSplits:
    def test_four_point_split_lands_between_clusters(self):
        data = LabeledDataset(
            samples=np.array([[1.0], [2.0], [8.0], [9.0]]),
            labels=("a", "a", "b", "b"),
        )
        tree = c45_build(data)
        root = tree.root
        assert isinstance(root, Split)
        assert root.attribute == 0
        assert root.threshold == 5.0
        assert root.gain == pytest.approx(1.0, abs=1e-12)
        assert root.gain_ratio == pytest.approx(1.0, abs=1e-12)
        assert isinstance(root.left, Leaf) and isinstance(root.right, Leaf)
        assert np.array_equal(root.left.counts, [2.0, 0.0])
        assert np.array_equal(root.right.counts, [0.0, 2.0])

    def test_min_leaf_blocks_lopsided_cuts(self):
        # the only cut keeping two samples per side sits between 2 and 8
        data = LabeledDataset(
            samples=np.array([[1.0], [2.0], [8.0], [9.0]]),
            labels=("a", "b", "a", "b"),
        )
        tree = c45_build(data, min_leaf=2)
        if isinstance(tree.root, Split):
            assert tree.root.threshold == 5.0

    def test_pure_data_yields_single_leaf(self):
        data = LabeledDataset(samples=np.arange(6.0).reshape(6, 1), labels=("a",) * 6)
        tree = c45_build(data)
        assert isinstance(tree.root, Leaf)
        assert tree.leaf_count() == 1

    def test_constant_attributes_yield_leaf(self):
        data = LabeledDataset(
            samples=np.ones((4, 3)), labels=("a", "b", "a", "b")
        )
        tree = c45_build(data)
        assert isinstance(tree.root, Leaf)

    def test_leaf_sizes_respect_min_leaf(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(size=(60, 4))
        labels = tuple("ab"[int(s[0] + s[1] > 1.0)] for s in samples)
        for min_leaf in (2, 5):
            tree = c45_build(
                LabeledDataset(samples=samples, labels=labels), min_leaf=min_leaf
            )
            stack = [tree.root]
            while stack:
                node = stack.pop()
                if isinstance(node, Leaf):
                    assert node.size >= min_leaf
                else:
                    stack.extend([node.left, node.right])

    def test_pruning_only_merges(self):
        rng = np.random.default_rng(1)
        samples = rng.uniform(size=(80, 3))
        # mostly one class with label noise, so deep branches carry no signal
        labels = tuple(
            "b" if rng.uniform() < 0.15 else "a" for _ in range(len(samples))
        )
        data = LabeledDataset(samples=samples, labels=labels)
        grown = c45_build(data, prune=False)
        pruned = c45_build(data, prune=True)
        assert pruned.leaf_count() <= grown.leaf_count()
        assert pruned.leaf_count() < grown.leaf_count()

    def test_separable_data_classified(self):
        rng = np.random.default_rng(2)
        low = rng.normal(0.2, 0.05, size=(20, 2))
        high = rng.normal(0.8, 0.05, size=(20, 2))
        data = LabeledDataset(
            samples=np.vstack([low, high]), labels=("a",) * 20 + ("b",) * 20
        )
        tree = c45_build(data)
        correct = sum(
            tree.classify(x) == label for x, label in zip(data.samples, data.labels)
        )
        assert correct == len(data)

    def test_monotone_transform_preserves_predictions(self):
        rng = np.random.default_rng(3)
        samples = rng.uniform(-2.0, 2.0, size=(50, 3))
        labels = tuple(
            "ab"[int(s[0] - 0.3 * s[2] > 0.1)] for s in samples
        )
        data = LabeledDataset(samples=samples, labels=labels)
        warped = LabeledDataset(samples=np.exp(samples / 3.0), labels=labels)
        plain_tree = c45_build(data)
        warped_tree = c45_build(warped)
        # ranks drive every split choice, so routing is identical
        for x, wx in zip(data.samples, warped.samples):
            assert np.array_equal(
                plain_tree.predict_proba(x), warped_tree.predict_proba(wx)
            )

    def test_gain_matches_hand_entropy(self):
        data = LabeledDataset(
            samples=np.array([[1.0], [2.0], [3.0], [8.0], [9.0], [10.0]]),
            labels=("a", "a", "b", "b", "b", "b"),
        )
        tree = c45_build(data, prune=False)
        root = tree.root
        assert isinstance(root, Split)
        goes_left = data.samples[:, root.attribute] <= root.threshold
        left = [data.labels[i] for i in range(6) if goes_left[i]]
        right = [data.labels[i] for i in range(6) if not goes_left[i]]

        def side_counts(side):
            return [side.count("a"), side.count("b")]

        want_gain = entropy_bits([2, 4]) - (
            len(left) / 6 * entropy_bits(side_counts(left))
            + len(right) / 6 * entropy_bits(side_counts(right))
        )
        assert root.gain == pytest.approx(want_gain, abs=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        samples = rng.uniform(size=(40, 3))
        labels = tuple("ab"[int(s[1] > 0.5)] for s in samples)
        data = LabeledDataset(samples=samples, labels=labels)
        first = c45_build(data)
        second = c45_build(data)
        assert first.to_doc() == second.to_doc()

    def test_doc_round_trip(self):
        rng = np.random.default_rng(6)
        samples = rng.uniform(size=(30, 2))
        labels = tuple("ab"[int(s[0] > 0.4)] for s in samples)
        tree = c45_build(LabeledDataset(samples=samples, labels=labels))
        restored = DecisionTree.from_doc(tree.to_doc())
        for x in samples:
            assert np.array_equal(restored.predict_proba(x), tree.predict_proba(x))

    def test_doc_version_checked(self):
        with pytest.raises(ValidationError):
            DecisionTree.from_doc({"version": 99})

    def test_rejects_bad_arguments(self):
        data = LabeledDataset(samples=np.eye(2), labels=("a", "b"))
        with pytest.raises(ValidationError):
            c45_build(LabeledDataset(samples=np.zeros((0, 1)), labels=()))
        with pytest.raises(ValidationError):
            c45_build(data, min_leaf=0)
        with pytest.raises(ValidationError):
            c45_build(data, confidence=0.7)


class TestNaiveBayes:
    def test_add_one_smoothing(self):
        # three of three yes -> (3 + 1) / (3 + 2)
        data = LabeledDataset(
            samples=np.array([[1.0], [1.0], [1.0], [0.0], [0.0], [1.0]]),
            labels=("a", "a", "a", "b", "b", "b"),
        )
        model = bayes_fit(data)
        assert model.binary_mask[0]
        assert model.bernoulli[0, 0] == pytest.approx(0.8, abs=1e-12)
        assert model.bernoulli[1, 0] == pytest.approx(0.4, abs=1e-12)

    def test_priors_follow_counts(self):
        data = LabeledDataset(
            samples=np.zeros((4, 1)), labels=("a", "a", "a", "b")
        )
        model = bayes_fit(data)
        assert np.allclose(model.priors, [0.75, 0.25])

    def test_constant_per_class_values_split_classes(self):
        data = LabeledDataset(
            samples=np.array([[0.0], [0.0], [1.0], [1.0]]),
            labels=("a", "a", "b", "b"),
        )
        model = bayes_fit(data, binary_mask=np.array([False]))
        assert np.allclose(model.means[:, 0], [0.0, 1.0])
        # zero spread falls back to the floor instead of crashing
        assert (model.stds > 0).all()
        posterior = model.predict_proba(np.array([0.0]))
        assert posterior[0] > 0.999

    def test_gaussian_attribute_ranks_classes(self):
        rng = np.random.default_rng(7)
        a = rng.normal(0.0, 1.0, size=(30, 1))
        b = rng.normal(5.0, 1.0, size=(30, 1))
        data = LabeledDataset(
            samples=np.vstack([a, b]), labels=("a",) * 30 + ("b",) * 30
        )
        model = bayes_fit(data)
        assert model.classify(np.array([-0.5])) == "a"
        assert model.classify(np.array([5.5])) == "b"

    def test_mixed_attribute_kinds(self):
        rng = np.random.default_rng(8)
        flags = (rng.uniform(size=20) > 0.5).astype(float)
        values = rng.normal(size=20)
        samples = np.stack([flags, values], axis=1)
        labels = tuple("ab"[int(f > 0.5)] for f in flags)
        model = bayes_fit(LabeledDataset(samples=samples, labels=labels))
        assert model.binary_mask.tolist() == [True, False]

    def test_single_class_warns(self):
        data = LabeledDataset(samples=np.eye(3), labels=("a", "a", "a"))
        with pytest.warns(UserWarning):
            bayes_fit(data)

    def test_posterior_sums_to_one(self):
        rng = np.random.default_rng(9)
        samples = rng.uniform(size=(20, 3))
        labels = tuple("ab"[int(s[0] > 0.5)] for s in samples)
        model = bayes_fit(LabeledDataset(samples=samples, labels=labels))
        for x in samples:
            assert model.predict_proba(x).sum() == pytest.approx(1.0, abs=1e-12)

    def test_doc_round_trip(self):
        rng = np.random.default_rng(10)
        samples = rng.uniform(size=(16, 2))
        labels = tuple("ab"[int(s[1] > 0.5)] for s in samples)
        model = bayes_fit(LabeledDataset(samples=samples, labels=labels))
        restored = NaiveBayesModel.from_doc(model.to_doc())
        for x in samples:
            assert np.allclose(
                restored.predict_proba(x), model.predict_proba(x), atol=1e-15
            )

    def test_rejects_bad_mask_shape(self):
        data = LabeledDataset(samples=np.eye(2), labels=("a", "b"))
        with pytest.raises(ValidationError):
            bayes_fit(data, binary_mask=np.array([True, False, True]))


class TestHybrid:
    def test_pure_leaf_overrides_posterior(self):
        tree = DecisionTree(root=Leaf(counts=np.array([1.0, 0.0])), classes=("a", "b"))
        fused = hybrid_predict(tree, flat_bayes([0.6, 0.4]), np.array([0.0]))
        assert fused.probabilities == {"a": 1.0, "b": 0.0}
        assert not fused.fallback

    def test_uniform_leaf_defers_to_posterior(self):
        tree = DecisionTree(root=Leaf(counts=np.array([1.0, 1.0])), classes=("a", "b"))
        fused = hybrid_predict(tree, flat_bayes([0.9, 0.1]), np.array([0.0]))
        assert fused.probabilities["a"] == pytest.approx(0.9, abs=1e-12)
        assert fused.probabilities["b"] == pytest.approx(0.1, abs=1e-12)
        assert not fused.fallback

    def test_zero_mass_falls_back_to_posterior(self):
        tree = DecisionTree(root=Leaf(counts=np.array([1.0, 0.0])), classes=("a", "b"))
        fused = hybrid_predict(tree, flat_bayes([0.0, 1.0]), np.array([0.0]))
        assert fused.fallback
        assert fused.probabilities == {"a": 0.0, "b": 1.0}

    def test_tie_goes_to_posterior_argmax(self):
        # leaf (0.2, 0.8) against posterior (0.8, 0.2) fuses to an exact tie
        tree = DecisionTree(root=Leaf(counts=np.array([1.0, 4.0])), classes=("a", "b"))
        top, fused = hybrid_classify(tree, flat_bayes([0.8, 0.2]), np.array([0.0]))
        assert fused.probabilities["a"] == pytest.approx(fused.probabilities["b"])
        assert top == "a"

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(11)
        samples = rng.uniform(size=(24, 2))
        labels = tuple("ab"[int(s[0] > 0.5)] for s in samples)
        data = LabeledDataset(samples=samples, labels=labels)
        tree = c45_build(data)
        bayes = bayes_fit(data)
        for x in samples:
            fused = hybrid_predict(tree, bayes, x)
            assert sum(fused.probabilities.values()) == pytest.approx(1.0, abs=1e-12)

    def test_class_list_mismatch_rejected(self):
        tree = DecisionTree(root=Leaf(counts=np.array([1.0, 1.0])), classes=("a", "c"))
        with pytest.raises(ValidationError):
            hybrid_predict(tree, flat_bayes([0.5, 0.5]), np.array([0.0]))
