"""Tests for the particle swarm minimizer."""

import numpy as np
import pytest

from bronchial_dx.baselines import (
    LabeledDataset,
    PsoParams,
    pso_optimize,
    pso_train_classifier,
)
from bronchial_dx.errors import ValidationError


def sphere(x: np.ndarray) -> float:
    return float(np.sum(x * x))


def shifted_parabola(x: np.ndarray) -> float:
    return float((x[0] - 3.0) ** 2)


def rastrigin(x: np.ndarray) -> float:
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


class TestOptimize:
    def test_finds_parabola_minimum(self):
        result = pso_optimize(shifted_parabola, 1, iterations=100, particles=30, seed=0)
        assert abs(result.position[0] - 3.0) < 0.01

    def test_sphere_ten_dimensions(self):
        result = pso_optimize(
            sphere, 10, bounds=(-5.12, 5.12), iterations=200, particles=30, seed=0
        )
        assert result.fitness < 1e-3

    def test_trace_never_increases(self):
        for seed in range(6):
            result = pso_optimize(
                rastrigin, 4, bounds=(-5.12, 5.12), iterations=50, particles=15, seed=seed
            )
            for earlier, later in zip(result.trace, result.trace[1:]):
                assert later <= earlier

    def test_trace_length_counts_initialization(self):
        result = pso_optimize(sphere, 2, iterations=25, particles=10, seed=3)
        assert len(result.trace) == 26

    def test_zero_iterations_returns_best_initial_point(self):
        none = pso_optimize(sphere, 3, iterations=0, particles=12, seed=5)
        one = pso_optimize(sphere, 3, iterations=1, particles=12, seed=5)
        assert len(none.trace) == 1
        assert none.trace[0] == one.trace[0]
        assert none.fitness == sphere(none.position)

    def test_fitness_matches_position(self):
        result = pso_optimize(rastrigin, 3, iterations=40, particles=20, seed=1)
        assert result.fitness == pytest.approx(rastrigin(result.position), abs=1e-12)

    def test_position_stays_in_bounds(self):
        result = pso_optimize(
            shifted_parabola, 1, bounds=(-1.0, 1.0), iterations=50, particles=10, seed=0
        )
        assert -1.0 <= result.position[0] <= 1.0

    def test_ring_topology_converges(self):
        result = pso_optimize(
            sphere, 4, iterations=150, particles=20, topology="lbest", seed=0
        )
        assert result.fitness < 1e-2
        for earlier, later in zip(result.trace, result.trace[1:]):
            assert later <= earlier

    def test_deterministic_for_fixed_seed(self):
        first = pso_optimize(sphere, 5, iterations=30, particles=10, seed=42)
        second = pso_optimize(sphere, 5, iterations=30, particles=10, seed=42)
        assert np.array_equal(first.position, second.position)
        assert first.trace == second.trace

    def test_seed_changes_search(self):
        first = pso_optimize(rastrigin, 5, iterations=10, particles=10, seed=0)
        second = pso_optimize(rastrigin, 5, iterations=10, particles=10, seed=1)
        assert not np.array_equal(first.position, second.position)

    def test_tiny_speed_limit_freezes_swarm(self):
        # movement is bounded by iterations * max_velocity, so a tiny limit
        # pins the best fitness near its initial value while the default limit
        # lets the swarm converge
        slow = pso_optimize(
            shifted_parabola,
            1,
            iterations=200,
            particles=5,
            seed=0,
            params=PsoParams(max_velocity=1e-6),
        )
        free = pso_optimize(shifted_parabola, 1, iterations=200, particles=5, seed=0)
        assert free.trace[0] == slow.trace[0]
        assert slow.fitness >= slow.trace[0] - 1e-2
        assert free.fitness < 1e-4
        assert free.fitness < slow.fitness

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValidationError):
            pso_optimize(sphere, 0)
        with pytest.raises(ValidationError):
            pso_optimize(sphere, 2, particles=0)
        with pytest.raises(ValidationError):
            pso_optimize(sphere, 2, iterations=-1)
        with pytest.raises(ValidationError):
            pso_optimize(sphere, 2, bounds=(1.0, 1.0))
        with pytest.raises(ValidationError):
            pso_optimize(sphere, 2, topology="star")
        with pytest.raises(ValidationError):
            PsoParams(inertia=0.0)
        with pytest.raises(ValidationError):
            PsoParams(max_velocity=-1.0)


class TestTrainClassifier:
    def blobs(self) -> LabeledDataset:
        rng = np.random.default_rng(4)
        low = rng.normal(0.2, 0.05, size=(10, 2))
        high = rng.normal(0.8, 0.05, size=(10, 2))
        return LabeledDataset(
            samples=np.vstack([low, high]), labels=("a",) * 10 + ("b",) * 10
        )

    def test_separates_blobs(self):
        data = self.blobs()
        model = pso_train_classifier(
            data, layer_sizes=(2, 3, 1), iterations=80, particles=20, seed=0
        )
        correct = sum(
            model.classify(x) == label for x, label in zip(data.samples, data.labels)
        )
        assert correct == len(data)

    def test_solves_xor(self):
        data = LabeledDataset(
            samples=np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
            labels=("off", "on", "on", "off"),
        )
        model = pso_train_classifier(
            data, layer_sizes=(2, 4, 1), iterations=500, particles=40, seed=0
        )
        for x, want in zip(data.samples, data.labels):
            assert model.classify(x) == want

    def test_trace_is_swarm_best(self):
        model = pso_train_classifier(
            self.blobs(), layer_sizes=(2, 3, 1), iterations=30, particles=10, seed=0
        )
        assert len(model.mse_trace) == 31
        for earlier, later in zip(model.mse_trace, model.mse_trace[1:]):
            assert later <= earlier

    def test_deterministic(self):
        first = pso_train_classifier(
            self.blobs(), layer_sizes=(2, 2, 1), iterations=20, particles=8, seed=7
        )
        second = pso_train_classifier(
            self.blobs(), layer_sizes=(2, 2, 1), iterations=20, particles=8, seed=7
        )
        for w1, w2 in zip(first.weights, second.weights):
            assert np.array_equal(w1, w2)

    def test_rejects_single_class(self):
        data = LabeledDataset(samples=np.eye(3), labels=("a", "a", "a"))
        with pytest.raises(ValidationError):
            pso_train_classifier(data)
