"""Particle swarm minimizer and a swarm-trained network on top of it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import ValidationError
from .dataset import LabeledDataset
from .mlp import MlpModel, _mean_squared_error, _targets

DEFAULT_PARTICLES = 30
DEFAULT_ITERATIONS = 100


@dataclass(frozen=True)
class PsoParams:
    """Swarm coefficients; the speed limit defaults to half the search range."""

    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    max_velocity: float | None = None

    def __post_init__(self) -> None:
        if self.inertia <= 0 or self.cognitive < 0 or self.social < 0:
            raise ValidationError("swarm coefficients must be positive")
        if self.max_velocity is not None and self.max_velocity <= 0:
            raise ValidationError("speed limit must be positive when given")


@dataclass(frozen=True)
class PsoResult:
    """Best point found, its fitness, and the per-iteration best trace."""

    position: np.ndarray
    fitness: float
    trace: tuple[float, ...]

    def __post_init__(self) -> None:
        position = np.asarray(self.position, dtype=np.float64).copy()
        position.flags.writeable = False
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "trace", tuple(float(f) for f in self.trace))


def pso_optimize(
    objective: Callable[[np.ndarray], float],
    dimensions: int,
    *,
    bounds: tuple[float, float] = (-10.0, 10.0),
    iterations: int = DEFAULT_ITERATIONS,
    particles: int = DEFAULT_PARTICLES,
    params: PsoParams = PsoParams(),
    topology: str = "gbest",
    seed: int = 0,
) -> PsoResult:
    """Minimize a black-box function over a box.

    Particles follow the usual velocity rule: inertia times the old
    velocity, plus random pulls toward their own best point and toward
    the best of their informants (the whole swarm, or a ring of the two
    adjacent particles when ``topology="lbest"``). Velocities are clamped
    to the speed limit and positions to the box. Zero iterations return
    the best point of the random initialization; the trace records the
    swarm-wide best after initialization and after each iteration, so it
    never increases.
    """
    if dimensions <= 0:
        raise ValidationError("dimension count must be positive")
    if particles <= 0:
        raise ValidationError("particle count must be positive")
    if iterations < 0:
        raise ValidationError("iteration count must be non-negative")
    low, high = float(bounds[0]), float(bounds[1])
    if not low < high:
        raise ValidationError("bounds must satisfy low < high")
    if topology not in ("gbest", "lbest"):
        raise ValidationError(f"unknown topology {topology!r}")
    span = high - low
    v_max = params.max_velocity if params.max_velocity is not None else span / 2.0

    rng = np.random.default_rng(seed)
    positions = rng.uniform(low, high, size=(particles, dimensions))
    velocities = rng.uniform(-v_max, v_max, size=(particles, dimensions))
    fitness = np.array([float(objective(p)) for p in positions])

    best_positions = positions.copy()
    best_fitness = fitness.copy()
    leader = int(np.argmin(best_fitness))
    trace = [float(best_fitness[leader])]

    for _ in range(iterations):
        if topology == "gbest":
            informant_best = np.broadcast_to(
                best_positions[leader], positions.shape
            )
        else:
            ring = np.stack(
                [np.roll(best_fitness, 1), best_fitness, np.roll(best_fitness, -1)]
            )
            choice = np.argmin(ring, axis=0)
            index = (np.arange(particles) + choice - 1) % particles
            informant_best = best_positions[index]
        pull_own = rng.uniform(size=positions.shape)
        pull_group = rng.uniform(size=positions.shape)
        velocities = (
            params.inertia * velocities
            + params.cognitive * pull_own * (best_positions - positions)
            + params.social * pull_group * (informant_best - positions)
        )
        np.clip(velocities, -v_max, v_max, out=velocities)
        positions = np.clip(positions + velocities, low, high)
        fitness = np.array([float(objective(p)) for p in positions])
        improved = fitness < best_fitness
        best_positions[improved] = positions[improved]
        best_fitness[improved] = fitness[improved]
        leader = int(np.argmin(best_fitness))
        trace.append(float(best_fitness[leader]))

    return PsoResult(
        position=best_positions[leader],
        fitness=float(best_fitness[leader]),
        trace=tuple(trace),
    )


def _parameter_count(layer_sizes: Sequence[int]) -> int:
    return sum(
        fan_out * fan_in + fan_out
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:])
    )


def _unpack_parameters(
    flat: np.ndarray, layer_sizes: Sequence[int]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights = []
    biases = []
    cursor = 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        count = fan_out * fan_in
        weights.append(flat[cursor : cursor + count].reshape(fan_out, fan_in).copy())
        cursor += count
        biases.append(flat[cursor : cursor + fan_out].copy())
        cursor += fan_out
    return weights, biases


def pso_train_classifier(
    dataset: LabeledDataset,
    *,
    layer_sizes: Sequence[int] | None = None,
    bounds: tuple[float, float] = (-5.0, 5.0),
    iterations: int = DEFAULT_ITERATIONS,
    particles: int = DEFAULT_PARTICLES,
    params: PsoParams = PsoParams(),
    topology: str = "gbest",
    seed: int = 0,
) -> MlpModel:
    """Train a sigmoid network by swarm search over its flattened weights.

    The objective is the mean squared error of the whole training set, so
    the swarm and a gradient trainer compete on the same loss.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot train on an empty dataset")
    classes = dataset.classes
    if len(classes) < 2:
        raise ValidationError("training data must contain at least two classes")
    if layer_sizes is None:
        layer_sizes = (dataset.dimension, 8, len(classes))
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if layer_sizes[0] != dataset.dimension:
        raise ValidationError(
            f"network expects {layer_sizes[0]} inputs but samples have {dataset.dimension}"
        )
    targets = _targets(dataset, layer_sizes[-1])

    def objective(flat: np.ndarray) -> float:
        weights, biases = _unpack_parameters(flat, layer_sizes)
        candidate = MlpModel(
            layer_sizes=layer_sizes, weights=weights, biases=biases, classes=classes
        )
        return _mean_squared_error(candidate, dataset.samples, targets)

    result = pso_optimize(
        objective,
        _parameter_count(layer_sizes),
        bounds=bounds,
        iterations=iterations,
        particles=particles,
        params=params,
        topology=topology,
        seed=seed,
    )
    weights, biases = _unpack_parameters(result.position, layer_sizes)
    model = MlpModel(
        layer_sizes=layer_sizes, weights=weights, biases=biases, classes=classes
    )
    model.mse_trace = result.trace
    return model
