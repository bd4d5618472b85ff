"""Feed-forward network trained by per-sample gradient descent.

Every layer applies a logistic sigmoid and training minimizes squared
error, updating the weights after each presented sample. Networks with a
single output unit model two classes on one sigmoid; wider output layers
hold one unit per class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from .dataset import LabeledDataset

MLP_DOC_VERSION = 1

DEFAULT_HIDDEN = 24
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 100


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable elementwise logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


@dataclass(eq=False)
class MlpModel:
    """Weights, biases, and the class names the output units stand for."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    classes: tuple[str, ...]
    mse_trace: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ValidationError("layer sizes must be at least two positive widths")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValidationError("one weight matrix and bias vector per layer gap")
        for level, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[level + 1], sizes[level]):
                raise ValidationError(f"weight shape mismatch at layer {level}")
            if b.shape != (sizes[level + 1],):
                raise ValidationError(f"bias shape mismatch at layer {level}")
        classes = tuple(self.classes)
        if sizes[-1] == 1:
            if len(classes) != 2:
                raise ValidationError("a single output unit requires two classes")
        elif len(classes) != sizes[-1]:
            raise ValidationError("output width must match the class count")
        self.layer_sizes = sizes
        self.classes = classes

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    def forward(self, x: np.ndarray) -> list[np.ndarray]:
        """Activations per layer, input first, output last."""
        a = np.asarray(x, dtype=np.float64)
        if a.shape != (self.input_size,):
            raise ValidationError(
                f"expected input of size {self.input_size}, got shape {a.shape}"
            )
        activations = [a]
        for w, b in zip(self.weights, self.biases):
            a = sigmoid(w @ a + b)
            activations.append(a)
        return activations

    def outputs(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[-1]

    def predict_proba(self, x: np.ndarray) -> dict[str, float]:
        """Class distribution for one sample, summing to one."""
        out = self.outputs(x)
        if self.layer_sizes[-1] == 1:
            scores = np.array([1.0 - out[0], out[0]])
        else:
            scores = out
        mass = float(scores.sum())
        if mass <= 0.0:
            scores = np.full(len(self.classes), 1.0 / len(self.classes))
        else:
            scores = scores / mass
        return {name: float(p) for name, p in zip(self.classes, scores)}

    def classify(self, x: np.ndarray) -> str:
        proba = self.predict_proba(x)
        return max(self.classes, key=lambda name: proba[name])

    def to_doc(self) -> dict:
        return {
            "version": MLP_DOC_VERSION,
            "kind": "mlp",
            "layer_sizes": list(self.layer_sizes),
            "classes": list(self.classes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "MlpModel":
        if doc.get("version") != MLP_DOC_VERSION:
            raise ValidationError(f"unsupported network document version {doc.get('version')!r}")
        return cls(
            layer_sizes=tuple(doc["layer_sizes"]),
            weights=[np.array(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.array(b, dtype=np.float64) for b in doc["biases"]],
            classes=tuple(doc["classes"]),
        )


def _targets(dataset: LabeledDataset, output_size: int) -> np.ndarray:
    """One row of desired outputs per sample."""
    indices = dataset.class_indices()
    if output_size == 1:
        if len(dataset.classes) != 2:
            raise ValidationError("a single output unit requires exactly two classes")
        return indices.astype(np.float64)[:, None]
    if output_size != len(dataset.classes):
        raise ValidationError(
            f"{output_size} output units cannot encode {len(dataset.classes)} classes"
        )
    targets = np.zeros((len(dataset), output_size))
    targets[np.arange(len(dataset)), indices] = 1.0
    return targets


def _init_parameters(
    layer_sizes: Sequence[int], rng: np.random.Generator
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.uniform(-0.5, 0.5, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-0.5, 0.5, size=fan_out))
    return weights, biases


def _sample_gradients(
    model: MlpModel, x: np.ndarray, y: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], float]:
    """Backpropagated gradients of the squared error on one sample."""
    activations = model.forward(x)
    output = activations[-1]
    # loss = sum((output - y)^2); sigmoid derivative is a * (1 - a)
    delta = 2.0 * (output - y) * output * (1.0 - output)
    grad_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(model.biases)
    for level in range(len(model.weights) - 1, -1, -1):
        grad_w[level] = np.outer(delta, activations[level])
        grad_b[level] = delta
        if level > 0:
            hidden = activations[level]
            delta = (model.weights[level].T @ delta) * hidden * (1.0 - hidden)
    loss = float(np.sum((output - y) ** 2))
    return grad_w, grad_b, loss


def _mean_squared_error(model: MlpModel, samples: np.ndarray, targets: np.ndarray) -> float:
    activations = np.asarray(samples, dtype=np.float64)
    for w, b in zip(model.weights, model.biases):
        activations = sigmoid(activations @ w.T + b)
    return float(np.mean(np.sum((activations - targets) ** 2, axis=1)))


def mlp_train_incremental(
    dataset: LabeledDataset,
    *,
    layer_sizes: Sequence[int] | None = None,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> MlpModel:
    """Fit a network sample by sample, reshuffling each epoch.

    The default architecture puts one hidden layer of 24 units between
    the inputs and one output unit per class. The returned model keeps a
    per-epoch mean squared error trace.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot train on an empty dataset")
    if learning_rate <= 0:
        raise ValidationError("learning rate must be positive")
    if epochs < 0:
        raise ValidationError("epoch count must be non-negative")
    classes = dataset.classes
    if len(classes) < 2:
        raise ValidationError("training data must contain at least two classes")
    if layer_sizes is None:
        layer_sizes = (dataset.dimension, DEFAULT_HIDDEN, len(classes))
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if layer_sizes[0] != dataset.dimension:
        raise ValidationError(
            f"network expects {layer_sizes[0]} inputs but samples have {dataset.dimension}"
        )
    rng = np.random.default_rng(seed)
    weights, biases = _init_parameters(layer_sizes, rng)
    model = MlpModel(
        layer_sizes=layer_sizes, weights=weights, biases=biases, classes=classes
    )
    targets = _targets(dataset, layer_sizes[-1])
    trace: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(len(dataset))
        for row in order:
            grad_w, grad_b, _ = _sample_gradients(
                model, dataset.samples[row], targets[row]
            )
            for level in range(len(model.weights)):
                model.weights[level] -= learning_rate * grad_w[level]
                model.biases[level] -= learning_rate * grad_b[level]
        trace.append(_mean_squared_error(model, dataset.samples, targets))
    model.mse_trace = tuple(trace)
    return model


def gradient_check(
    layer_sizes: Sequence[int] = (3, 2, 1),
    *,
    samples: int = 4,
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """Largest relative error between backprop and central differences.

    Builds a random network and batch, then compares the analytic
    gradient of the batch loss with a symmetric finite difference for
    every single weight and bias.
    """
    layer_sizes = tuple(int(s) for s in layer_sizes)
    rng = np.random.default_rng(seed)
    weights, biases = _init_parameters(layer_sizes, rng)
    if layer_sizes[-1] == 1:
        classes: tuple[str, ...] = ("a", "b")
    else:
        classes = tuple(f"c{i}" for i in range(layer_sizes[-1]))
    model = MlpModel(
        layer_sizes=layer_sizes, weights=weights, biases=biases, classes=classes
    )
    xs = rng.uniform(-1.0, 1.0, size=(samples, layer_sizes[0]))
    ys = rng.uniform(0.05, 0.95, size=(samples, layer_sizes[-1]))

    def batch_loss() -> float:
        return sum(
            float(np.sum((model.outputs(x) - y) ** 2)) for x, y in zip(xs, ys)
        )

    analytic_w = [np.zeros_like(w) for w in model.weights]
    analytic_b = [np.zeros_like(b) for b in model.biases]
    for x, y in zip(xs, ys):
        grad_w, grad_b, _ = _sample_gradients(model, x, y)
        for level in range(len(analytic_w)):
            analytic_w[level] += grad_w[level]
            analytic_b[level] += grad_b[level]

    worst = 0.0

    def compare(param: np.ndarray, grad: np.ndarray) -> None:
        nonlocal worst
        flat_param = param.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat_param.size):
            original = flat_param[i]
            flat_param[i] = original + step
            plus = batch_loss()
            flat_param[i] = original - step
            minus = batch_loss()
            flat_param[i] = original
            numeric = (plus - minus) / (2.0 * step)
            scale = max(abs(numeric), abs(flat_grad[i]), 1e-8)
            worst = max(worst, abs(numeric - flat_grad[i]) / scale)

    for level in range(len(model.weights)):
        compare(model.weights[level], analytic_w[level])
        compare(model.biases[level], analytic_b[level])
    return worst
