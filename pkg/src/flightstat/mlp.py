"""Fully connected multilayer perceptron regressor, trained from scratch.

Default architecture: four rectifier hidden layers of 300, 200, 100,
and 50 units feeding a single linear output unit.  Each unit computes
f(b + x . w).  Training is plain seeded mini-batch stochastic gradient
descent on mean squared error over the standardized target; predictions
are mapped back to minutes through the stored target moments.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .features import EncodedDataset, StandardizationParams
from .numerics import LinearModel

DEFAULT_HIDDEN_SIZES = (300, 200, 100, 50)


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str  # "relu" | "identity"

    def __post_init__(self):
        if self.activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError("bias length must match output width")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("layer parameters must be finite")


@dataclass
class MlpModel:
    layers: list[Layer]
    column_names: list[str] = field(default_factory=list)
    input_standardization: StandardizationParams | None = None
    target_mean: float = 0.0
    target_sd: float = 1.0

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if b.weights.shape[1] != a.weights.shape[0]:
                raise ValueError("adjacent layer dimensions do not chain")
        if self.layers and self.layers[-1].activation != "identity":
            raise ValueError("final layer activation must be identity")

    @property
    def sizes(self) -> list[int]:
        return [self.layers[0].weights.shape[1]] + [l.weights.shape[0] for l in self.layers]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 42
    validation_fraction: float = 0.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must lie in [0, 0.5]")


@dataclass
class TrainHistory:
    entries: list[tuple[float, float | None]] = field(default_factory=list)  # (train MSE, val MSE)


def init_mlp(sizes: list[int], seed: int) -> MlpModel:
    """Build an untrained network with the given layer widths.

    Weights are drawn uniformly in +-sqrt(6 / (fan_in + fan_out)),
    biases start at zero.  Hidden layers use the rectifier, the final
    layer is linear.  Deterministic in seed.
    """
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ValueError(f"need at least two positive layer sizes, got {sizes}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        layers.append(
            Layer(
                weights=rng.uniform(-limit, limit, size=(fan_out, fan_in)),
                bias=np.zeros(fan_out),
                activation="identity" if i == len(sizes) - 2 else "relu",
            )
        )
    return MlpModel(layers)


def _forward_raw(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Network output on its training scale, for a (n, d) batch."""
    a = x
    for layer in model.layers:
        z = a @ layer.weights.T + layer.bias
        a = np.maximum(0.0, z) if layer.activation == "relu" else z
    return a[:, 0]


def forward(model: MlpModel, x) -> float:
    """Evaluate the network on one input vector; returns minutes."""
    x = np.asarray(x, dtype=float)
    d = model.layers[0].weights.shape[1]
    if x.shape != (d,):
        raise ValueError(f"input has shape {x.shape}, model expects ({d},)")
    return float(_forward_raw(model, x[None, :])[0] * model.target_sd + model.target_mean)


def forward_many(model: MlpModel, x) -> np.ndarray:
    """Vectorized :func:`forward` over the rows of x; returns minutes."""
    x = np.asarray(x, dtype=float)
    d = model.layers[0].weights.shape[1]
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"matrix has shape {x.shape}, model expects (n, {d})")
    return _forward_raw(model, x) * model.target_sd + model.target_mean


def loss_and_gradients(model: MlpModel, x, y) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean squared error of the raw network output on a batch, with
    exact gradients for every weight matrix and bias vector.

    Gradients come back as one (dW, db) pair per layer, in layer order.
    The target y is expected on the network's output scale (the
    standardized target during training).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a non-empty (n, d) matrix")
    if y.shape != (x.shape[0],):
        raise ValueError("target length must match batch size")

    # forward pass, keeping pre-activations for the backward sweep
    activations = [x]
    pre = []
    a = x
    for layer in model.layers:
        z = a @ layer.weights.T + layer.bias
        pre.append(z)
        a = np.maximum(0.0, z) if layer.activation == "relu" else z
        activations.append(a)
    out = activations[-1][:, 0]
    n = len(y)
    residual = out - y
    mse = float(np.mean(residual**2))

    delta = (2.0 / n) * residual[:, None]  # dL/d(output pre-activation)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        grads[i] = (delta.T @ activations[i], delta.sum(axis=0))
        if i > 0:
            delta = delta @ model.layers[i].weights
            if model.layers[i - 1].activation == "relu":
                delta = delta * (pre[i - 1] > 0.0)
    return mse, grads


def train_mlp(
    dataset: EncodedDataset,
    config: TrainConfig,
    hidden_sizes: tuple[int, ...] = DEFAULT_HIDDEN_SIZES,
) -> tuple[MlpModel, TrainHistory]:
    """Train on an encoded, standardized dataset.

    The target is standardized internally (population moments, stored on
    the model for de-standardizing predictions).  Shuffling and
    initialization are both derived from config.seed, so equal inputs
    give identical models and histories.
    """
    if dataset.standardization is None:
        raise ValueError("dataset must be standardized before MLP training")
    n, d = dataset.matrix.shape
    if n < config.batch_size:
        raise ValueError(f"need at least batch_size={config.batch_size} rows, got {n}")

    target_mean = float(dataset.target.mean())
    target_sd = float(dataset.target.std())
    if target_sd == 0.0:
        target_sd = 1.0
    y_all = (dataset.target - target_mean) / target_sd

    model = init_mlp([d, *hidden_sizes, 1], seed=config.seed)
    model.column_names = list(dataset.column_names)
    model.input_standardization = dataset.standardization
    model.target_mean = target_mean
    model.target_sd = target_sd

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    n_val = int(math.floor(n * config.validation_fraction))
    val_idx, fit_idx = perm[:n_val], perm[n_val:]
    x_fit, y_fit = dataset.matrix[fit_idx], y_all[fit_idx]
    x_val, y_val = dataset.matrix[val_idx], y_all[val_idx]

    history = TrainHistory()
    for _ in range(config.epochs):
        order = rng.permutation(len(x_fit))
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            _, grads = loss_and_gradients(model, x_fit[batch], y_fit[batch])
            for layer, (dw, db) in zip(model.layers, grads):
                layer.weights -= config.learning_rate * dw
                layer.bias -= config.learning_rate * db
        for layer in model.layers:
            if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.bias))):
                raise ArithmeticError("training diverged: non-finite parameters")
        train_mse = float(np.mean((_forward_raw(model, x_fit) - y_fit) ** 2))
        val_mse = float(np.mean((_forward_raw(model, x_val) - y_val) ** 2)) if n_val else None
        history.entries.append((train_mse, val_mse))
    return model, history


# --- persistence payload --------------------------------------------------


def to_params(model: MlpModel) -> dict:
    return {
        "sizes": model.sizes,
        "layers": [
            {
                "weights": [list(row) for row in layer.weights],
                "bias": list(layer.bias),
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
        "column_names": list(model.column_names),
        "input_standardization": (
            model.input_standardization.to_dict() if model.input_standardization else None
        ),
        "target_mean": model.target_mean,
        "target_sd": model.target_sd,
    }


def from_params(doc: dict) -> MlpModel:
    layers = [
        Layer(
            weights=np.array(entry["weights"], dtype=float),
            bias=np.array(entry["bias"], dtype=float),
            activation=entry["activation"],
        )
        for entry in doc["layers"]
    ]
    std = doc.get("input_standardization")
    return MlpModel(
        layers,
        column_names=list(doc["column_names"]),
        input_standardization=StandardizationParams.from_dict(std) if std else None,
        target_mean=float(doc["target_mean"]),
        target_sd=float(doc["target_sd"]),
    )


def as_linear_equivalent(model: MlpModel) -> LinearModel | None:
    """Collapse an all-identity network to its equivalent linear model.

    Returns None when any hidden layer is nonlinear.  Used by tests to
    compare a linear-activation network against a closed-form fit.
    """
    if any(layer.activation != "identity" for layer in model.layers):
        return None
    w = model.layers[0].weights
    b = model.layers[0].bias
    for layer in model.layers[1:]:
        b = layer.weights @ b + layer.bias
        w = layer.weights @ w
    coeffs = tuple(float(v) * model.target_sd for v in w[0])
    intercept = float(b[0]) * model.target_sd + model.target_mean
    names = tuple(model.column_names) if model.column_names else tuple(f"x{i}" for i in range(w.shape[1]))
    return LinearModel(coeffs, intercept, names)
