"""A small fully connected network trained with Adam and early stopping.

Hidden layers use ReLU (subgradient 0 at the kink), the output layer is
linear, and the loss is mean squared error averaged over batch entries and
output components.  Gradients are reverse-mode and exact for the chosen
subgradient convention, which the test suite checks against central
differences.  Training keeps the best-on-validation snapshot and stops once
the validation loss has not improved for a fixed number of steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FfnnModel",
    "TrainSchedule",
    "default_schedule",
    "init_params",
    "ffnn_forward",
    "ffnn_loss_grads",
    "ffnn_train",
    "ffnn_predict",
    "flatten_params",
    "unflatten_params",
]


@dataclass(frozen=True)
class TrainSchedule:
    """Step budget and early-stopping patience, both in optimizer steps."""

    max_steps: int
    patience: int

    def __post_init__(self):
        if self.max_steps < 1 or self.patience < 1:
            raise ValueError("max_steps and patience must both be >= 1")


def default_schedule(n_train: int) -> TrainSchedule:
    """Budgets used for the experiments, keyed by training-set size."""
    if n_train < 100:
        return TrainSchedule(400_000, 100_000)
    if n_train < 5000:
        return TrainSchedule(200_000, 50_000)
    return TrainSchedule(100_000, 20_000)


@dataclass(frozen=True)
class FfnnModel:
    """Parameters plus shape metadata; ``params`` alternates W and b arrays."""

    params: list
    input_dim: int
    hidden: tuple
    output_dim: int
    best_val_loss: float = field(default=np.nan)


def _layer_dims(input_dim: int, hidden: tuple, output_dim: int) -> list[tuple[int, int]]:
    sizes = [input_dim, *hidden, output_dim]
    return list(zip(sizes[:-1], sizes[1:]))


def init_params(input_dim: int, hidden: tuple, output_dim: int,
                rng: np.random.Generator) -> list:
    """Fan-in scaled uniform weights, zero biases."""
    params = []
    for fan_in, fan_out in _layer_dims(input_dim, hidden, output_dim):
        limit = np.sqrt(6.0 / fan_in)
        params.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def ffnn_forward(params: list, X: np.ndarray) -> np.ndarray:
    """Network output for a batch of input rows."""
    a = np.atleast_2d(np.asarray(X, dtype=float))
    n_layers = len(params) // 2
    for layer in range(n_layers):
        W, b = params[2 * layer], params[2 * layer + 1]
        a = a @ W + b
        if layer < n_layers - 1:
            a = np.maximum(a, 0.0)
    return a


def ffnn_loss_grads(params: list, X: np.ndarray, Y: np.ndarray) -> tuple[float, list]:
    """MSE loss and its gradient with respect to every parameter array."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n_layers = len(params) // 2
    pre = []
    activations = [X]
    a = X
    for layer in range(n_layers):
        W, b = params[2 * layer], params[2 * layer + 1]
        z = a @ W + b
        pre.append(z)
        a = np.maximum(z, 0.0) if layer < n_layers - 1 else z
        activations.append(a)
    diff = activations[-1] - Y
    loss = float(np.mean(diff * diff))
    grads: list = [None] * len(params)
    delta = (2.0 / diff.size) * diff
    for layer in range(n_layers - 1, -1, -1):
        grads[2 * layer] = activations[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params[2 * layer].T) * (pre[layer - 1] > 0)
    return loss, grads


def flatten_params(params: list) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params]) if params else np.empty(0)


def unflatten_params(flat: np.ndarray, template: list) -> list:
    out = []
    offset = 0
    for p in template:
        out.append(np.asarray(flat[offset:offset + p.size], dtype=float).reshape(p.shape))
        offset += p.size
    return out


def ffnn_train(
    X: np.ndarray,
    Y: np.ndarray,
    X_val: np.ndarray,
    Y_val: np.ndarray,
    hidden: tuple = (),
    schedule: TrainSchedule | None = None,
    learning_rate: float = 1e-3,
    seed: int = 0,
    batch_size: int | None = None,
) -> FfnnModel:
    """Adam with early stopping; returns the best-on-validation snapshot.

    Batches are the full training set up to 1000 rows and random draws of 128
    rows beyond that.  Identical inputs and seed give identical models.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != X.shape[0]:
        raise ValueError("one target row per input row required")
    X_val = np.atleast_2d(np.asarray(X_val, dtype=float))
    Y_val = np.atleast_2d(np.asarray(Y_val, dtype=float))
    n = X.shape[0]
    if schedule is None:
        schedule = default_schedule(n)
    if batch_size is None:
        batch_size = n if n <= 1000 else 128
    rng = np.random.default_rng(seed)
    params = init_params(X.shape[1], hidden, Y.shape[1], rng)

    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    best = [p.copy() for p in params]
    best_val = float(np.mean((ffnn_forward(params, X_val) - Y_val) ** 2))
    stale = 0
    for step in range(1, schedule.max_steps + 1):
        if batch_size >= n:
            xb, yb = X, Y
        else:
            pick = rng.choice(n, size=batch_size, replace=False)
            xb, yb = X[pick], Y[pick]
        _, grads = ffnn_loss_grads(params, xb, yb)
        bc1 = 1.0 - beta1 ** step
        bc2 = 1.0 - beta2 ** step
        for k in range(len(params)):
            m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k]
            v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k] ** 2
            params[k] = params[k] - learning_rate * (m[k] / bc1) / (np.sqrt(v[k] / bc2) + adam_eps)
        val = float(np.mean((ffnn_forward(params, X_val) - Y_val) ** 2))
        if val < best_val:
            best_val = val
            best = [p.copy() for p in params]
            stale = 0
        else:
            stale += 1
            if stale >= schedule.patience:
                break
    return FfnnModel(
        params=best,
        input_dim=X.shape[1],
        hidden=tuple(hidden),
        output_dim=Y.shape[1],
        best_val_loss=best_val,
    )


def ffnn_predict(model: FfnnModel, X: np.ndarray) -> np.ndarray:
    """Network output rows for a batch (2-D) or one vector (1-D) of inputs."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    out = ffnn_forward(model.params, X)
    return out[0] if single else out
