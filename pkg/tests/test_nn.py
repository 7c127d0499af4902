"""Network gradients against central differences, plus training behavior."""

import numpy as np
import pytest

from turinglearn.nn import (
    FfnnModel,
    TrainSchedule,
    default_schedule,
    ffnn_forward,
    ffnn_loss_grads,
    ffnn_predict,
    ffnn_train,
    flatten_params,
    init_params,
    unflatten_params,
)

ARCHITECTURES = [(), (2,), (20,), (5, 10), (10, 10), (20, 20)]


def min_preactivation_gap(params, X):
    """Distance of the closest hidden pre-activation to the ReLU kink."""
    a = np.atleast_2d(X)
    n_layers = len(params) // 2
    gap = np.inf
    for layer in range(n_layers - 1):
        z = a @ params[2 * layer] + params[2 * layer + 1]
        gap = min(gap, float(np.min(np.abs(z))))
        a = np.maximum(z, 0.0)
    return gap


def finite_difference_grads(params, X, Y, step=1e-6):
    flat = flatten_params(params)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        up = flat.copy()
        up[i] += step
        down = flat.copy()
        down[i] -= step
        loss_up, _ = ffnn_loss_grads(unflatten_params(up, params), X, Y)
        loss_down, _ = ffnn_loss_grads(unflatten_params(down, params), X, Y)
        grad[i] = (loss_up - loss_down) / (2.0 * step)
    return grad


@pytest.mark.parametrize("hidden", ARCHITECTURES, ids=lambda h: "x".join(map(str, h)) or "linear")
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradients_match_central_differences(hidden, seed):
    rng = np.random.default_rng(seed)
    params = init_params(12, hidden, 2, rng)
    for _ in range(20):
        X = rng.normal(size=(8, 12))
        if min_preactivation_gap(params, X) > 1e-5:
            break
    else:
        pytest.fail("could not draw a batch away from every ReLU kink")
    Y = rng.normal(size=(8, 2))
    _, grads = ffnn_loss_grads(params, X, Y)
    analytic = flatten_params(grads)
    numeric = finite_difference_grads(params, X, Y)
    error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
    assert error <= 1e-4


def test_loss_and_gradients_by_hand():
    # a linear 1-to-1 network: f(x) = 2x against targets (1, 3)
    params = [np.array([[2.0]]), np.array([0.0])]
    X = np.array([[1.0], [2.0]])
    Y = np.array([[1.0], [3.0]])
    loss, grads = ffnn_loss_grads(params, X, Y)
    assert loss == pytest.approx(1.0, abs=1e-15)
    assert grads[0] == pytest.approx(np.array([[3.0]]))
    assert grads[1] == pytest.approx(np.array([2.0]))


def test_forward_applies_relu_between_layers():
    params = [
        np.array([[1.0, -1.0]]),
        np.array([0.0, 0.0]),
        np.array([[1.0], [1.0]]),
        np.array([0.5]),
    ]
    out = ffnn_forward(params, np.array([[3.0], [-2.0]]))
    assert np.allclose(out, [[3.5], [2.5]])


def test_initialization_is_seeded():
    first = init_params(4, (5,), 1, np.random.default_rng(7))
    second = init_params(4, (5,), 1, np.random.default_rng(7))
    other = init_params(4, (5,), 1, np.random.default_rng(8))
    assert np.array_equal(flatten_params(first), flatten_params(second))
    assert not np.array_equal(flatten_params(first), flatten_params(other))
    # weights alternate with zero biases
    assert np.array_equal(first[1], np.zeros(5))
    assert np.array_equal(first[3], np.zeros(1))


def test_flatten_round_trip():
    params = init_params(3, (4, 2), 2, np.random.default_rng(0))
    flat = flatten_params(params)
    rebuilt = unflatten_params(flat, params)
    assert len(rebuilt) == len(params)
    for a, b in zip(params, rebuilt):
        assert np.array_equal(a, b)


def test_training_is_deterministic():
    rng = np.random.default_rng(4)
    X = rng.uniform(size=(30, 3))
    Y = rng.uniform(size=(30, 1))
    schedule = TrainSchedule(200, 50)
    a = ffnn_train(X[:20], Y[:20], X[20:], Y[20:], hidden=(5,), schedule=schedule, seed=9)
    b = ffnn_train(X[:20], Y[:20], X[20:], Y[20:], hidden=(5,), schedule=schedule, seed=9)
    assert np.array_equal(flatten_params(a.params), flatten_params(b.params))
    assert a.best_val_loss == b.best_val_loss


def test_constant_target_is_learned():
    rng = np.random.default_rng(11)
    X = rng.uniform(size=(40, 2))
    Y = np.full((40, 1), 0.7)
    X_val = rng.uniform(size=(10, 2))
    Y_val = np.full((10, 1), 0.7)
    model = ffnn_train(X, Y, X_val, Y_val, hidden=(), schedule=TrainSchedule(10_000, 2_000))
    assert model.best_val_loss <= 1e-4
    preds = ffnn_predict(model, X_val)
    assert np.max(np.abs(preds - 0.7)) <= 0.05


def test_smooth_function_regression():
    x = np.linspace(0.0, 1.0, 64)[:, None]
    y = np.sin(np.pi * x)
    x_val = np.linspace(0.007, 0.993, 32)[:, None]
    y_val = np.sin(np.pi * x_val)
    model = ffnn_train(
        x, y, x_val, y_val, hidden=(20,), schedule=TrainSchedule(20_000, 4_000), seed=0
    )
    preds = ffnn_predict(model, x_val)
    nrmse = np.sqrt(np.mean((preds - y_val) ** 2)) / np.mean(y_val)
    assert nrmse <= 0.05


def test_best_snapshot_is_what_the_model_returns():
    rng = np.random.default_rng(14)
    X = rng.uniform(size=(25, 2))
    Y = rng.uniform(size=(25, 1))
    X_val = rng.uniform(size=(8, 2))
    Y_val = rng.uniform(size=(8, 1))
    model = ffnn_train(X, Y, X_val, Y_val, hidden=(4,), schedule=TrainSchedule(500, 100))
    recomputed = float(np.mean((ffnn_forward(model.params, X_val) - Y_val) ** 2))
    assert recomputed == pytest.approx(model.best_val_loss, rel=1e-12)
    # the snapshot can never be worse than the untouched initialization
    initial = init_params(2, (4,), 1, np.random.default_rng(0))
    initial_val = float(np.mean((ffnn_forward(initial, X_val) - Y_val) ** 2))
    assert model.best_val_loss <= initial_val + 1e-15


def test_schedules_and_validation():
    assert default_schedule(50).max_steps == 400_000
    assert default_schedule(500).patience == 50_000
    assert default_schedule(10_000).max_steps == 100_000
    with pytest.raises(ValueError):
        TrainSchedule(0, 1)
    with pytest.raises(ValueError):
        TrainSchedule(10, 0)
    with pytest.raises(ValueError):
        ffnn_train(np.ones((3, 2)), np.ones((2, 1)), np.ones((1, 2)), np.ones((1, 1)))


def test_predict_handles_single_vectors():
    model = FfnnModel(
        params=[np.array([[1.0], [2.0]]), np.array([0.25])],
        input_dim=2, hidden=(), output_dim=1,
    )
    single = ffnn_predict(model, np.array([1.0, 1.0]))
    batch = ffnn_predict(model, np.array([[1.0, 1.0]]))
    assert single.shape == (1,)
    assert batch.shape == (1, 1)
    assert single[0] == pytest.approx(3.25)
    assert batch[0, 0] == pytest.approx(3.25)
