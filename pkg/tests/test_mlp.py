import copy
import math

import numpy as np
import pytest

import oracles
from conftest import make_record
from flightstat.features import encode, fit_encoders
from flightstat.ingest import SyntheticConfig, generate_synthetic
from flightstat.mlp import (
    Layer,
    MlpModel,
    TrainConfig,
    TrainHistory,
    as_linear_equivalent,
    forward,
    forward_many,
    init_mlp,
    loss_and_gradients,
    to_params,
    train_mlp,
)


def random_tiny_model(rng):
    depth = int(rng.integers(1, 4))
    sizes = [int(rng.integers(1, 5)) for _ in range(depth + 1)] + [1]
    model = init_mlp(sizes, seed=int(rng.integers(0, 10_000)))
    # shift away from the all-zero-bias init so relu kinks are exercised
    for layer in model.layers:
        layer.bias += rng.normal(scale=0.5, size=layer.bias.shape)
    return model


def numeric_gradients(model, x, y, h=1e-5):
    """Central finite differences of the batch MSE, parameter by parameter."""
    grads = []
    for index, layer in enumerate(model.layers):
        dw = np.zeros_like(layer.weights)
        for pos in np.ndindex(layer.weights.shape):
            perturbed = copy.deepcopy(model)
            perturbed.layers[index].weights[pos] += h
            up = loss_and_gradients(perturbed, x, y)[0]
            perturbed.layers[index].weights[pos] -= 2 * h
            down = loss_and_gradients(perturbed, x, y)[0]
            dw[pos] = (up - down) / (2 * h)
        db = np.zeros_like(layer.bias)
        for pos in np.ndindex(layer.bias.shape):
            perturbed = copy.deepcopy(model)
            perturbed.layers[index].bias[pos] += h
            up = loss_and_gradients(perturbed, x, y)[0]
            perturbed.layers[index].bias[pos] -= 2 * h
            down = loss_and_gradients(perturbed, x, y)[0]
            db[pos] = (up - down) / (2 * h)
        grads.append((dw, db))
    return grads


def max_relative_error(analytic, numeric):
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-5)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


class TestInit:
    def test_paper_architecture_has_five_weight_layers(self):
        model = init_mlp([67, 300, 200, 100, 50, 1], seed=0)
        assert len(model.layers) == 5
        shapes = [layer.weights.shape for layer in model.layers]
        assert shapes == [(300, 67), (200, 300), (100, 200), (50, 100), (1, 50)]
        assert [l.activation for l in model.layers] == ["relu"] * 4 + ["identity"]

    def test_same_seed_bit_identical(self):
        a = init_mlp([4, 8, 1], seed=5)
        b = init_mlp([4, 8, 1], seed=5)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights, lb.weights)
            assert np.array_equal(la.bias, lb.bias)

    def test_biases_start_at_zero(self):
        model = init_mlp([3, 7, 1], seed=1)
        for layer in model.layers:
            assert np.all(layer.bias == 0.0)

    def test_weight_bounds(self):
        model = init_mlp([10, 20, 1], seed=2)
        for layer in model.layers:
            fan_out, fan_in = layer.weights.shape
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(layer.weights) <= limit)

    def test_invalid_sizes(self):
        for sizes in ([4], [4, 0, 1], [], [4, -2, 1]):
            with pytest.raises(ValueError):
                init_mlp(sizes, seed=0)


class TestForward:
    def test_zero_weights_return_output_bias(self):
        model = init_mlp([3, 4, 1], seed=0)
        for layer in model.layers:
            layer.weights[:] = 0.0
        model.layers[-1].bias[:] = 7.25
        for x in ([0.0, 0.0, 0.0], [5.0, -2.0, 100.0]):
            assert forward(model, x) == 7.25

    def test_single_rectified_unit_hand_computed(self):
        # hidden pre-activation 1*3 + (-5) = -2 -> rectified to 0
        model = MlpModel(
            [
                Layer(np.array([[1.0]]), np.array([-5.0]), "relu"),
                Layer(np.array([[2.0]]), np.array([0.5]), "identity"),
            ]
        )
        assert forward(model, [3.0]) == 0.5

    def test_deterministic(self):
        model = init_mlp([4, 6, 1], seed=9)
        x = [0.1, -0.2, 0.3, 4.0]
        assert forward(model, x) == forward(model, x)

    def test_dimension_mismatch(self):
        model = init_mlp([3, 2, 1], seed=0)
        with pytest.raises(ValueError):
            forward(model, [1.0, 2.0])

    def test_forward_many_matches_forward(self):
        rng = np.random.default_rng(3)
        model = init_mlp([5, 8, 3, 1], seed=3)
        x = rng.normal(size=(10, 5))
        batched = forward_many(model, x)
        for i in range(10):
            # batched BLAS paths may differ from the matvec in the last ulp
            assert batched[i] == pytest.approx(forward(model, x[i]), rel=1e-12)

    def test_piecewise_linear_in_single_input(self):
        model = init_mlp([1, 6, 4, 1], seed=11)
        for layer in model.layers:
            layer.bias += np.random.default_rng(1).normal(scale=0.3, size=layer.bias.shape)
        xs = np.linspace(-3.0, 3.0, 1201)
        ys = forward_many(model, xs[:, None])
        slopes = np.diff(ys) / np.diff(xs)
        changes = np.abs(np.diff(slopes)) > 1e-9
        # a kink interior to a grid cell perturbs two adjacent slope
        # differences, so count runs of consecutive changes as one kink
        kinks = int(np.sum(changes[1:] & ~changes[:-1]) + (1 if changes[0] else 0))
        assert kinks <= 10  # at most one kink per hidden unit


class TestGradients:
    def test_perfect_fit_batch_is_stationary(self):
        model = init_mlp([2, 3, 1], seed=0)
        for layer in model.layers:
            layer.weights[:] = 0.0
        model.layers[-1].bias[:] = 4.0
        x = np.array([[1.0, 2.0], [3.0, -1.0]])
        y = np.array([4.0, 4.0])
        mse, grads = loss_and_gradients(model, x, y)
        assert mse == 0.0
        for dw, db in grads:
            assert np.all(dw == 0.0) and np.all(db == 0.0)

    def test_matches_finite_differences_on_tiny_networks(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(30):
            model = random_tiny_model(rng)
            d = model.layers[0].weights.shape[1]
            n = int(rng.integers(1, 4))
            x = rng.normal(size=(n, d))
            y = rng.normal(size=n)
            _, analytic = loss_and_gradients(model, x, y)
            numeric = numeric_gradients(model, x, y)
            worst = max(worst, max_relative_error(analytic, numeric))
        assert worst < 1e-4

    def test_linear_network_matches_closed_form_gradient(self):
        rng = np.random.default_rng(7)
        w = rng.normal(size=(1, 3))
        b = rng.normal(size=1)
        model = MlpModel([Layer(w.copy(), b.copy(), "identity")])
        x = rng.normal(size=(8, 3))
        y = rng.normal(size=8)
        residual = x @ w[0] + b[0] - y
        expected_dw = 2.0 / 8 * residual @ x
        expected_db = 2.0 / 8 * residual.sum()
        _, grads = loss_and_gradients(model, x, y)
        np.testing.assert_allclose(grads[0][0][0], expected_dw, atol=1e-12)
        assert grads[0][1][0] == pytest.approx(expected_db, abs=1e-12)

    def test_empty_batch_rejected(self):
        model = init_mlp([2, 2, 1], seed=0)
        with pytest.raises(ValueError):
            loss_and_gradients(model, np.empty((0, 2)), np.empty(0))


def tiny_dataset(n=600, seed=6):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        dep = float(rng.exponential(15.0))
        dist = float(rng.uniform(200.0, 2000.0))
        arr = 0.8 * dep + 0.01 * dist
        records.append(
            make_record(
                month=int(rng.integers(1, 13)),
                flight_num=str(i % 20),
                dep_delay=dep,
                distance=dist,
                arr_delay=arr,
                arr_del15=int(arr > 15),
            )
        )
    spec = fit_encoders(records)
    return encode(records, spec, standardize=True)


class TestTrainMlp:
    def test_converges_on_noiseless_linear_target(self):
        dataset = tiny_dataset()
        config = TrainConfig(epochs=100, batch_size=64, learning_rate=0.02, seed=0)
        model, history = train_mlp(dataset, config, hidden_sizes=(16,))
        first = history.entries[0][0]
        last = history.entries[-1][0]
        assert last < 0.01 * max(first, 1.0)

    def test_zero_epochs_returns_initialized_model(self):
        dataset = tiny_dataset(n=200)
        config = TrainConfig(epochs=0, batch_size=32, seed=3)
        model, history = train_mlp(dataset, config, hidden_sizes=(8,))
        d = dataset.matrix.shape[1]
        fresh = init_mlp([d, 8, 1], seed=3)
        for trained_layer, fresh_layer in zip(model.layers, fresh.layers):
            assert np.array_equal(trained_layer.weights, fresh_layer.weights)
            assert np.array_equal(trained_layer.bias, fresh_layer.bias)
        assert history.entries == []

    def test_same_seed_identical_history(self):
        dataset = tiny_dataset(n=300)
        config = TrainConfig(epochs=5, batch_size=32, learning_rate=0.005, seed=10,
                             validation_fraction=0.2)
        _, first = train_mlp(dataset, config, hidden_sizes=(8,))
        _, second = train_mlp(dataset, config, hidden_sizes=(8,))
        assert first.entries == second.entries
        assert all(v is not None for _, v in first.entries)

    def test_requires_standardized_dataset(self):
        dataset = tiny_dataset(n=200)
        dataset.standardization = None
        with pytest.raises(ValueError):
            train_mlp(dataset, TrainConfig(epochs=1, batch_size=16))

    def test_requires_enough_rows_for_a_batch(self):
        dataset = tiny_dataset(n=100)
        with pytest.raises(ValueError):
            train_mlp(dataset, TrainConfig(epochs=1, batch_size=128))

    def test_divergence_raises_rather_than_poisoning(self):
        dataset = tiny_dataset(n=300)
        config = TrainConfig(epochs=3, batch_size=32, learning_rate=1e6, seed=0)
        with np.errstate(over="ignore", invalid="ignore"), pytest.raises(ArithmeticError):
            train_mlp(dataset, config, hidden_sizes=(8,))

    def test_history_one_entry_per_epoch(self):
        dataset = tiny_dataset(n=200)
        config = TrainConfig(epochs=4, batch_size=64, seed=1)
        _, history = train_mlp(dataset, config, hidden_sizes=(4,))
        assert len(history.entries) == 4

    def test_config_validation(self):
        for bad in (
            dict(epochs=-1),
            dict(batch_size=0),
            dict(learning_rate=0.0),
            dict(validation_fraction=0.6),
        ):
            with pytest.raises(ValueError):
                TrainConfig(**bad)

    def test_identity_one_hidden_layer_matches_ols(self):
        # SGD on an all-identity network and the closed-form fit must
        # land on the same predictions for a noiseless linear target.
        rng = np.random.default_rng(12)
        n = 400
        x = rng.normal(size=(n, 2))
        y = 3.0 * x[:, 0] - 2.0 * x[:, 1] + 0.5
        model = init_mlp([2, 4, 1], seed=4)
        for layer in model.layers:
            layer.activation = "identity"
        model.layers[-1].activation = "identity"
        for _ in range(4000):
            _, grads = loss_and_gradients(model, x, y)
            for layer, (dw, db) in zip(model.layers, grads):
                layer.weights -= 0.05 * dw
                layer.bias -= 0.05 * db
        coeffs, intercept = oracles.ols_fit(x.tolist(), y.tolist(), with_intercept=True)
        linear = as_linear_equivalent(model)
        predictions = forward_many(model, x)
        reference = x @ np.array(coeffs) + intercept
        rms = float(np.sqrt(np.mean((predictions - reference) ** 2)))
        assert rms < 0.1
        assert linear is not None

    def test_model_invariants(self):
        with pytest.raises(ValueError):
            MlpModel(
                [
                    Layer(np.zeros((3, 2)), np.zeros(3), "relu"),
                    Layer(np.zeros((1, 4)), np.zeros(1), "identity"),
                ]
            )
        with pytest.raises(ValueError):
            MlpModel([Layer(np.zeros((1, 2)), np.zeros(1), "relu")])
