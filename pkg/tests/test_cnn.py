import dataclasses
import math

import numpy as np
import pytest

from adaffect.learners.cnn import (
    CnnConfig,
    CnnModel,
    TooShortInputError,
    _init_params,
    cnn_predict,
    cnn_predict_proba,
    cnn_train,
    expected_param_count,
)
from adaffect.learners.gradcheck import grad_check_cnn, grad_check_mtl_smooth
from adaffect.learners.mtl import build_task_graph


def separable_features(n=32, k=16, scale=8.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
    X = rng.normal(size=(n, k)) + scale / 2.0 * y[:, None]
    return X, y


class TestArchitecture:
    def test_param_count_closed_form(self):
        for k in (8, 16, 40):
            X, y = separable_features(n=12, k=k)
            model = cnn_train(X, y, CnnConfig(max_epochs=1))
            assert model.n_params() == expected_param_count(k)

    def test_param_count_formula_value(self):
        # 64*3+64 conv1, 64*64*3+64 conv2, 64*(k-4)*128+128 fc, 128*2+2 out
        k = 16
        expect = (64 * 3 + 64) + (64 * 64 * 3 + 64) + (64 * (k - 4) * 128 + 128) + (128 * 2 + 2)
        assert expected_param_count(k) == expect

    def test_too_short_input(self):
        X, y = separable_features(n=10, k=4)
        with pytest.raises(TooShortInputError):
            cnn_train(X, y)


class TestTraining:
    def test_overfits_tiny_separable_set(self):
        X, y = separable_features(n=32, k=16, scale=8.0)
        config = CnnConfig(dropout=0.0, seed=3)
        model = cnn_train(X, y, config, val_data=(X, y))
        pred = cnn_predict(model, X)
        assert np.mean(pred == y) == 1.0

    def test_patience_arithmetic_stops_at_epoch_six(self):
        # Validation labels opposite to training labels: every step toward the
        # training fit strictly raises the validation loss from epoch 1 on.
        X, y = separable_features(n=32, k=8, scale=12.0, seed=9)
        config = CnnConfig(dropout=0.0, weight_decay=0.0, learning_rate=0.01, seed=1)
        model = cnn_train(X, y, config, val_data=(X, -y))
        losses = model.history["val_loss"]
        assert all(b > a for a, b in zip(losses, losses[1:]))
        assert model.history["stopped_epoch"] == 6
        assert len(losses) == 6

    def test_class_constant_inputs_plateau_at_ln2(self):
        n, k = 32, 12
        X = np.tile(np.linspace(-1, 1, k), (n, 1))
        y = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
        config = CnnConfig(dropout=0.0, weight_decay=0.0, seed=2)
        model = cnn_train(X, y, config, val_data=(X, y))
        assert model.history["train_loss"][-1] == pytest.approx(math.log(2.0), abs=0.05)

    def test_fixed_seed_bit_reproducible(self):
        X, y = separable_features(n=24, k=10, seed=5)
        config = CnnConfig(max_epochs=5, seed=11)
        m1 = cnn_train(X, y, config)
        m2 = cnn_train(X, y, config)
        for key in m1.params:
            assert np.array_equal(m1.params[key], m2.params[key])

    def test_dropout_only_during_training(self):
        X, y = separable_features(n=16, k=8)
        model = cnn_train(X, y, CnnConfig(max_epochs=2, dropout=0.5, seed=4))
        p1 = cnn_predict_proba(model, X)
        p2 = cnn_predict_proba(model, X)
        assert np.array_equal(p1, p2)


class TestPredictions:
    def test_softmax_rows_sum_to_one(self):
        X, y = separable_features(n=20, k=9, seed=6)
        model = cnn_train(X, y, CnnConfig(max_epochs=3, seed=6))
        rng = np.random.default_rng(0)
        proba = cnn_predict_proba(model, rng.normal(size=(7, 9)))
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-6)

    def test_trained_model_matches_training_labels(self):
        X, y = separable_features(n=32, k=16, scale=8.0, seed=7)
        model = cnn_train(X, y, CnnConfig(dropout=0.0, seed=7), val_data=(X, y))
        assert np.array_equal(cnn_predict(model, X), y)

    def test_dimension_mismatch(self):
        X, y = separable_features(n=16, k=10)
        model = cnn_train(X, y, CnnConfig(max_epochs=1))
        with pytest.raises(ValueError, match="dims"):
            cnn_predict_proba(model, np.zeros((3, 12)))


class TestGradCheck:
    def test_fresh_cnn_gradients(self):
        rng = np.random.default_rng(8)
        config = CnnConfig(dropout=0.0, seed=8)
        model = CnnModel(config=config, input_dim=12)
        model.params = _init_params(12, config, rng)
        X = rng.normal(size=(4, 12))
        targets = np.array([0, 1, 0, 1])
        assert grad_check_cnn(model, X, targets, n_coords=200, seed=0) < 1e-4

    def test_zero_network_zero_input(self):
        config = CnnConfig(dropout=0.0, weight_decay=0.0)
        model = CnnModel(config=config, input_dim=10)
        model.params = {
            k: np.zeros_like(v)
            for k, v in _init_params(10, config, np.random.default_rng(0)).items()
        }
        X = np.zeros((2, 10))
        err = grad_check_cnn(model, X, np.array([0, 1]), n_coords=200, seed=1)
        assert err < 1e-4

    def test_mtl_smooth_gradients(self):
        rng = np.random.default_rng(9)
        g = build_task_graph()
        Xs = [rng.normal(size=(7, 5)) for _ in range(4)]
        Ys = [np.sign(rng.normal(size=7)) for _ in range(4)]
        W = rng.normal(size=(5, 4))
        bias = rng.normal(size=4)
        err = grad_check_mtl_smooth(W, bias, Xs, Ys, alpha=0.7, gamma=0.3, graph=g)
        assert err < 1e-6
