# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

# Created date: 19th October 2026
# Copyright 2026 The Polysynapse Authors

"""Tests for the multilayer perceptron in algos/mlp.py"""

import math

import numpy as np
import pytest

from polysynapse.algos.mlp import MlpModel, TrainSpec, mlp_forward, mlp_gradient_check, mlp_init, mlp_train
from tests.utilities.independent_implementations import sigmoid_network


def separable_samples(n_per_class: int = 100, seed: int = 0):
    """Two well separated Gaussian clusters in 2D labelled 0 and 1."""
    rng = np.random.default_rng(seed)
    negatives = rng.normal(-2.0, 0.5, size=(n_per_class, 2))
    positives = rng.normal(2.0, 0.5, size=(n_per_class, 2))
    features = np.concatenate([negatives, positives])
    labels = np.concatenate([np.zeros(n_per_class), np.ones(n_per_class)])
    return features, labels


def test_init_is_seeded_and_bounded():
    first = mlp_init([4, 3, 1], seed=7)
    second = mlp_init([4, 3, 1], seed=7)
    assert first.parameters_equal(second)
    assert not first.parameters_equal(mlp_init([4, 3, 1], seed=8))
    assert [ii_w.shape for ii_w in first.weights] == [(3, 4), (1, 3)]
    assert np.all(np.abs(first.weights[0]) <= 0.5)
    assert all(np.all(ii_b == 0) for ii_b in first.biases)


@pytest.mark.parametrize("layer_sizes", [[3], [3, 0, 1], [3, 2]])
def test_init_rejects_bad_layer_sizes(layer_sizes):
    with pytest.raises(ValueError):
        mlp_init(layer_sizes, seed=0)


def test_forward_is_a_probability():
    model = mlp_init([3, 4, 1], seed=1)
    value = mlp_forward(model, [0.1, -2.0, 5.0])
    assert 0.0 < value < 1.0
    assert value == pytest.approx(model.predict_proba(np.array([[0.1, -2.0, 5.0]]))[0])


def test_forward_input_checks():
    model = mlp_init([3, 1], seed=1)
    with pytest.raises(ValueError):
        mlp_forward(model, [1.0, 2.0])
    with pytest.raises(ValueError):
        mlp_forward(model, [1.0, np.nan, 2.0])


def test_forward_stays_strictly_inside_unit_interval():
    """Saturated logits are clipped away from exactly 0 and 1."""
    model = MlpModel([1, 1], [np.array([[1000.0]])], [np.array([0.0])])
    assert 0.0 < mlp_forward(model, [10.0]) < 1.0
    assert 0.0 < mlp_forward(model, [-10.0]) < 1.0


def test_zero_weights_give_one_half():
    model = MlpModel([3, 4, 1], [np.zeros((4, 3)), np.zeros((1, 4))], [np.zeros(4), np.zeros(1)])
    assert mlp_forward(model, [5.0, -1.0, 0.3]) == 0.5


@pytest.mark.parametrize("x", [[0.0, 0.0], [1.5, -2.0], [-3.0, 0.25]])
def test_single_layer_is_a_logistic_unit(x):
    model = MlpModel([2, 1], [np.array([[0.7, -1.3]])], [np.array([0.2])])
    expected = 1.0 / (1.0 + math.exp(-(0.7 * x[0] - 1.3 * x[1] + 0.2)))
    assert mlp_forward(model, x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_forward_matches_scalar_loops(seed):
    rng = np.random.default_rng(seed)
    weights = [rng.normal(size=(8, 4)), rng.normal(size=(1, 8))]
    biases = [rng.normal(size=8), rng.normal(size=1)]
    model = MlpModel([4, 8, 1], weights, biases)
    x = rng.normal(size=4).tolist()
    assert abs(mlp_forward(model, x) - sigmoid_network(weights, biases, x)) < 1e-12


def test_backpropagation_matches_finite_differences():
    """Fifty random networks and samples."""
    rng = np.random.default_rng(11)
    for ii_seed in range(50):
        model = mlp_init([4, 5, 3, 1], seed=ii_seed)
        sample = (rng.normal(size=4), float(ii_seed % 2))
        assert mlp_gradient_check(model, sample) < 1e-5


def test_backpropagation_matches_finite_differences_on_every_sample():
    model = mlp_init([2, 3, 1], seed=4)
    features, labels = separable_samples(5, seed=2)
    for ii_features, ii_label in zip(features, labels):
        assert mlp_gradient_check(model, (ii_features, ii_label)) < 1e-5


def test_training_separates_clusters():
    features, labels = separable_samples()
    spec = TrainSpec(learning_rate=0.5, epochs=30, batch_size=16, seed=0, hidden_sizes=(5,))
    model = mlp_train(mlp_init([2, 5, 1], seed=0), (features, labels), spec)
    predicted = model.predict_proba(features) >= 0.5
    assert np.mean(predicted == labels.astype(bool)) > 0.95


def test_long_training_classifies_separable_clusters():
    features, labels = separable_samples()
    model = mlp_train(mlp_init([2, 4, 1], seed=0), (features, labels), TrainSpec(epochs=200, hidden_sizes=(4,)))
    predicted = model.predict_proba(features) >= 0.5
    assert np.mean(predicted == labels.astype(bool)) >= 0.99


def test_training_is_deterministic_and_leaves_input_unchanged():
    features, labels = separable_samples(20)
    spec = TrainSpec(epochs=5, batch_size=8, seed=3)
    start = mlp_init([2, 4, 1], seed=0)
    start_weights = [ii_w.copy() for ii_w in start.weights]
    first = mlp_train(start, (features, labels), spec)
    second = mlp_train(start, list(zip(features, labels)), spec)
    assert first.parameters_equal(second)
    assert all(np.array_equal(a, b) for a, b in zip(start.weights, start_weights))


def test_zero_epochs_keeps_parameters_and_fits_standardisation():
    features, labels = separable_samples(10)
    start = mlp_init([2, 1], seed=0)
    trained = mlp_train(start, (features, labels), TrainSpec(epochs=0))
    assert trained.parameters_equal(start)
    assert np.allclose(trained.mean, features.mean(axis=0))
    assert np.allclose(trained.scale, features.std(axis=0))


@pytest.mark.parametrize(
    "labels",
    [np.zeros(4), np.array([0.0, 1.0, 2.0, 1.0])],
)
def test_training_label_checks(labels):
    features = np.arange(8, dtype=np.float64).reshape(4, 2)
    with pytest.raises(ValueError):
        mlp_train(mlp_init([2, 1], seed=0), (features, labels), TrainSpec(epochs=1))


def test_training_rejects_empty_samples():
    with pytest.raises(ValueError):
        mlp_train(mlp_init([2, 1], seed=0), [], TrainSpec(epochs=1))


def test_serialised_model_predicts_the_same():
    features, labels = separable_samples(10)
    model = mlp_train(mlp_init([2, 3, 1], seed=0), (features, labels), TrainSpec(epochs=2))
    restored = MlpModel.from_dict(model.to_dict())
    assert restored.parameters_equal(model)
    assert np.array_equal(restored.predict_proba(features), model.predict_proba(features))


def test_from_dict_requires_every_field():
    data = mlp_init([2, 1], seed=0).to_dict()
    del data["scale"]
    with pytest.raises(KeyError):
        MlpModel.from_dict(data)


@pytest.mark.parametrize(
    "values",
    [{"learning_rate": 0.0}, {"epochs": -1}, {"batch_size": 0}, {"hidden_sizes": (0,)}],
)
def test_train_spec_validation(values):
    with pytest.raises(ValueError):
        TrainSpec(**values)
