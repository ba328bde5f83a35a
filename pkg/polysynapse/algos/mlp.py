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

"""
A small multilayer perceptron with sigmoid units, trained by mini-batch SGD on binary cross-entropy.

It serves both the reference voxel scorer and the post-synaptic partner classifier. Inputs are standardised with
statistics fitted on the training set and stored in the model.
"""

import logging
import math
from copy import deepcopy
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit
from sklearn.preprocessing import StandardScaler


logger = logging.getLogger(__name__)

# Largest and smallest floats strictly inside (0, 1).
_UPPER_PROBABILITY = float(np.nextafter(1.0, 0.0))
_LOWER_PROBABILITY = float(np.nextafter(0.0, 1.0))


@dataclass(frozen=True)
class TrainSpec:
    """Hyper-parameters of mlp_train."""

    learning_rate: float = 0.1
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    hidden_sizes: Tuple[int, ...] = (20,)

    def __post_init__(self):
        if not math.isfinite(self.learning_rate) or self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}.")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ValueError(f"epochs must be a non-negative integer, got {self.epochs}.")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError(f"batch_size must be a positive integer, got {self.batch_size}.")
        object.__setattr__(self, "hidden_sizes", tuple(int(ii_size) for ii_size in self.hidden_sizes))
        if any(ii_size < 1 for ii_size in self.hidden_sizes):
            raise ValueError(f"hidden_sizes must be positive, got {list(self.hidden_sizes)}.")


@dataclass
class MlpModel:
    """
    Layer weights and biases plus the input standardisation.

    Attributes:
        layer_sizes: input dimension first, 1 last.
        weights: one (fan_out, fan_in) matrix per layer.
        biases: one vector of length fan_out per layer.
        mean: per-feature mean subtracted before the first layer.
        scale: per-feature divisor applied after subtracting the mean.
    """

    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    mean: np.ndarray = field(default=None)
    scale: np.ndarray = field(default=None)

    def __post_init__(self):
        self.layer_sizes = [int(ii_size) for ii_size in self.layer_sizes]
        _check_layer_sizes(self.layer_sizes)
        self.weights = [np.asarray(ii_w, dtype=np.float64) for ii_w in self.weights]
        self.biases = [np.asarray(ii_b, dtype=np.float64).reshape(-1) for ii_b in self.biases]
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("Need one weight matrix and one bias vector per layer.")
        for ii_layer, (ii_w, ii_b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[ii_layer + 1], self.layer_sizes[ii_layer])
            if ii_w.shape != expected or ii_b.shape != (expected[0],):
                raise ValueError(f"Layer {ii_layer} has weight shape {ii_w.shape}, expected {expected}.")
            if not (np.all(np.isfinite(ii_w)) and np.all(np.isfinite(ii_b))):
                raise ValueError(f"Layer {ii_layer} has non-finite parameters.")
        input_dim = self.layer_sizes[0]
        self.mean = np.zeros(input_dim) if self.mean is None else np.asarray(self.mean, dtype=np.float64)
        self.scale = np.ones(input_dim) if self.scale is None else np.asarray(self.scale, dtype=np.float64)
        if self.mean.shape != (input_dim,) or self.scale.shape != (input_dim,) or np.any(self.scale == 0):
            raise ValueError("Standardisation vectors must match the input dimension and scale must be non-zero.")

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Vectorised forward pass: one probability per row of features."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.input_dim:
            raise ValueError(f"Expected {self.input_dim} features, got {features.shape[1]}.")
        logits = _forward(self, (features - self.mean) / self.scale)[-1][:, 0]
        return np.clip(expit(logits), _LOWER_PROBABILITY, _UPPER_PROBABILITY)

    def parameters_equal(self, other: "MlpModel") -> bool:
        """Whether two models hold identical weights and biases."""
        return (
            self.layer_sizes == other.layer_sizes
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )

    def to_dict(self) -> dict:
        """JSON-serialisable representation, weights row-major."""
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [ii_w.tolist() for ii_w in self.weights],
            "biases": [ii_b.tolist() for ii_b in self.biases],
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpModel":
        for ii_key in ["layer_sizes", "weights", "biases", "mean", "scale"]:
            if ii_key not in data:
                raise KeyError(f"MLP model is missing field '{ii_key}'.")
        return cls(
            layer_sizes=data["layer_sizes"],
            weights=[np.asarray(ii_w, dtype=np.float64) for ii_w in data["weights"]],
            biases=[np.asarray(ii_b, dtype=np.float64) for ii_b in data["biases"]],
            mean=np.asarray(data["mean"], dtype=np.float64),
            scale=np.asarray(data["scale"], dtype=np.float64),
        )


def _check_layer_sizes(layer_sizes: Sequence[int]) -> None:
    if len(layer_sizes) < 2:
        raise ValueError(f"An MLP needs at least two layer sizes, got {list(layer_sizes)}.")
    if any(int(ii_size) != ii_size or ii_size < 1 for ii_size in layer_sizes):
        raise ValueError(f"Layer sizes must be positive integers, got {list(layer_sizes)}.")
    if layer_sizes[-1] != 1:
        raise ValueError(f"The output layer must have size 1, got {layer_sizes[-1]}.")


def mlp_init(layer_sizes: Sequence[int], seed: int) -> MlpModel:
    """
    Initialises weights uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)] and biases at zero.

    The same seed always gives the same parameters.
    """
    layer_sizes = list(layer_sizes)
    _check_layer_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_sizes=layer_sizes, weights=weights, biases=biases)


def _forward(model: MlpModel, standardised: np.ndarray) -> List[np.ndarray]:
    """
    Returns the activations of every layer for a batch; the last entry is the output logit (pre-sigmoid).
    """
    activations = [standardised]
    for ii_layer, (ii_w, ii_b) in enumerate(zip(model.weights, model.biases)):
        pre_activation = activations[-1] @ ii_w.T + ii_b
        is_output = ii_layer == len(model.weights) - 1
        activations.append(pre_activation if is_output else expit(pre_activation))
    return activations


def mlp_forward(model: MlpModel, x: Sequence[float]) -> float:
    """Probability in (0, 1) for a single feature vector."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.input_dim:
        raise ValueError(f"Expected {model.input_dim} features, got {x.shape[0]}.")
    if not np.all(np.isfinite(x)):
        raise ValueError("Input features must be finite.")
    return float(model.predict_proba(x[np.newaxis, :])[0])


def _loss(model: MlpModel, standardised: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy computed from logits."""
    logits = _forward(model, standardised)[-1][:, 0]
    return float(np.mean(np.logaddexp(0.0, logits) - labels * logits))


def _gradients(model: MlpModel, standardised: np.ndarray, labels: np.ndarray) -> Tuple[list, list]:
    """Backpropagation of the mean cross-entropy over a batch."""
    activations = _forward(model, standardised)
    delta = (expit(activations[-1][:, 0]) - labels)[:, np.newaxis] / len(labels)
    weight_grads = [None] * len(model.weights)
    bias_grads = [None] * len(model.weights)
    for ii_layer in reversed(range(len(model.weights))):
        weight_grads[ii_layer] = delta.T @ activations[ii_layer]
        bias_grads[ii_layer] = delta.sum(axis=0)
        if ii_layer > 0:
            hidden = activations[ii_layer]
            delta = (delta @ model.weights[ii_layer]) * hidden * (1.0 - hidden)
    return weight_grads, bias_grads


def _as_training_arrays(samples, input_dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Splits (vector, label) samples into a feature matrix and a label vector."""
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        features, labels = samples
    else:
        samples = list(samples)
        if not samples:
            raise ValueError("No training samples supplied.")
        features = np.asarray([ii_vector for ii_vector, _ in samples], dtype=np.float64)
        labels = np.asarray([ii_label for _, ii_label in samples], dtype=np.float64)
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if features.shape[0] != labels.shape[0]:
        raise ValueError(f"Got {features.shape[0]} feature rows but {labels.shape[0]} labels.")
    if features.shape[1] != input_dim:
        raise ValueError(f"Expected {input_dim} features, got {features.shape[1]}.")
    if not np.all(np.isin(labels, [0.0, 1.0])):
        raise ValueError("Labels must be 0 or 1.")
    if len(np.unique(labels)) < 2:
        raise ValueError("Training data must contain both classes.")
    if not np.all(np.isfinite(features)):
        raise ValueError("Training features must be finite.")
    return features, labels


def mlp_train(model: MlpModel, samples, spec: TrainSpec) -> MlpModel:
    """
    Mini-batch SGD on binary cross-entropy.

    Args:
        model: the starting parameters; it is not modified.
        samples: a sequence of (feature vector, label) pairs or a (features, labels) tuple of arrays.
        spec: learning rate, epochs, batch size and shuffling seed.

    Returns:
        A new model holding the parameters with the lowest full-set loss seen (the starting parameters count), and
        the standardisation fitted on the samples.
    """
    features, labels = _as_training_arrays(samples, model.input_dim)
    scaler = StandardScaler().fit(features)
    trained = deepcopy(model)
    trained.mean = scaler.mean_.astype(np.float64)
    trained.scale = scaler.scale_.astype(np.float64)
    standardised = (features - trained.mean) / trained.scale

    best_loss = _loss(trained, standardised, labels)
    best_weights = [ii_w.copy() for ii_w in trained.weights]
    best_biases = [ii_b.copy() for ii_b in trained.biases]
    logger.info("Training MLP %s on %d samples, initial loss %.5f.", trained.layer_sizes, len(labels), best_loss)

    rng = np.random.default_rng(spec.seed)
    n_samples = len(labels)
    for ii_epoch in range(spec.epochs):
        order = rng.permutation(n_samples)
        for ii_start in range(0, n_samples, spec.batch_size):
            batch = order[ii_start : ii_start + spec.batch_size]
            weight_grads, bias_grads = _gradients(trained, standardised[batch], labels[batch])
            for ii_layer in range(len(trained.weights)):
                trained.weights[ii_layer] -= spec.learning_rate * weight_grads[ii_layer]
                trained.biases[ii_layer] -= spec.learning_rate * bias_grads[ii_layer]
        epoch_loss = _loss(trained, standardised, labels)
        if not math.isfinite(epoch_loss):
            raise FloatingPointError(f"MLP training diverged at epoch {ii_epoch}: loss is {epoch_loss}.")
        logger.debug("Epoch %d loss %.5f.", ii_epoch, epoch_loss)
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_weights = [ii_w.copy() for ii_w in trained.weights]
            best_biases = [ii_b.copy() for ii_b in trained.biases]

    trained.weights = best_weights
    trained.biases = best_biases
    logger.info("Finished MLP training, loss %.5f.", best_loss)
    return trained


def mlp_gradient_check(model: MlpModel, sample: Tuple[Sequence[float], float], step: float = 1e-5) -> float:
    """
    Largest relative error between backpropagated gradients and central finite differences over every parameter.

    The relative error of a parameter is |analytic - numeric| / max(|analytic| + |numeric|, 1e-4), so gradients
    smaller than 1e-4 are compared on an absolute scale.
    """
    x, label = sample
    standardised = ((np.asarray(x, dtype=np.float64).reshape(-1) - model.mean) / model.scale)[np.newaxis, :]
    labels = np.asarray([float(label)])
    weight_grads, bias_grads = _gradients(model, standardised, labels)
    perturbed = deepcopy(model)

    max_error = 0.0
    for parameters, analytic_grads in ((perturbed.weights, weight_grads), (perturbed.biases, bias_grads)):
        for ii_array, ii_analytic in zip(parameters, analytic_grads):
            for index in np.ndindex(ii_array.shape):
                original = ii_array[index]
                ii_array[index] = original + step
                loss_plus = _loss(perturbed, standardised, labels)
                ii_array[index] = original - step
                loss_minus = _loss(perturbed, standardised, labels)
                ii_array[index] = original
                numeric = (loss_plus - loss_minus) / (2.0 * step)
                analytic = ii_analytic[index]
                error = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-4)
                max_error = max(max_error, error)
    return max_error
