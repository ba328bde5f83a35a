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
Voxel scorers: anything that maps a grayscale volume to a per-voxel T-bar probability.

The detector only relies on the `VoxelScorer` contract. `PatchMlpScorer` is the reference implementation, an MLP on
flattened intensity patches, and `FieldScorer` wraps scores computed elsewhere.
"""

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from polysynapse.algos.mlp import MlpModel, TrainSpec, mlp_init, mlp_train
from polysynapse.base import GrayVolume, Point3, ScalarField, check_same_dims


logger = logging.getLogger(__name__)


class VoxelScorer(ABC):

    """
    Contract for T-bar voxel scorers.

    Implementations return scores in [0, 1] and must be deterministic. Dense scoring is done one z-plane at a time; the
    planes are independent, so they can be spread across threads without changing the result.
    """

    kind = None

    @abstractmethod
    def _plane_scorer(self, gray: GrayVolume) -> Callable[[int], np.ndarray]:
        """Returns a function mapping a z index to the (ny, nx) scores of that plane."""

    def score_volume(self, gray: GrayVolume, threads: int = 1) -> ScalarField:
        """Dense scores for every voxel of the volume."""
        score_plane = self._plane_scorer(gray)
        nz = gray.shape[0]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                planes = list(executor.map(score_plane, range(nz)))
        else:
            planes = [score_plane(ii_z) for ii_z in range(nz)]
        return ScalarField(np.stack(planes, axis=0))

    def score_point(self, gray: GrayVolume, point: Point3) -> float:
        """Score of a single voxel."""
        gray.check_contains(point)
        return float(self._plane_scorer(gray)(point.z)[point.y, point.x])

    @abstractmethod
    def to_dict(self) -> dict:
        """JSON-serialisable representation including a "kind" key."""


class FieldScorer(VoxelScorer):
    """Returns a precomputed score field, e.g. the output of an external network."""

    kind = "precomputed"

    def __init__(self, field: ScalarField):
        self.field = field

    def _plane_scorer(self, gray: GrayVolume) -> Callable[[int], np.ndarray]:
        check_same_dims(gray, self.field)
        return lambda z: self.field.data[z]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dims": list(self.field.dims)}


def patch_windows(gray: GrayVolume, patch_radius: int) -> np.ndarray:
    """
    A view of every (2r+1)^3 intensity patch, indexed [z, y, x, dz, dy, dx].

    Intensities are scaled to [0, 1] and the volume faces are edge-replicated.
    """
    if int(patch_radius) != patch_radius or patch_radius < 0:
        raise ValueError(f"patch_radius must be a non-negative integer, got {patch_radius}.")
    side = 2 * int(patch_radius) + 1
    padded = np.pad(gray.data.astype(np.float64) / 255.0, int(patch_radius), mode="edge")
    return sliding_window_view(padded, (side, side, side))


def patch_features(gray: GrayVolume, patch_radius: int, flat_indices: np.ndarray) -> np.ndarray:
    """Flattened patches around the voxels with the given flat (x-fastest) indices."""
    windows = patch_windows(gray, patch_radius)
    zs, ys, xs = np.unravel_index(np.asarray(flat_indices, dtype=np.int64), gray.shape)
    return windows[zs, ys, xs].reshape(len(zs), -1)


class PatchMlpScorer(VoxelScorer):
    """Reference scorer: an MLP applied to the intensity patch around each voxel."""

    kind = "patch_mlp"

    def __init__(self, model: MlpModel, patch_radius: int):
        side = 2 * patch_radius + 1
        if model.input_dim != side ** 3:
            raise ValueError(
                f"Model expects {model.input_dim} inputs but patches of radius {patch_radius} have {side ** 3}."
            )
        self.model = model
        self.patch_radius = patch_radius

    def _plane_scorer(self, gray: GrayVolume) -> Callable[[int], np.ndarray]:
        windows = patch_windows(gray, self.patch_radius)
        _, ny, nx = gray.shape

        def score_plane(z: int) -> np.ndarray:
            features = windows[z].reshape(ny * nx, -1)
            return self.model.predict_proba(features).reshape(ny, nx)

        return score_plane

    def to_dict(self) -> dict:
        return {"kind": self.kind, "patch_radius": self.patch_radius, "model": self.model.to_dict()}


def scorer_from_dict(data: dict) -> VoxelScorer:
    """Rebuilds a serialised patch MLP scorer."""
    if data.get("kind") != PatchMlpScorer.kind:
        raise ValueError(f"Cannot rebuild scorer of kind '{data.get('kind')}' from a file.")
    for ii_key in ["patch_radius", "model"]:
        if ii_key not in data:
            raise KeyError(f"Scorer is missing field '{ii_key}'.")
    return PatchMlpScorer(MlpModel.from_dict(data["model"]), int(data["patch_radius"]))


def reference_scorer_train(
    gray: GrayVolume, labels: np.ndarray, patch_radius: int, train_spec: TrainSpec = TrainSpec()
) -> PatchMlpScorer:
    """
    Trains the reference patch MLP on voxel labels.

    All positive voxels are used together with an equal number of negatives sampled uniformly without replacement
    (seeded by train_spec.seed).

    Args:
        gray: the training image.
        labels: boolean array of the same shape, True for positive voxels.
        patch_radius: half side of the cubic intensity patch.
        train_spec: MLP architecture and SGD settings.

    Returns:
        The trained scorer.
    """
    labels = np.asarray(labels, dtype=bool)
    if labels.shape != gray.shape:
        raise ValueError(f"Label shape {labels.shape} does not match volume shape {gray.shape}.")
    positives = np.flatnonzero(labels)
    negatives = np.flatnonzero(~labels)
    if len(positives) == 0 or len(negatives) == 0:
        raise ValueError("Voxel labels must contain both positive and negative voxels.")

    rng = np.random.default_rng(train_spec.seed)
    n_negatives = min(len(positives), len(negatives))
    if n_negatives < len(positives):
        logger.warning("Only %d negatives available for %d positives.", n_negatives, len(positives))
    sampled_negatives = np.sort(rng.choice(negatives, size=n_negatives, replace=False))
    indices = np.concatenate([positives, sampled_negatives])
    targets = np.concatenate([np.ones(len(positives)), np.zeros(n_negatives)])
    features = patch_features(gray, patch_radius, indices)
    logger.info("Training patch scorer on %d positive and %d negative voxels.", len(positives), n_negatives)

    side = 2 * int(patch_radius) + 1
    model = mlp_init([side ** 3] + list(train_spec.hidden_sizes) + [1], train_spec.seed)
    model = mlp_train(model, (features, targets), train_spec)
    return PatchMlpScorer(model, int(patch_radius))
