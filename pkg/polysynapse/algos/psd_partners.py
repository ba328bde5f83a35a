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
Segmentation-aware post-synaptic partner classification.

For every T-bar, the bodies touching a sphere around it (other than the T-bar's own body) are candidate partners. Each
(T-bar, candidate) pair is described by intensity statistics pooled over the estimated interface between the two
bodies, and an MLP decides whether the candidate holds a PSD of that T-bar.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from polysynapse.algos.mlp import MlpModel, TrainSpec, mlp_init, mlp_train
from polysynapse.base import GrayVolume, LabelVolume, Partner, Synapse, SynapseSet, TbarPrediction, check_same_dims
from polysynapse.utilities.morphology import bodies_in_sphere, box_window, dilate_mask, dilate_segment


logger = logging.getLogger(__name__)

# Statistics pooled per dilation radius: count, mean, min, max, dark count.
FEATURES_PER_RADIUS = 5
NO_INTERFACE_DISTANCE = -1.0


@dataclass(frozen=True)
class PartnerConfig:
    """Candidate sphere, interface dilation radii, dark intensity threshold and decision threshold."""

    candidate_radius: float = 15.0
    dilation_radii: Tuple[float, ...] = (1.0, 2.0)
    dark_threshold: int = 50
    decision_threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "dilation_radii", tuple(float(ii_radius) for ii_radius in self.dilation_radii))
        if not math.isfinite(self.candidate_radius) or self.candidate_radius <= 0:
            raise ValueError(f"candidate_radius must be positive, got {self.candidate_radius}.")
        if len(self.dilation_radii) == 0:
            raise ValueError("dilation_radii must not be empty.")
        if any(not math.isfinite(ii_radius) or ii_radius <= 0 for ii_radius in self.dilation_radii):
            raise ValueError(f"dilation_radii must be positive, got {list(self.dilation_radii)}.")
        if int(self.dark_threshold) != self.dark_threshold or not 0 <= self.dark_threshold <= 256:
            raise ValueError(f"dark_threshold must be an intensity in [0, 256], got {self.dark_threshold}.")
        if not 0.0 <= self.decision_threshold <= 1.0:
            raise ValueError(f"decision_threshold must lie in [0, 1], got {self.decision_threshold}.")

    @property
    def feature_length(self) -> int:
        return FEATURES_PER_RADIUS * len(self.dilation_radii) + 2


@dataclass(frozen=True)
class PartnerCandidate:
    """A (T-bar, candidate body) pair and its feature vector."""

    tbar: TbarPrediction
    body: int
    features: np.ndarray


def mask_dark_voxels(labels: LabelVolume, gray: GrayVolume, dark_threshold: int) -> LabelVolume:
    """A copy of labels with every voxel darker than dark_threshold set to 0."""
    check_same_dims(labels, gray)
    if not 0 <= dark_threshold <= 256:
        raise ValueError(f"dark_threshold must lie in [0, 256], got {dark_threshold}.")
    return LabelVolume(np.where(gray.data < dark_threshold, 0, labels.data))


def own_body(tbar: TbarPrediction, masked: LabelVolume, labels: Optional[LabelVolume] = None) -> int:
    """
    The body containing the T-bar.

    T-bars tend to sit on dark voxels, so when the masked label is 0 the unmasked labels are consulted if given.
    """
    body = masked.body_at(tbar.pos)
    if body == 0 and labels is not None:
        body = labels.body_at(tbar.pos)
    return body


def candidates_for_tbar(
    tbar: TbarPrediction, masked: LabelVolume, cfg: PartnerConfig, labels: Optional[LabelVolume] = None
) -> List[int]:
    """Ascending ids of the non-zero bodies meeting the candidate sphere, excluding the T-bar's own body."""
    bodies = bodies_in_sphere(masked, tbar.pos, cfg.candidate_radius)
    bodies.discard(own_body(tbar, masked, labels))
    bodies.discard(0)
    return sorted(bodies)


def interface_mask(labels: LabelVolume, body_a: int, body_b: int, dilation_radius: float) -> np.ndarray:
    """Intersection of the two bodies each dilated by dilation_radius."""
    if body_a == body_b:
        raise ValueError(f"Interface needs two different bodies, got {body_a} twice.")
    return dilate_segment(labels, body_a, dilation_radius) & dilate_segment(labels, body_b, dilation_radius)


def _interface_statistics(values: np.ndarray, dark_threshold: int) -> List[float]:
    if len(values) == 0:
        return [0.0] * FEATURES_PER_RADIUS
    values = values.astype(np.float64)
    return [float(len(values)), values.mean(), values.min(), values.max(), float(np.sum(values < dark_threshold))]


def extract_features(
    gray: GrayVolume,
    masked: LabelVolume,
    tbar: TbarPrediction,
    body: int,
    cfg: PartnerConfig,
    labels: Optional[LabelVolume] = None,
) -> np.ndarray:
    """
    Feature vector of one (T-bar, candidate body) pair.

    Interfaces are restricted to the candidate sphere around the T-bar. Work happens in a box around the T-bar wide
    enough that cropping cannot change any dilation inside the sphere.

    Args:
        gray: the image.
        masked: labels after mask_dark_voxels.
        tbar: the pre-synaptic point.
        body: the candidate post-synaptic body.
        cfg: partner configuration.
        labels: unmasked labels, used only to resolve the T-bar's own body.

    Returns:
        For each dilation radius: interface voxel count, mean, min and max intensity, dark voxel count. Then the
        candidate's voxel count within the sphere and the distance from the T-bar to the centroid of the interface at
        the largest radius (-1 when that interface is empty).
    """
    check_same_dims(gray, masked)
    pre_body = own_body(tbar, masked, labels)
    if body == 0:
        raise ValueError("Candidate body 0 marks ignored voxels.")
    margin = int(math.ceil(cfg.candidate_radius + max(cfg.dilation_radii)))
    window = box_window(masked.shape, tbar.pos, margin)
    labels_crop = masked.data[window]
    gray_crop = gray.data[window]

    zz, yy, xx = np.ogrid[window[0], window[1], window[2]]
    squared = (xx - tbar.pos.x) ** 2 + (yy - tbar.pos.y) ** 2 + (zz - tbar.pos.z) ** 2
    in_sphere = squared <= cfg.candidate_radius ** 2

    candidate = labels_crop == body
    features = []
    largest_interface = np.zeros(labels_crop.shape, dtype=bool)
    largest_radius = max(cfg.dilation_radii)
    for ii_radius in cfg.dilation_radii:
        if pre_body == 0 or pre_body == body:
            interface = np.zeros(labels_crop.shape, dtype=bool)
        else:
            interface = dilate_mask(labels_crop == pre_body, ii_radius) & dilate_mask(candidate, ii_radius) & in_sphere
        features.extend(_interface_statistics(gray_crop[interface], cfg.dark_threshold))
        if ii_radius == largest_radius:
            largest_interface = interface

    features.append(float(np.sum(candidate & in_sphere)))
    if largest_interface.any():
        offsets = np.argwhere(largest_interface).mean(axis=0)
        centroid = offsets + np.array([window[0].start, window[1].start, window[2].start])
        features.append(float(np.linalg.norm(centroid - np.array(tbar.pos.as_index(), dtype=np.float64))))
    else:
        features.append(NO_INTERFACE_DISTANCE)
    return np.asarray(features, dtype=np.float64)


def tbar_candidates(
    gray: GrayVolume,
    masked: LabelVolume,
    tbar: TbarPrediction,
    cfg: PartnerConfig,
    labels: Optional[LabelVolume] = None,
) -> List[PartnerCandidate]:
    """Every candidate body of one T-bar with its features."""
    return [
        PartnerCandidate(tbar, ii_body, extract_features(gray, masked, tbar, ii_body, cfg, labels))
        for ii_body in candidates_for_tbar(tbar, masked, cfg, labels)
    ]


def _map_tbars(function, items: Sequence, threads: int) -> list:
    """Applies function to each item, in order, optionally on a thread pool."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(function, items))
    return [function(ii_item) for ii_item in items]


def psd_train(
    gray: GrayVolume,
    labels: LabelVolume,
    ground_truth: SynapseSet,
    cfg: PartnerConfig = PartnerConfig(),
    train_spec: TrainSpec = TrainSpec(),
    threads: int = 1,
) -> MlpModel:
    """
    Trains the partner classifier.

    A candidate is positive iff its body holds a ground-truth partner of that T-bar, so several PSDs on one body give a
    single positive.

    Args:
        gray: the image.
        labels: the segmentation.
        ground_truth: synapses whose partners have resolved body ids.
        cfg: partner configuration.
        train_spec: MLP architecture and SGD settings.
        threads: worker threads for feature extraction.

    Returns:
        The trained model.
    """
    check_same_dims(gray, labels)
    if len(ground_truth) == 0:
        raise ValueError("Cannot train the partner classifier without ground-truth T-bars.")
    masked = mask_dark_voxels(labels, gray, cfg.dark_threshold)

    per_tbar = _map_tbars(
        lambda synapse: tbar_candidates(gray, masked, synapse.tbar, cfg, labels), ground_truth.synapses, threads
    )
    features, targets = [], []
    for ii_synapse, ii_candidates in zip(ground_truth.synapses, per_tbar):
        partner_bodies = set(ii_synapse.partner_bodies()) - {0}
        for ii_candidate in ii_candidates:
            features.append(ii_candidate.features)
            targets.append(1.0 if ii_candidate.body in partner_bodies else 0.0)

    n_positive = int(sum(targets))
    if n_positive == 0:
        raise ValueError(
            "No candidate body holds a ground-truth partner; check the ground truth matches the segmentation."
        )
    if n_positive == len(targets):
        raise ValueError("Every candidate body is a ground-truth partner; no negative examples to train on.")
    logger.info(
        "Training partner classifier on %d positive and %d negative candidates.", n_positive, len(targets) - n_positive
    )

    model = mlp_init([cfg.feature_length] + list(train_spec.hidden_sizes) + [1], train_spec.seed)
    return mlp_train(model, (np.asarray(features), np.asarray(targets)), train_spec)


def predict_partners(
    gray: GrayVolume,
    labels: LabelVolume,
    tbars: Sequence[TbarPrediction],
    model: MlpModel,
    cfg: PartnerConfig = PartnerConfig(),
    threads: int = 1,
) -> SynapseSet:
    """
    Classifies every candidate body of every T-bar and keeps those with confidence at least cfg.decision_threshold.

    The output has one synapse per input T-bar, in input order, possibly with no partners.
    """
    check_same_dims(gray, labels)
    if model.input_dim != cfg.feature_length:
        raise ValueError(
            f"Model expects {model.input_dim} features but the partner config yields {cfg.feature_length}."
        )
    masked = mask_dark_voxels(labels, gray, cfg.dark_threshold)

    def classify(tbar: TbarPrediction) -> Synapse:
        candidates = tbar_candidates(gray, masked, tbar, cfg, labels)
        if not candidates:
            logger.debug("No candidate bodies around T-bar at %s.", tuple(tbar.pos))
            return Synapse(tbar, ())
        confidences = model.predict_proba(np.stack([ii_candidate.features for ii_candidate in candidates]))
        partners = [
            Partner(ii_candidate.body, float(ii_confidence))
            for ii_candidate, ii_confidence in zip(candidates, confidences)
            if ii_confidence >= cfg.decision_threshold
        ]
        return Synapse(tbar, partners)

    synapses = _map_tbars(classify, list(tbars), threads)
    logger.info("Predicted %d partners for %d T-bars.", sum(len(ii.partners) for ii in synapses), len(synapses))
    return SynapseSet(synapses)
