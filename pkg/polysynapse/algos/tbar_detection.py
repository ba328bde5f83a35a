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
Pre-synaptic T-bar detection: voxel labels for training, and the reduction of dense voxel scores to point predictions.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from polysynapse.algos.scorers import VoxelScorer
from polysynapse.base import GrayVolume, Point3, ScalarField, TbarPrediction, as_point, shape_from_dims
from polysynapse.utilities.morphology import (
    ball_window,
    brightest_in_ball,
    check_radius,
    dilate_mask,
    gaussian_smooth,
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectorConfig:
    """Parameters of label generation and of the score-to-point reduction."""

    positive_radius: float = 7.0
    smooth_sigma: float = 1.0
    score_threshold: float = 0.5
    nms_radius: float = 27.0
    shift_radius: float = 3.0
    patch_radius: int = 2

    def __post_init__(self):
        for ii_name in ["positive_radius", "nms_radius", "shift_radius"]:
            check_radius(getattr(self, ii_name), ii_name)
        if not math.isfinite(self.smooth_sigma) or self.smooth_sigma <= 0:
            raise ValueError(f"smooth_sigma must be positive, got {self.smooth_sigma}.")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError(f"score_threshold must lie in [0, 1], got {self.score_threshold}.")
        if int(self.patch_radius) != self.patch_radius or self.patch_radius < 0:
            raise ValueError(f"patch_radius must be a non-negative integer, got {self.patch_radius}.")


def make_voxel_labels(annotations: Iterable[Point3], dims: Sequence[int], positive_radius: float) -> np.ndarray:
    """
    Voxel-wise training labels from T-bar point annotations.

    Args:
        annotations: annotated T-bar points.
        dims: volume size (nx, ny, nz).
        positive_radius: voxels within this Euclidean distance of an annotation are positive.

    Returns:
        Boolean array of shape (nz, ny, nx).
    """
    shape = shape_from_dims(dims)
    nz, ny, nx = shape
    seeds = np.zeros(shape, dtype=bool)
    for ii_point in annotations:
        point = as_point(ii_point)
        if not (0 <= point.x < nx and 0 <= point.y < ny and 0 <= point.z < nz):
            raise ValueError(f"Annotation {tuple(point)} lies outside volume of dims {tuple(dims)}.")
        seeds[point.as_index()] = True
    return dilate_mask(seeds, positive_radius)


def nms(field: ScalarField, threshold: float, nms_radius: float) -> List[TbarPrediction]:
    """
    Greedy non-maxima suppression.

    Repeatedly emits the highest unsuppressed voxel scoring at least threshold, then suppresses every voxel within
    nms_radius of it. Equal scores are taken in (z, y, x) order. The result is in emission order, so confidences never
    increase along the list.
    """
    check_radius(nms_radius, "nms_radius")
    data = field.data
    flat = data.ravel()
    candidates = np.flatnonzero(flat >= threshold)
    # Flat C-order index is lexicographic (z, y, x).
    order = candidates[np.lexsort((candidates, -flat[candidates]))]

    suppressed = np.zeros(data.shape, dtype=bool)
    predictions = []
    for ii_index in order:
        z, y, x = np.unravel_index(ii_index, data.shape)
        if suppressed[z, y, x]:
            continue
        center = Point3(int(x), int(y), int(z))
        predictions.append(TbarPrediction(center, float(np.clip(flat[ii_index], 0.0, 1.0))))
        window, inside = ball_window(data.shape, center, nms_radius)
        suppressed[window] |= inside
    logger.debug("NMS kept %d of %d voxels above %s.", len(predictions), len(candidates), threshold)
    return predictions


def shift_predictions(
    predictions: Sequence[TbarPrediction], gray: GrayVolume, shift_radius: float
) -> List[TbarPrediction]:
    """Moves each prediction to the brightest voxel within shift_radius; confidences and order are kept."""
    return [
        TbarPrediction(brightest_in_ball(gray, ii_pred.pos, shift_radius), ii_pred.confidence)
        for ii_pred in predictions
    ]


def detect_tbars(
    gray: GrayVolume, scorer: VoxelScorer, cfg: DetectorConfig = DetectorConfig(), threads: int = 1
) -> List[TbarPrediction]:
    """Dense scoring, smoothing, non-maxima suppression and shift-to-brightest, in that order."""
    scores = scorer.score_volume(gray, threads=threads)
    smoothed = gaussian_smooth(scores, cfg.smooth_sigma)
    # The normalised kernel keeps values in [0, 1] up to round-off.
    smoothed = ScalarField(np.clip(smoothed.data, 0.0, 1.0))
    predictions = nms(smoothed, cfg.score_threshold, cfg.nms_radius)
    logger.info("Detected %d T-bars above threshold %s.", len(predictions), cfg.score_threshold)
    return shift_predictions(predictions, gray, cfg.shift_radius)


def filter_tbars_by_confidence(tbars: Iterable[TbarPrediction], min_confidence: float) -> List[TbarPrediction]:
    """T-bars with confidence at least min_confidence, order kept (e.g. the 0.60 and 0.73 operating points)."""
    if not 0.0 <= min_confidence <= 1.0:
        raise ValueError(f"min_confidence must lie in [0, 1], got {min_confidence}.")
    return [ii_tbar for ii_tbar in tbars if ii_tbar.confidence >= min_confidence]
