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
Deliberately naive reimplementations used as oracles in the tests. They favour obviously correct loops over speed.
"""

import itertools
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

Weights = Dict[Tuple[int, int], int]


def weighted_counts(pred: Weights, gt: Weights) -> Tuple[int, int, int]:
    """Per-edge min-overlap tally: (tp, fp, fn)."""
    tp = fp = fn = 0
    for ii_edge in set(pred) | set(gt):
        p, g = pred.get(ii_edge, 0), gt.get(ii_edge, 0)
        tp += min(p, g)
        fp += p - min(p, g)
        fn += g - min(p, g)
    return tp, fp, fn


def unweighted_counts(pred: Weights, gt: Weights) -> Tuple[int, int, int]:
    """Set algebra on the supports: (tp, fp, fn)."""
    pred_support = {ii_edge for ii_edge, ii_weight in pred.items() if ii_weight > 0}
    gt_support = {ii_edge for ii_edge, ii_weight in gt.items() if ii_weight > 0}
    return len(pred_support & gt_support), len(pred_support - gt_support), len(gt_support - pred_support)


def asymmetric_values(pred: Weights, gt: Weights, t1: int, t2: int) -> Tuple[Optional[float], Optional[float]]:
    """(precision, recall) of the asymmetric view straight from its definition."""
    edges = set(pred) | set(gt)
    recall_hits = [pred.get(ii, 0) >= t2 for ii in edges if gt.get(ii, 0) >= t1]
    precision_hits = [gt.get(ii, 0) >= t2 for ii in edges if pred.get(ii, 0) >= t1]
    precision = sum(precision_hits) / len(precision_hits) if precision_hits else None
    recall = sum(recall_hits) / len(recall_hits) if recall_hits else None
    return precision, recall


def greedy_nms(data: np.ndarray, threshold: float, radius: float) -> List[Tuple[Tuple[int, int, int], float]]:
    """O(n^2) suppression: repeatedly take the best remaining voxel, then drop everything within radius of it."""
    remaining = [
        ((int(z), int(y), int(x)), float(data[z, y, x]))
        for z, y, x in itertools.product(*[range(ii) for ii in data.shape])
        if data[z, y, x] >= threshold
    ]
    kept = []
    while remaining:
        best = min(remaining, key=lambda ii: (-ii[1], ii[0]))
        kept.append(((best[0][2], best[0][1], best[0][0]), best[1]))
        remaining = [ii for ii in remaining if math.dist(ii[0], best[0]) > radius]
    return kept


def maximum_matching_size(admissible: np.ndarray) -> int:
    """Size of a maximum bipartite matching by exhaustive search over the rows."""
    n_rows, n_cols = admissible.shape

    def search(row: int, used: frozenset) -> int:
        if row == n_rows:
            return 0
        best = search(row + 1, used)
        for jj_col in range(n_cols):
            if admissible[row, jj_col] and jj_col not in used:
                best = max(best, 1 + search(row + 1, used | {jj_col}))
        return best

    return search(0, frozenset())


def dense_smooth(data: np.ndarray, kernel_1d: np.ndarray) -> np.ndarray:
    """Direct 3D correlation with the outer-product kernel and edge replication."""
    half = len(kernel_1d) // 2
    kernel = np.einsum("i,j,k->ijk", kernel_1d, kernel_1d, kernel_1d)
    padded = np.pad(data, half, mode="edge")
    result = np.zeros(data.shape)
    for z, y, x in itertools.product(*[range(ii) for ii in data.shape]):
        result[z, y, x] = np.sum(padded[z : z + 2 * half + 1, y : y + 2 * half + 1, x : x + 2 * half + 1] * kernel)
    return result


def _voxels(shape) -> List[Tuple[int, int, int]]:
    return list(itertools.product(*[range(ii) for ii in shape]))


def _within(first: Tuple[int, ...], second: Tuple[int, ...], radius: float) -> bool:
    return sum((a - b) ** 2 for a, b in zip(first, second)) <= radius ** 2


def union_of_balls(labels: np.ndarray, body: int, radius: float) -> np.ndarray:
    """Voxels within radius of some voxel of the body, checking every pair."""
    members = [ii for ii in _voxels(labels.shape) if labels[ii] == body]
    result = np.zeros(labels.shape, dtype=bool)
    for ii_voxel in _voxels(labels.shape):
        result[ii_voxel] = any(_within(ii_voxel, jj_member, radius) for jj_member in members)
    return result


def ids_in_sphere(labels: np.ndarray, center_zyx: Tuple[int, int, int], radius: float) -> set:
    """Non-zero ids of every voxel within radius of the center."""
    return {int(labels[ii]) for ii in _voxels(labels.shape) if labels[ii] != 0 and _within(ii, center_zyx, radius)}


def closest_approach(labels: np.ndarray, body_a: int, body_b: int) -> float:
    """Smallest distance between a voxel of body_a and a voxel of body_b, inf if either is absent."""
    first = [ii for ii in _voxels(labels.shape) if labels[ii] == body_a]
    second = [ii for ii in _voxels(labels.shape) if labels[ii] == body_b]
    return min((math.dist(ii, jj) for ii in first for jj in second), default=math.inf)


def sigmoid_network(weights: List[np.ndarray], biases: List[np.ndarray], x: List[float]) -> float:
    """Forward pass written out with scalar loops: sigmoid hidden units and a sigmoid output."""
    values = list(x)
    for ii_w, ii_b in zip(weights, biases):
        sums = []
        for jj_row in range(len(ii_b)):
            sums.append(sum(ii_w[jj_row][kk] * values[kk] for kk in range(len(values))) + ii_b[jj_row])
        values = [1.0 / (1.0 + math.exp(-ii_sum)) for ii_sum in sums]
    return values[0]
