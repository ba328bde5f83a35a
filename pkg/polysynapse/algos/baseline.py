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
Body-proximity baseline: predicts connectivity from membrane contact instead of detected synapses.
"""

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from polysynapse.base import LabelVolume
from polysynapse.utilities.connectome import (
    POST,
    PRE,
    WEIGHT,
    BodyFilter,
    ConnectomeGraph,
    filter_bodies,
    undirect_graph,
)
from polysynapse.utilities.morphology import boundary_voxel_pairs, pair_labels
from polysynapse.utilities.performance import PrCurve, evaluate_graphs
from polysynapse.utilities.simple_functions import check_strictly_increasing


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineConfig:
    """Number of boundary samples, random seed, and whether the result stays directed."""

    sample_count: int = 1000
    seed: int = 0
    directed: bool = True

    def __post_init__(self):
        if int(self.sample_count) != self.sample_count or self.sample_count < 1:
            raise ValueError(f"sample_count must be an integer >= 1, got {self.sample_count}.")


def proximity_baseline(labels: LabelVolume, cfg: BaselineConfig = BaselineConfig()) -> ConnectomeGraph:
    """
    Samples boundary voxel pairs uniformly with replacement and orients each by a fair coin.

    Edge weights therefore approximate contact area between bodies. The total weight equals cfg.sample_count.
    """
    pairs = boundary_voxel_pairs(labels)
    if len(pairs) == 0:
        raise ValueError("The segmentation has no boundary between two non-zero bodies.")
    bodies = pair_labels(labels, pairs)

    rng = np.random.default_rng(cfg.seed)
    chosen = rng.integers(0, len(pairs), size=cfg.sample_count)
    flips = rng.integers(0, 2, size=cfg.sample_count).astype(bool)
    sampled = bodies[chosen]
    pre = np.where(flips, sampled[:, 1], sampled[:, 0])
    post = np.where(flips, sampled[:, 0], sampled[:, 1])
    logger.debug("Sampled %d of %d boundary voxel pairs.", cfg.sample_count, len(pairs))

    edges = pd.DataFrame({PRE: pre, POST: post, WEIGHT: np.ones(cfg.sample_count, dtype=np.int64)})
    graph = ConnectomeGraph(edges)
    return graph if cfg.directed else undirect_graph(graph)


def baseline_curve(
    labels: LabelVolume,
    gt_g: ConnectomeGraph,
    sample_counts: Iterable[int],
    metric_mode: str = "unweighted",
    params: Optional[dict] = None,
    cfg: BaselineConfig = BaselineConfig(),
    body_filter: Optional[BodyFilter] = None,
) -> PrCurve:
    """
    Precision/recall of the proximity baseline, one point per sample count.

    Args:
        labels: the segmentation to sample contacts from.
        gt_g: ground-truth connectome.
        sample_counts: strictly increasing sample counts, each at least 1.
        metric_mode: a name from polysynapse.utilities.performance.graph_metric_functions.
        params: extra parameters of the metric.
        cfg: seed and direction; its sample_count is replaced by each entry of sample_counts.
        body_filter: if given, both graphs are restricted to admissible bodies.

    Returns:
        A PrCurve whose thresholds are the sample counts. With cfg.directed False both graphs are undirected first.
    """
    if body_filter is not None:
        gt_g = filter_bodies(gt_g, body_filter)
    if not cfg.directed:
        gt_g = undirect_graph(gt_g)
    points = []
    for ii_count in check_strictly_increasing(sample_counts, "sample_counts"):
        baseline = proximity_baseline(labels, replace(cfg, sample_count=ii_count))
        if body_filter is not None:
            baseline = filter_bodies(baseline, body_filter)
        points.append(evaluate_graphs(metric_mode, baseline, gt_g, params, threshold=ii_count))
    return PrCurve(points)
