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
Performance calculations: T-bar matching and every precision/recall view of a predicted connectome.

Undefined precision or recall (zero denominator) is represented by None, never NaN.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from polysynapse.PandasEnum import PandasEnum, check_required_columns
from polysynapse.base import LabelVolume, Point3, SynapseSet, TbarPrediction, as_point
from polysynapse.utilities.connectome import (
    POST,
    PRE,
    BodyFilter,
    ConnectomeGraph,
    build_graph,
    edge_union,
    filter_bodies,
    threshold_graph,
    undirect_graph,
)
from polysynapse.utilities.simple_functions import check_strictly_increasing, make_registry


logger = logging.getLogger(__name__)

GT_WEIGHT = PandasEnum.GT_WEIGHT.value
PRED_WEIGHT = PandasEnum.PRED_WEIGHT.value


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return None if denominator == 0 else numerator / denominator


@dataclass(frozen=True)
class PrPoint:
    """
    One precision/recall point.

    For every view except the asymmetric one, precision == tp / (tp + fp) and recall == tp / (tp + fn) whenever the
    denominators are non-zero; otherwise the value is None.
    """

    threshold: float
    precision: Optional[float]
    recall: Optional[float]
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, threshold: float, tp: int, fp: int, fn: int) -> "PrPoint":
        tp, fp, fn = int(tp), int(fp), int(fn)
        return cls(float(threshold), _ratio(tp, tp + fp), _ratio(tp, tp + fn), tp, fp, fn)

    def as_row(self) -> list:
        return [self.threshold, self.precision, self.recall, self.tp, self.fp, self.fn]


@dataclass(frozen=True)
class PrCurve:
    """Precision/recall points ordered by strictly increasing threshold."""

    points: Tuple[PrPoint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        check_strictly_increasing([ii_point.threshold for ii_point in self.points])

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, index: int) -> PrPoint:
        return self.points[index]

    @property
    def thresholds(self) -> List[float]:
        return [ii_point.threshold for ii_point in self.points]

    def to_frame(self) -> pd.DataFrame:
        """Table with columns threshold, precision, recall, tp, fp, fn; undefined values are None."""
        frame = pd.DataFrame([ii_point.as_row() for ii_point in self.points], columns=PandasEnum.PR_COLUMNS.value)
        optional = [PandasEnum.PRECISION.value, PandasEnum.RECALL.value]
        # The constructor turns None into NaN.
        frame[optional] = frame[optional].astype(object).where(frame[optional].notna(), None)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "PrCurve":
        check_required_columns(frame, PandasEnum.PR_COLUMNS.value, "precision/recall table")

        def optional(value) -> Optional[float]:
            return None if value is None or (isinstance(value, float) and math.isnan(value)) else float(value)

        points = [
            PrPoint(
                float(ii_row.threshold),
                optional(ii_row.precision),
                optional(ii_row.recall),
                int(ii_row.tp),
                int(ii_row.fp),
                int(ii_row.fn),
            )
            for ii_row in frame.itertuples(index=False)
        ]
        return cls(points)


@dataclass(frozen=True)
class MatchSpec:
    """T-bar matching rule: a distance limit, optionally also requiring the same segment."""

    max_distance: float = 27.0
    require_same_segment: bool = False
    segmentation: Optional[LabelVolume] = None

    def __post_init__(self):
        if not math.isfinite(self.max_distance) or self.max_distance < 0:
            raise ValueError(f"max_distance must be non-negative, got {self.max_distance}.")
        if self.require_same_segment and self.segmentation is None:
            raise ValueError("Matching by segment needs a segmentation.")


class MatchResult(NamedTuple):
    """Matched (pred index, gt index) pairs in matching order and the ascending unmatched indices."""

    matches: List[Tuple[int, int]]
    unmatched_pred: List[int]
    unmatched_gt: List[int]


def match_tbars(pred: Sequence[TbarPrediction], gt: Sequence[Point3], spec: MatchSpec = MatchSpec()) -> MatchResult:
    """
    One-to-one greedy matching of predicted to ground-truth T-bars.

    Admissible pairs lie within max_distance (and in the same non-zero segment if required). They are taken by ascending
    distance, then descending prediction confidence, then (z, y, x) of the prediction and of the ground truth.
    """
    gt = [as_point(ii_point) for ii_point in gt]
    if len(pred) == 0 or len(gt) == 0:
        return MatchResult([], list(range(len(pred))), list(range(len(gt))))

    pred_xyz = np.array([ii_pred.pos for ii_pred in pred], dtype=np.int64)
    gt_xyz = np.array(gt, dtype=np.int64)
    distances = cdist(pred_xyz, gt_xyz)
    admissible = distances <= spec.max_distance
    if spec.require_same_segment:
        segmentation = spec.segmentation
        pred_segments = np.array([segmentation.body_at(ii_pred.pos) for ii_pred in pred])
        gt_segments = np.array([segmentation.body_at(ii_point) for ii_point in gt])
        admissible &= (pred_segments[:, None] == gt_segments[None, :]) & (pred_segments[:, None] != 0)

    pred_index, gt_index = np.nonzero(admissible)
    confidences = np.array([ii_pred.confidence for ii_pred in pred])
    # lexsort takes the primary key last.
    order = np.lexsort(
        (
            gt_index,
            pred_index,
            gt_xyz[gt_index, 0],
            gt_xyz[gt_index, 1],
            gt_xyz[gt_index, 2],
            pred_xyz[pred_index, 0],
            pred_xyz[pred_index, 1],
            pred_xyz[pred_index, 2],
            -confidences[pred_index],
            distances[pred_index, gt_index],
        )
    )

    used_pred, used_gt, matches = set(), set(), []
    for ii_pair in order:
        ii_pred, jj_gt = int(pred_index[ii_pair]), int(gt_index[ii_pair])
        if ii_pred in used_pred or jj_gt in used_gt:
            continue
        used_pred.add(ii_pred)
        used_gt.add(jj_gt)
        matches.append((ii_pred, jj_gt))
    unmatched_pred = [ii for ii in range(len(pred)) if ii not in used_pred]
    unmatched_gt = [jj for jj in range(len(gt)) if jj not in used_gt]
    return MatchResult(matches, unmatched_pred, unmatched_gt)


def tbar_pr_curve(
    pred: Sequence[TbarPrediction], gt: Sequence[Point3], spec: MatchSpec, thresholds: Iterable[float]
) -> PrCurve:
    """T-bar precision/recall: at each confidence threshold, match the retained predictions against all ground truth."""
    points = []
    for ii_threshold in check_strictly_increasing(thresholds):
        kept = [ii_pred for ii_pred in pred if ii_pred.confidence >= ii_threshold]
        result = match_tbars(kept, gt, spec)
        points.append(
            PrPoint.from_counts(ii_threshold, len(result.matches), len(result.unmatched_pred), len(result.unmatched_gt))
        )
    return PrCurve(points)


def _check_same_kind(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph) -> None:
    if pred_g.directed != gt_g.directed:
        raise ValueError("Cannot compare a directed graph with an undirected one.")


def _aligned_weights(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph) -> Tuple[np.ndarray, np.ndarray]:
    """Predicted and ground-truth weights over the union of both edge sets."""
    _check_same_kind(pred_g, gt_g)
    union = edge_union(pred_g, gt_g, (PRED_WEIGHT, GT_WEIGHT))
    return union[PRED_WEIGHT].to_numpy(), union[GT_WEIGHT].to_numpy()


def weighted_pr(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph, threshold: float = 0.0) -> PrPoint:
    """
    Synapse-level precision/recall: every synapse of the ground truth is one label to recover.

    Per edge, min(p, g) synapses are correct, so predicting 7 for a true 9 misses 2.

    Args:
        pred_g: predicted connectome.
        gt_g: ground-truth connectome.
        threshold: sweep value recorded on the returned point.

    Returns:
        tp = sum of min(p, g), fp = sum(p) - tp, fn = sum(g) - tp.
    """
    predicted, truth = _aligned_weights(pred_g, gt_g)
    tp = int(np.minimum(predicted, truth).sum())
    return PrPoint.from_counts(threshold, tp, int(predicted.sum()) - tp, int(truth.sum()) - tp)


def unweighted_pr(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph, threshold: float = 0.0) -> PrPoint:
    """Edge-level precision/recall: each edge with any synapses is one label."""
    predicted, truth = _aligned_weights(pred_g, gt_g)
    has_pred, has_gt = predicted > 0, truth > 0
    return PrPoint.from_counts(
        threshold, np.sum(has_pred & has_gt), np.sum(has_pred & ~has_gt), np.sum(~has_pred & has_gt)
    )


def thresholded_pr(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph, t: int, threshold: float = 0.0) -> PrPoint:
    """Unweighted precision/recall after keeping only edges of weight at least t in both graphs."""
    return unweighted_pr(threshold_graph(pred_g, t), threshold_graph(gt_g, t), threshold)


def _check_asymmetric_thresholds(t1: int, t2: int) -> None:
    for ii_name, ii_value in (("t1", t1), ("t2", t2)):
        if int(ii_value) != ii_value or ii_value < 1:
            raise ValueError(f"{ii_name} must be an integer >= 1, got {ii_value}.")
    if not t1 > t2:
        raise ValueError(f"Asymmetric thresholds need t1 > t2, got t1={t1}, t2={t2}.")


def asymmetric_pr(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph, t1: int, t2: int, threshold: float = 0.0) -> PrPoint:
    """
    Asymmetric precision/recall: edges count as positives at weight t1 but are accepted as found at the looser t2.

    recall = #{g >= t1 and p >= t2} / #{g >= t1}
    precision = #{p >= t1 and g >= t2} / #{p >= t1}

    On the returned point tp is the recall numerator, fn the number of connections missed and fp the number of
    connections added, so recall == tp / (tp + fn). Precision uses its own numerator and is not tp / (tp + fp).
    """
    _check_asymmetric_thresholds(t1, t2)
    predicted, truth = _aligned_weights(pred_g, gt_g)
    recall_numerator = int(np.sum((truth >= t1) & (predicted >= t2)))
    recall_denominator = int(np.sum(truth >= t1))
    precision_numerator = int(np.sum((predicted >= t1) & (truth >= t2)))
    precision_denominator = int(np.sum(predicted >= t1))
    return PrPoint(
        float(threshold),
        _ratio(precision_numerator, precision_denominator),
        _ratio(recall_numerator, recall_denominator),
        recall_numerator,
        precision_denominator - precision_numerator,
        recall_denominator - recall_numerator,
    )


class AddedMissed(NamedTuple):
    """Connections added and missed, each a table of pre, post, gt_weight, pred_weight, and the normaliser."""

    added: pd.DataFrame
    missed: pd.DataFrame
    normalizer: int


def connections_added_missed(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph, t1: int, t2: int) -> AddedMissed:
    """
    Gross connectivity errors.

    Missed: g >= t1 and p < t2. Added: p >= t1 and g < t2. The normaliser is the number of ground-truth edges with
    weight at least t1.
    """
    _check_asymmetric_thresholds(t1, t2)
    _check_same_kind(pred_g, gt_g)
    union = edge_union(gt_g, pred_g, (GT_WEIGHT, PRED_WEIGHT))
    missed = union[(union[GT_WEIGHT] >= t1) & (union[PRED_WEIGHT] < t2)].reset_index(drop=True)
    added = union[(union[PRED_WEIGHT] >= t1) & (union[GT_WEIGHT] < t2)].reset_index(drop=True)
    return AddedMissed(added, missed, int(np.sum(union[GT_WEIGHT] >= t1)))


def count_scatter(pred_g: ConnectomeGraph, gt_g: ConnectomeGraph) -> pd.DataFrame:
    """
    Ground-truth and predicted synapse counts for every edge in either graph.

    within_band is True when gt / 2 <= pred <= 2 * gt. Zero counts are kept as 0.
    """
    _check_same_kind(pred_g, gt_g)
    union = edge_union(gt_g, pred_g, (GT_WEIGHT, PRED_WEIGHT))
    gt_weight, pred_weight = union[GT_WEIGHT], union[PRED_WEIGHT]
    union[PandasEnum.WITHIN_BAND.value] = (0.5 * gt_weight <= pred_weight) & (pred_weight <= 2 * gt_weight)
    return union[[PRE, POST, GT_WEIGHT, PRED_WEIGHT, PandasEnum.WITHIN_BAND.value]]


# Graph comparison views selectable by name; "required" lists the parameters each view needs.
graph_metric_functions = make_registry(
    [weighted_pr, unweighted_pr, thresholded_pr, asymmetric_pr],
    names=["weighted", "unweighted", "thresholded", "asymmetric"],
    skip=2,
)


def evaluate_graphs(
    mode: str, pred_g: ConnectomeGraph, gt_g: ConnectomeGraph, params: Optional[dict] = None, threshold: float = 0.0
) -> PrPoint:
    """Applies the named comparison view with its extra parameters (t, or t1 and t2)."""
    if mode not in graph_metric_functions:
        raise ValueError(f"Unknown metric mode '{mode}', expected one of {sorted(graph_metric_functions)}.")
    entry = graph_metric_functions[mode]
    params = dict(params or {})
    for ii_required in entry["required"]:
        if ii_required not in params:
            raise KeyError(f"Metric mode '{mode}' needs parameter '{ii_required}'.")
    arguments = {ii_key: params[ii_key] for ii_key in entry["required"]}
    return entry["function"](pred_g, gt_g, threshold=threshold, **arguments)


def _prepare(graph: ConnectomeGraph, body_filter: Optional[BodyFilter], undirected: bool) -> ConnectomeGraph:
    if body_filter is not None:
        graph = filter_bodies(graph, body_filter)
    if undirected:
        graph = undirect_graph(graph)
    return graph


def graph_pr_curve(
    synapses: SynapseSet,
    labels: LabelVolume,
    gt_g: ConnectomeGraph,
    mode: str,
    psd_thresholds: Iterable[float],
    params: Optional[dict] = None,
    body_filter: Optional[BodyFilter] = None,
    undirected: bool = False,
) -> PrCurve:
    """
    Connectome precision/recall as the partner confidence threshold sweeps.

    Args:
        synapses: predicted synapses with partner confidences.
        labels: segmentation used to build the predicted graph.
        gt_g: ground-truth connectome.
        mode: one of the names in graph_metric_functions.
        psd_thresholds: strictly increasing partner confidence thresholds.
        params: extra parameters of the view, e.g. {"t": 5} or {"t1": 10, "t2": 5}.
        body_filter: if given, both graphs are restricted to admissible bodies first.
        undirected: compare undirected views of both graphs.

    Returns:
        One point per threshold.
    """
    gt_g = _prepare(gt_g, body_filter, undirected)
    points = []
    for ii_threshold in check_strictly_increasing(psd_thresholds, "psd_thresholds"):
        pred_g = _prepare(build_graph(synapses, labels, ii_threshold), body_filter, undirected)
        points.append(evaluate_graphs(mode, pred_g, gt_g, params, threshold=ii_threshold))
    logger.info("Computed %s curve over %d thresholds.", mode, len(points))
    return PrCurve(points)


def added_missed_curve(
    synapses: SynapseSet,
    labels: LabelVolume,
    gt_g: ConnectomeGraph,
    psd_thresholds: Iterable[float],
    t1: int,
    t2: int,
    body_filter: Optional[BodyFilter] = None,
) -> pd.DataFrame:
    """Counts and normalised fractions of connections added and missed at each partner confidence threshold."""
    gt_g = _prepare(gt_g, body_filter, False)
    rows = []
    for ii_threshold in check_strictly_increasing(psd_thresholds, "psd_thresholds"):
        pred_g = _prepare(build_graph(synapses, labels, ii_threshold), body_filter, False)
        result = connections_added_missed(pred_g, gt_g, t1, t2)
        rows.append(
            [
                ii_threshold,
                len(result.added),
                len(result.missed),
                result.normalizer,
                _ratio(len(result.added), result.normalizer),
                _ratio(len(result.missed), result.normalizer),
            ]
        )
    columns = [
        PandasEnum.THRESHOLD.value,
        PandasEnum.ADDED.value,
        PandasEnum.MISSED.value,
        PandasEnum.NORMALIZER.value,
        "added_fraction",
        "missed_fraction",
    ]
    return pd.DataFrame(rows, columns=columns)


def break_even_point(curve: PrCurve) -> Optional[Tuple[float, float]]:
    """
    The point where precision and recall are closest.

    Returns:
        (threshold, mean of precision and recall), or None if no point has both defined. Ties go to the higher value,
        then the lower threshold.
    """
    defined = [ii for ii in curve if ii.precision is not None and ii.recall is not None]
    if not defined:
        return None
    best = min(
        defined,
        key=lambda ii: (abs(ii.precision - ii.recall), -(ii.precision + ii.recall), ii.threshold),
    )
    return best.threshold, (best.precision + best.recall) / 2.0
