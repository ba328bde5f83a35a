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
Tests for T-bar matching and the connectome precision/recall views in utilities/performance.py
"""

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polysynapse.base import LabelVolume, Partner, Point3, Synapse, SynapseSet, TbarPrediction
from polysynapse.utilities.connectome import BodyFilter, ConnectomeGraph
from polysynapse.utilities.performance import (
    MatchSpec,
    PrCurve,
    PrPoint,
    added_missed_curve,
    asymmetric_pr,
    break_even_point,
    connections_added_missed,
    count_scatter,
    evaluate_graphs,
    graph_pr_curve,
    match_tbars,
    tbar_pr_curve,
    thresholded_pr,
    unweighted_pr,
    weighted_pr,
)
from tests.utilities.independent_implementations import (
    asymmetric_values,
    maximum_matching_size,
    unweighted_counts,
    weighted_counts,
)

weight_maps = st.dictionaries(
    keys=st.tuples(st.integers(1, 4), st.integers(1, 4)), values=st.integers(0, 12), max_size=10
)


def graph(weights: dict) -> ConnectomeGraph:
    return ConnectomeGraph.from_weights(weights)


def test_weighted_counts_partial_recovery():
    """A true 9-synapse edge predicted with 7 misses two synapses and adds none."""
    point = weighted_pr(graph({(1, 2): 7}), graph({(1, 2): 9}))
    assert (point.tp, point.fp, point.fn) == (7, 0, 2)
    assert point.precision == 1.0
    assert point.recall == pytest.approx(7 / 9)


def test_identical_graphs_are_perfect():
    weights = {(1, 2): 3, (2, 3): 5, (3, 1): 1}
    for ii_function in (weighted_pr, unweighted_pr):
        point = ii_function(graph(weights), graph(weights))
        assert (point.precision, point.recall) == (1.0, 1.0)


def test_disjoint_edge_sets_score_zero():
    point = unweighted_pr(graph({(1, 2): 4}), graph({(2, 1): 4}))
    assert (point.precision, point.recall) == (0.0, 0.0)
    assert (point.tp, point.fp, point.fn) == (0, 1, 1)


def test_empty_graphs_give_undefined_values():
    point = weighted_pr(ConnectomeGraph(), ConnectomeGraph(), threshold=0.3)
    assert point == PrPoint(0.3, None, None, 0, 0, 0)


def test_weighted_equals_unweighted_for_binary_weights():
    pred, gt = graph({(1, 2): 1, (2, 3): 1}), graph({(1, 2): 1, (3, 4): 1})
    assert weighted_pr(pred, gt) == unweighted_pr(pred, gt)


def test_thresholded_at_one_equals_unweighted():
    pred, gt = graph({(1, 2): 3, (2, 3): 1}), graph({(1, 2): 1, (3, 4): 6})
    assert thresholded_pr(pred, gt, 1) == unweighted_pr(pred, gt)


def test_thresholded_drops_weak_edges():
    point = thresholded_pr(graph({(1, 2): 10}), graph({(1, 2): 10, (1, 3): 4}), 5)
    assert (point.precision, point.recall) == (1.0, 1.0)


def test_threshold_above_every_weight_is_undefined():
    point = thresholded_pr(graph({(1, 2): 3}), graph({(1, 2): 4}), 50)
    assert point.precision is None
    assert point.recall is None


@pytest.mark.parametrize("t", [0, -2, 1.5])
def test_thresholded_rejects_invalid_threshold(t):
    with pytest.raises(ValueError):
        thresholded_pr(graph({(1, 2): 3}), graph({(1, 2): 4}), t)


def test_asymmetric_accepts_looser_prediction():
    """A strong true edge predicted at 6 counts as found with t2 = 5, but not by the plain view at 10."""
    pred, gt = graph({(1, 2): 6}), graph({(1, 2): 10})
    assert asymmetric_pr(pred, gt, 10, 5).recall == 1.0
    assert thresholded_pr(pred, gt, 10).recall == 0.0


@pytest.mark.parametrize("t1, t2", [(5, 5), (3, 7), (5, 0), (4.5, 2)])
def test_asymmetric_rejects_invalid_thresholds(t1, t2):
    with pytest.raises(ValueError):
        asymmetric_pr(graph({(1, 2): 6}), graph({(1, 2): 10}), t1, t2)


def test_added_and_missed_connections():
    pred = graph({(1, 2): 1, (2, 3): 11, (3, 4): 10})
    gt = graph({(1, 2): 12, (2, 3): 2, (3, 4): 9})
    result = connections_added_missed(pred, gt, 10, 5)
    assert result.normalizer == 1
    assert list(result.missed[["pre", "post", "gt_weight", "pred_weight"]].itertuples(index=False, name=None)) == [
        (1, 2, 12, 1)
    ]
    assert list(result.added[["pre", "post"]].itertuples(index=False, name=None)) == [(2, 3)]


def test_no_errors_when_prediction_is_exact():
    weights = {(1, 2): 12, (2, 3): 4}
    result = connections_added_missed(graph(weights), graph(weights), 10, 5)
    assert result.added.empty
    assert result.missed.empty


def test_count_scatter_band():
    scatter = count_scatter(graph({(1, 2): 7, (3, 4): 2}), graph({(1, 2): 9, (2, 3): 10}))
    rows = {(ii.pre, ii.post): (ii.gt_weight, ii.pred_weight, ii.within_band) for ii in scatter.itertuples()}
    assert rows == {(1, 2): (9, 7, True), (2, 3): (10, 0, False), (3, 4): (0, 2, False)}


def test_comparing_directed_with_undirected_raises():
    with pytest.raises(ValueError, match="directed"):
        unweighted_pr(graph({(1, 2): 1}), ConnectomeGraph.from_weights({(1, 2): 1}, directed=False))


def test_evaluate_graphs_dispatches_by_name():
    pred, gt = graph({(1, 2): 6}), graph({(1, 2): 10})
    assert evaluate_graphs("asymmetric", pred, gt, {"t1": 10, "t2": 5}) == asymmetric_pr(pred, gt, 10, 5)
    assert evaluate_graphs("weighted", pred, gt, threshold=0.4).threshold == 0.4
    with pytest.raises(ValueError, match="Unknown metric mode"):
        evaluate_graphs("harmonic", pred, gt)
    with pytest.raises(KeyError, match="t2"):
        evaluate_graphs("asymmetric", pred, gt, {"t1": 10})


@settings(max_examples=1000, deadline=None)
@given(pred=weight_maps, gt=weight_maps)
def test_weighted_and_unweighted_match_brute_force(pred, gt):
    weighted = weighted_pr(graph(pred), graph(gt))
    unweighted = unweighted_pr(graph(pred), graph(gt))
    assert (weighted.tp, weighted.fp, weighted.fn) == weighted_counts(pred, gt)
    assert (unweighted.tp, unweighted.fp, unweighted.fn) == unweighted_counts(pred, gt)
    for ii_point in (weighted, unweighted):
        for ii_value in (ii_point.precision, ii_point.recall):
            assert ii_value is None or 0.0 <= ii_value <= 1.0


@settings(max_examples=1000, deadline=None)
@given(pred=weight_maps, gt=weight_maps, t2=st.integers(1, 6), gap=st.integers(1, 6))
def test_asymmetric_views_are_consistent(pred, gt, t2, gap):
    t1 = t2 + gap
    point = asymmetric_pr(graph(pred), graph(gt), t1, t2)
    assert (point.precision, point.recall) == asymmetric_values(pred, gt, t1, t2)

    plain = thresholded_pr(graph(pred), graph(gt), t1)
    if plain.precision is not None:
        assert point.precision >= plain.precision
    if plain.recall is not None:
        assert point.recall >= plain.recall

    result = connections_added_missed(graph(pred), graph(gt), t1, t2)
    assert len(result.missed) == point.fn
    if result.normalizer > 0:
        assert len(result.missed) / result.normalizer == pytest.approx(1.0 - point.recall)


@pytest.fixture()
def three_synapses(two_body_labels):
    """Three T-bars on body 1, each with one partner on body 2, at partner confidences 0.3, 0.6 and 0.95."""
    synapses = SynapseSet(
        [
            Synapse(TbarPrediction(Point3(1 + ii, 1, 1), 0.9), [Partner(2, ii_confidence)])
            for ii, ii_confidence in enumerate([0.3, 0.6, 0.95])
        ]
    )
    return synapses, two_body_labels


def test_graph_curve_sweeps_partner_confidence(three_synapses):
    synapses, labels = three_synapses
    curve = graph_pr_curve(synapses, labels, graph({(1, 2): 2}), "weighted", [0.0, 0.5, 0.9])
    assert curve.thresholds == [0.0, 0.5, 0.9]
    assert [(ii.precision, ii.recall) for ii in curve] == [(pytest.approx(2 / 3), 1.0), (1.0, 1.0), (1.0, 0.5)]


def test_thresholded_curve_at_one_equals_unweighted_curve(three_synapses):
    synapses, labels = three_synapses
    gt_g = graph({(1, 2): 2, (2, 1): 5})
    thresholds = [0.0, 0.5, 0.99]
    thresholded = graph_pr_curve(synapses, labels, gt_g, "thresholded", thresholds, {"t": 1})
    assert thresholded == graph_pr_curve(synapses, labels, gt_g, "unweighted", thresholds)


def test_graph_curve_undirected_and_filtered(three_synapses):
    synapses, labels = three_synapses
    gt_g = graph({(2, 1): 3, (1, 3): 4})
    directed = graph_pr_curve(synapses, labels, gt_g, "unweighted", [0.0])
    undirected = graph_pr_curve(synapses, labels, gt_g, "unweighted", [0.0], undirected=True)
    assert directed[0].tp == 0
    assert undirected[0].tp == 1
    filtered = graph_pr_curve(
        synapses, labels, gt_g, "unweighted", [0.0], body_filter=BodyFilter(frozenset({1, 2})), undirected=True
    )
    assert (filtered[0].precision, filtered[0].recall) == (1.0, 1.0)


def test_graph_curve_needs_increasing_thresholds(three_synapses):
    synapses, labels = three_synapses
    with pytest.raises(ValueError, match="strictly increasing"):
        graph_pr_curve(synapses, labels, graph({(1, 2): 2}), "weighted", [0.5, 0.5])


def test_added_missed_curve_columns_and_fractions(three_synapses):
    synapses, labels = three_synapses
    table = added_missed_curve(synapses, labels, graph({(1, 2): 2}), [0.0, 0.99], 2, 1)
    assert list(table.columns) == ["threshold", "added", "missed", "normalizer", "added_fraction", "missed_fraction"]
    assert table["missed"].tolist() == [0, 1]
    assert table["missed_fraction"].tolist() == [0.0, 1.0]
    assert table["added"].tolist() == [0, 0]


def test_match_identical_sets():
    points = [Point3(1, 2, 3), Point3(10, 10, 10), Point3(30, 2, 5)]
    result = match_tbars([TbarPrediction(ii) for ii in points], points)
    assert sorted(result.matches) == [(0, 0), (1, 1), (2, 2)]
    assert result.unmatched_pred == [] and result.unmatched_gt == []


def test_match_respects_distance():
    result = match_tbars([TbarPrediction(Point3(0, 0, 0))], [Point3(2, 0, 0)], MatchSpec(1.0))
    assert result.matches == []
    assert result.unmatched_pred == [0]
    assert result.unmatched_gt == [0]


def test_match_prefers_closer_then_more_confident():
    gt = [Point3(5, 5, 5)]
    closer = [TbarPrediction(Point3(7, 5, 5), 0.2), TbarPrediction(Point3(6, 5, 5), 0.1)]
    assert match_tbars(closer, gt).matches == [(1, 0)]
    tied = [TbarPrediction(Point3(4, 5, 5), 0.2), TbarPrediction(Point3(6, 5, 5), 0.8)]
    assert match_tbars(tied, gt).matches == [(1, 0)]


def test_match_by_segment(two_body_labels):
    pred, gt = [TbarPrediction(Point3(4, 1, 1))], [Point3(5, 1, 1)]
    assert match_tbars(pred, gt, MatchSpec(3.0)).matches == [(0, 0)]
    assert match_tbars(pred, gt, MatchSpec(3.0, True, two_body_labels)).matches == []
    with pytest.raises(ValueError, match="segmentation"):
        MatchSpec(3.0, True)


@settings(max_examples=40, deadline=None)
@given(
    pred=st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8), st.integers(0, 2)), max_size=6),
    gt=st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8), st.integers(0, 2)), max_size=6),
    max_distance=st.sampled_from([0.0, 1.0, 2.5, 4.0]),
)
def test_matching_is_one_to_one_within_distance(pred, gt, max_distance):
    tbars = [TbarPrediction(Point3(*ii)) for ii in pred]
    result = match_tbars(tbars, [Point3(*ii) for ii in gt], MatchSpec(max_distance))
    pred_used = [ii for ii, _ in result.matches]
    gt_used = [jj for _, jj in result.matches]
    assert len(set(pred_used)) == len(pred_used) and len(set(gt_used)) == len(gt_used)
    assert sorted(pred_used + result.unmatched_pred) == list(range(len(pred)))
    assert sorted(gt_used + result.unmatched_gt) == list(range(len(gt)))
    for ii, jj in result.matches:
        assert Point3(*pred[ii]).distance_to(Point3(*gt[jj])) <= max_distance
    # Greedy matching is maximal, so it reaches at least half of a maximum matching.
    if pred and gt:
        admissible = np.array(
            [[Point3(*ii).distance_to(Point3(*jj)) <= max_distance for jj in gt] for ii in pred], dtype=bool
        )
        assert 2 * len(result.matches) >= maximum_matching_size(admissible)


def test_tbar_curve_counts_and_empty_inputs():
    gt = [Point3(0, 0, 0), Point3(20, 0, 0)]
    pred = [TbarPrediction(Point3(1, 0, 0), 0.9), TbarPrediction(Point3(10, 10, 0), 0.4)]
    curve = tbar_pr_curve(pred, gt, MatchSpec(3.0), [0.0, 0.5, 0.95])
    assert [(ii.tp, ii.fp, ii.fn) for ii in curve] == [(1, 1, 1), (1, 0, 1), (0, 0, 2)]
    assert curve[2].precision is None
    empty = tbar_pr_curve([], [], MatchSpec(), [0.5])
    assert (empty[0].precision, empty[0].recall) == (None, None)


def test_break_even_point():
    curve = PrCurve(
        [
            PrPoint(0.1, 0.5, 0.9, 5, 5, 1),
            PrPoint(0.2, 0.7, 0.7, 7, 3, 3),
            PrPoint(0.3, 0.9, 0.4, 4, 0, 6),
        ]
    )
    assert break_even_point(curve) == (0.2, pytest.approx(0.7))


def test_break_even_point_ties_and_undefined():
    tied = PrCurve([PrPoint(0.1, 0.25, 0.5, 0, 0, 0), PrPoint(0.2, 0.75, 0.5, 0, 0, 0)])
    assert break_even_point(tied)[0] == 0.2
    assert break_even_point(PrCurve([PrPoint(0.1, None, 1.0, 0, 0, 1)])) is None
    assert break_even_point(PrCurve()) is None


def test_curve_requires_increasing_thresholds():
    with pytest.raises(ValueError):
        PrCurve([PrPoint(0.5, None, None, 0, 0, 0), PrPoint(0.2, None, None, 0, 0, 0)])


def test_curve_frame_keeps_undefined_values():
    curve = PrCurve([PrPoint(0.0, None, 0.5, 1, 0, 1), PrPoint(0.5, 1.0, None, 0, 0, 0)])
    frame = curve.to_frame()
    assert frame["precision"].tolist()[0] is None
    assert PrCurve.from_frame(frame) == curve
    assert PrCurve.from_frame(frame.astype({"precision": float})) == curve
