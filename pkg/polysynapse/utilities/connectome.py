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
Connectome graphs built from synapse sets, and the transforms applied to them before evaluation.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from polysynapse.PandasEnum import PandasEnum, check_required_columns
from polysynapse.base import GrayVolume, LabelVolume, Partner, Synapse, SynapseSet, TbarPrediction, check_same_dims
from polysynapse.utilities.morphology import brightest_in_ball


logger = logging.getLogger(__name__)

PRE = PandasEnum.PRE.value
POST = PandasEnum.POST.value
WEIGHT = PandasEnum.WEIGHT.value
EDGE_COLUMNS = [PRE, POST, WEIGHT]


class ConnectomeGraph:

    """
    A weighted graph over body ids: (pre, post) -> number of synapses.

    Edges are held in a DataFrame with columns pre, post and weight, sorted by (pre, post). Stored weights are always
    at least 1 and body id 0 never appears. An undirected graph keys each edge by (min id, max id).
    """

    def __init__(self, edges: Optional[pd.DataFrame] = None, directed: bool = True):
        if edges is None:
            edges = pd.DataFrame(columns=EDGE_COLUMNS)
        check_required_columns(edges, EDGE_COLUMNS, "connectome edges")
        edges = edges[EDGE_COLUMNS].astype(np.int64)
        if (edges[PRE] <= 0).any() or (edges[POST] <= 0).any():
            raise ValueError("Connectome edges must join positive body ids.")
        if (edges[WEIGHT] < 0).any():
            raise ValueError("Connectome edge weights must be non-negative.")
        if not directed:
            lower = np.minimum(edges[PRE].to_numpy(), edges[POST].to_numpy())
            upper = np.maximum(edges[PRE].to_numpy(), edges[POST].to_numpy())
            edges = pd.DataFrame({PRE: lower, POST: upper, WEIGHT: edges[WEIGHT].to_numpy()})
        if len(edges) > 0:
            edges = edges.groupby([PRE, POST], as_index=False)[WEIGHT].sum()
            edges = edges[edges[WEIGHT] > 0]
        self._edges = edges.sort_values([PRE, POST]).reset_index(drop=True).astype(np.int64)
        self.directed = directed

    @classmethod
    def from_weights(cls, weights: Mapping[Tuple[int, int], int], directed: bool = True) -> "ConnectomeGraph":
        """Builds a graph from a {(pre, post): weight} mapping."""
        rows = [(int(ii_pre), int(ii_post), int(ii_weight)) for (ii_pre, ii_post), ii_weight in weights.items()]
        return cls(pd.DataFrame(rows, columns=EDGE_COLUMNS), directed=directed)

    @property
    def edges(self) -> pd.DataFrame:
        """A copy of the edge table."""
        return self._edges.copy()

    def to_weights(self) -> Dict[Tuple[int, int], int]:
        return {
            (int(ii_pre), int(ii_post)): int(ii_weight)
            for ii_pre, ii_post, ii_weight in self._edges[EDGE_COLUMNS].itertuples(index=False)
        }

    def weight(self, pre: int, post: int) -> int:
        """Weight of one edge, 0 if absent."""
        if not self.directed:
            pre, post = min(pre, post), max(pre, post)
        match = self._edges[(self._edges[PRE] == pre) & (self._edges[POST] == post)]
        return int(match[WEIGHT].sum())

    @property
    def total_weight(self) -> int:
        return int(self._edges[WEIGHT].sum())

    def body_ids(self) -> List[int]:
        return sorted(set(self._edges[PRE]) | set(self._edges[POST]))

    def has_self_loops(self) -> bool:
        return bool((self._edges[PRE] == self._edges[POST]).any())

    def __len__(self) -> int:
        return len(self._edges)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConnectomeGraph)
            and self.directed == other.directed
            and self.to_weights() == other.to_weights()
        )

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"ConnectomeGraph({kind}, edges={len(self)}, total_weight={self.total_weight})"


@dataclass(frozen=True)
class BodyFilter:
    """
    Bodies admitted to evaluation. `admissible=None` admits every body.

    The orphan rule, `from_ground_truth`, admits only bodies holding at least one ground-truth T-bar or PSD.
    """

    admissible: Optional[FrozenSet[int]] = None

    def __post_init__(self):
        if self.admissible is not None:
            object.__setattr__(self, "admissible", frozenset(int(ii_body) for ii_body in self.admissible))

    @classmethod
    def from_ground_truth(cls, ground_truth: SynapseSet, labels: LabelVolume) -> "BodyFilter":
        bodies = set()
        for ii_synapse in ground_truth:
            bodies.add(labels.body_at(ii_synapse.tbar.pos))
            for ii_partner in ii_synapse.partners:
                bodies.add(ii_partner.body)
                if ii_partner.pos is not None:
                    bodies.add(labels.body_at(ii_partner.pos))
        bodies.discard(0)
        logger.info("Orphan filter admits %d bodies.", len(bodies))
        return cls(frozenset(bodies))

    def admits(self, body: int) -> bool:
        return self.admissible is None or body in self.admissible


def build_graph(
    synapses: SynapseSet,
    labels: LabelVolume,
    psd_threshold: float = 0.0,
    skip_report: Optional[List[TbarPrediction]] = None,
) -> ConnectomeGraph:
    """
    Tallies one edge weight per retained (T-bar, partner) pair.

    Args:
        synapses: predicted or ground-truth synapses with partner bodies.
        labels: the segmentation giving each T-bar its pre-synaptic body.
        psd_threshold: partners with confidence below this are ignored.
        skip_report: if given, T-bars landing on label 0 are appended to it.

    Returns:
        A directed graph. Partners on the T-bar's own body or on body 0 are skipped.
    """
    rows = []
    for ii_synapse in synapses:
        pre = labels.body_at(ii_synapse.tbar.pos)
        if pre == 0:
            logger.warning("Skipping T-bar at %s on unassigned label 0.", tuple(ii_synapse.tbar.pos))
            if skip_report is not None:
                skip_report.append(ii_synapse.tbar)
            continue
        for ii_partner in ii_synapse.partners:
            if ii_partner.confidence >= psd_threshold and ii_partner.body not in (0, pre):
                rows.append((pre, ii_partner.body))
    if not rows:
        return ConnectomeGraph()
    pairs = pd.DataFrame(rows, columns=[PRE, POST], dtype=np.int64)
    edges = pairs.groupby([PRE, POST], as_index=False).size().rename(columns={"size": WEIGHT})
    return ConnectomeGraph(edges)


def threshold_graph(graph: ConnectomeGraph, t: int) -> ConnectomeGraph:
    """Binarised graph keeping the edges of weight at least t."""
    if int(t) != t or t < 1:
        raise ValueError(f"Edge threshold must be an integer >= 1, got {t}.")
    edges = graph.edges
    edges = edges[edges[WEIGHT] >= t].assign(**{WEIGHT: 1})
    return ConnectomeGraph(edges, directed=graph.directed)


def filter_bodies(graph: ConnectomeGraph, body_filter: BodyFilter) -> ConnectomeGraph:
    """Drops every edge touching an inadmissible body."""
    if body_filter.admissible is None:
        return graph
    edges = graph.edges
    admissible = list(body_filter.admissible)
    keep = edges[PRE].isin(admissible) & edges[POST].isin(admissible)
    return ConnectomeGraph(edges[keep], directed=graph.directed)


def undirect_graph(graph: ConnectomeGraph) -> ConnectomeGraph:
    """Undirected view: {a, b} carries weight(a, b) + weight(b, a)."""
    return ConnectomeGraph(graph.edges, directed=False)


def collapse_ground_truth(ground_truth: SynapseSet, labels: LabelVolume) -> SynapseSet:
    """
    Removes autapses and merges partners sharing a body.

    A merged partner keeps the highest confidence and the position of the first partner seen on that body.
    """
    synapses = []
    for ii_synapse in ground_truth:
        pre = labels.body_at(ii_synapse.tbar.pos)
        by_body = {}
        for ii_partner in ii_synapse.partners:
            if ii_partner.body == pre:
                continue
            kept = by_body.get(ii_partner.body)
            if kept is None:
                by_body[ii_partner.body] = ii_partner
            elif ii_partner.confidence > kept.confidence:
                by_body[ii_partner.body] = Partner(kept.body, ii_partner.confidence, kept.pos)
        synapses.append(Synapse(ii_synapse.tbar, list(by_body.values())))
    return SynapseSet(synapses)


def resolve_partner_bodies(
    ground_truth: SynapseSet, labels: LabelVolume, gray: Optional[GrayVolume] = None, shift_radius: float = 0.0
) -> SynapseSet:
    """
    Assigns a body to every partner annotated with a PSD position.

    With a gray volume and a positive shift_radius, each PSD point is first moved to the brightest voxel nearby, the
    same rule applied to T-bar predictions. Partners without a position keep their body.
    """
    if gray is not None:
        check_same_dims(gray, labels)
    synapses = []
    for ii_synapse in ground_truth:
        partners = []
        for ii_partner in ii_synapse.partners:
            if ii_partner.pos is None:
                partners.append(ii_partner)
                continue
            labels.check_contains(ii_partner.pos, "PSD annotation")
            pos = ii_partner.pos
            if gray is not None and shift_radius > 0:
                pos = brightest_in_ball(gray, pos, shift_radius)
            partners.append(Partner(labels.body_at(pos), ii_partner.confidence, ii_partner.pos))
        synapses.append(Synapse(ii_synapse.tbar, partners))
    return SynapseSet(synapses)


def map_bodies_by_overlap(pred_labels: LabelVolume, gt_labels: LabelVolume) -> Dict[int, int]:
    """
    Maps each non-zero predicted body to the ground-truth body it overlaps most.

    Overlap is counted on voxels where both labels are non-zero; ties go to the smallest ground-truth id. Predicted
    bodies lying entirely on ground-truth label 0 are absent from the mapping.
    """
    check_same_dims(pred_labels, gt_labels)
    voxels = pd.DataFrame({"pred": pred_labels.data.ravel(), "gt": gt_labels.data.ravel()})
    voxels = voxels[(voxels["pred"] != 0) & (voxels["gt"] != 0)]
    if len(voxels) == 0:
        return {}
    overlaps = voxels.groupby(["pred", "gt"], as_index=False).size()
    best = overlaps.sort_values(["pred", "size", "gt"], ascending=[True, False, True]).drop_duplicates("pred")
    return {int(ii_pred): int(ii_gt) for ii_pred, ii_gt in zip(best["pred"], best["gt"])}


def remap_synapses(synapses: SynapseSet, mapping: Mapping[int, int]) -> SynapseSet:
    """
    Renames partner bodies through mapping; unmapped bodies become 0.

    Partners landing on the same body after renaming are merged, keeping the highest confidence.
    """
    remapped = []
    for ii_synapse in synapses:
        by_body = {}
        for ii_partner in ii_synapse.partners:
            body = int(mapping.get(ii_partner.body, 0))
            kept = by_body.get(body)
            if kept is None or ii_partner.confidence > kept.confidence:
                by_body[body] = Partner(body, ii_partner.confidence, ii_partner.pos)
        remapped.append(Synapse(ii_synapse.tbar, list(by_body.values())))
    return SynapseSet(remapped)


def edge_union(first: ConnectomeGraph, second: ConnectomeGraph, names: Iterable[str]) -> pd.DataFrame:
    """
    Outer join of two graphs' edges, absent weights filled with 0.

    Args:
        first, second: the graphs to align.
        names: column names for the first and second weights.

    Returns:
        Columns pre, post and the two weight columns, sorted by (pre, post).
    """
    first_name, second_name = list(names)
    merged = pd.merge(
        first.edges.rename(columns={WEIGHT: first_name}),
        second.edges.rename(columns={WEIGHT: second_name}),
        on=[PRE, POST],
        how="outer",
    )
    merged[[first_name, second_name]] = merged[[first_name, second_name]].fillna(0).astype(np.int64)
    return merged.sort_values([PRE, POST]).reset_index(drop=True)
