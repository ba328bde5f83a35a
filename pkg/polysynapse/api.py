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
API facade that allows interaction with the library with strings and vanilla Python objects.
"""

# Python standard library
import dataclasses
from typing import List, Optional, Union

import pandas as pd

# Polysynapse packages
from polysynapse.algos import algorithm_functions
from polysynapse.base import TbarPrediction, as_point
from polysynapse.config import PipelineConfig
from polysynapse.PandasEnum import PandasEnum
from polysynapse.utilities import performance
from polysynapse.utilities.connectome import EDGE_COLUMNS, ConnectomeGraph
from polysynapse.utilities.performance import MatchSpec, PrCurve, PrPoint, graph_metric_functions


def _json_safe(value):
    """Default parameter values as JSON types; config objects become dictionaries."""
    if dataclasses.is_dataclass(value):
        return {ii_key: _json_safe(ii_value) for ii_key, ii_value in dataclasses.asdict(value).items()}
    if isinstance(value, (tuple, list)):
        return [_json_safe(ii_value) for ii_value in value]
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    return repr(value)


def _graph(edges: List[dict], directed: bool) -> ConnectomeGraph:
    """Graph from a list of {"pre", "post", "weight"} dictionaries."""
    return ConnectomeGraph(pd.DataFrame(list(edges), columns=EDGE_COLUMNS), directed=directed)


def _records(frame: pd.DataFrame) -> List[dict]:
    return frame.to_dict(orient="records")


class Api:
    """All public methods should input/output json-serialisable dictionaries."""

    @staticmethod
    def available_packages() -> List[str]:
        """Returns the pipeline stages that register algorithms."""
        return list(algorithm_functions.keys())

    @staticmethod
    def get_algorithm_information() -> dict:
        """Provides the package, default parameters and required parameters of every algorithm, as a flat dict."""
        combined_data = {}
        for ii_package in algorithm_functions:
            for jj_name, jj_entry in algorithm_functions[ii_package].items():
                combined_data[jj_name] = {
                    "package": ii_package,
                    "parameters": _json_safe(jj_entry["parameters"]),
                    "required": list(jj_entry["required"]),
                }
        return combined_data

    @staticmethod
    def available_algorithms(filter_by_package: Union[str, List[str]] = None) -> List[str]:
        """Returns the names of the available algorithms, optionally for some packages only."""
        if not filter_by_package:
            filter_by_package = Api.available_packages()
        elif isinstance(filter_by_package, str):
            filter_by_package = [filter_by_package]
        names = []
        for ii_package in filter_by_package:
            names += list(algorithm_functions[ii_package].keys())
        return names

    @staticmethod
    def determine_package_of_algorithm(name_of_algorithm: str) -> str:
        """Determines the pipeline stage an algorithm belongs to."""
        info = Api.get_algorithm_information()
        if name_of_algorithm not in info:
            raise NameError("Algorithm is not supported: ", name_of_algorithm)
        return info[name_of_algorithm]["package"]

    @staticmethod
    def required_parameters_for_algorithm(name_of_algorithm: str) -> dict:
        """Default parameter values of an algorithm."""
        info = Api.get_algorithm_information()
        if name_of_algorithm not in info:
            raise NameError("Algorithm is not supported: ", name_of_algorithm)
        return info[name_of_algorithm]["parameters"]

    @staticmethod
    def available_metric_modes() -> List[str]:
        return list(graph_metric_functions.keys())

    @staticmethod
    def required_parameters_for_metric(mode: str) -> List[str]:
        """Extra parameters a graph comparison view needs, e.g. ["t1", "t2"] for "asymmetric"."""
        if mode not in graph_metric_functions:
            raise ValueError(f"Unknown metric mode '{mode}', expected one of {sorted(graph_metric_functions)}.")
        return list(graph_metric_functions[mode]["required"])

    @staticmethod
    def default_config() -> dict:
        return PipelineConfig().to_dict()

    @staticmethod
    def validate_config(config: dict) -> dict:
        """Parses a configuration, raising on unknown keys or invalid values, and returns it with defaults filled."""
        return PipelineConfig.from_dict(config).to_dict()

    @staticmethod
    def evaluate_graphs(
        mode: str,
        predicted_edges: List[dict],
        ground_truth_edges: List[dict],
        params: Optional[dict] = None,
        directed: bool = True,
    ) -> dict:
        """Compares two edge lists ({"pre", "post", "weight"} each) and returns a precision/recall point."""
        point = performance.evaluate_graphs(
            mode, _graph(predicted_edges, directed), _graph(ground_truth_edges, directed), params
        )
        return dataclasses.asdict(point)

    @staticmethod
    def connections_added_missed(
        predicted_edges: List[dict], ground_truth_edges: List[dict], t1: int, t2: int, directed: bool = True
    ) -> dict:
        """Lists the connections added and missed together with the normaliser."""
        result = performance.connections_added_missed(
            _graph(predicted_edges, directed), _graph(ground_truth_edges, directed), t1, t2
        )
        return {
            PandasEnum.ADDED.value: _records(result.added),
            PandasEnum.MISSED.value: _records(result.missed),
            PandasEnum.NORMALIZER.value: result.normalizer,
        }

    @staticmethod
    def count_scatter(predicted_edges: List[dict], ground_truth_edges: List[dict], directed: bool = True) -> List[dict]:
        scatter = performance.count_scatter(_graph(predicted_edges, directed), _graph(ground_truth_edges, directed))
        return _records(scatter)

    @staticmethod
    def break_even_point(curve: List[dict]) -> Optional[dict]:
        """Break-even point of a curve given as a list of precision/recall point dictionaries."""
        points = [PrPoint(**{ii_key: ii_point[ii_key] for ii_key in PandasEnum.PR_COLUMNS.value}) for ii_point in curve]
        best = performance.break_even_point(PrCurve(points))
        if best is None:
            return None
        return {PandasEnum.THRESHOLD.value: best[0], "value": best[1]}

    @staticmethod
    def match_tbars(predicted: List[dict], ground_truth: List[list], max_distance: float = 27.0) -> dict:
        """
        Matches predicted T-bars ({"pos": [x, y, z], "confidence": c}) to ground-truth positions by distance.

        Returns:
            {"matches": [[pred index, gt index], ...], "unmatched_pred": [...], "unmatched_gt": [...]}
        """
        pred = [
            TbarPrediction(ii_tbar[PandasEnum.POS.value], ii_tbar.get(PandasEnum.CONFIDENCE.value, 1.0))
            for ii_tbar in predicted
        ]
        gt = [as_point(ii_pos) for ii_pos in ground_truth]
        result = performance.match_tbars(pred, gt, MatchSpec(max_distance))
        return {
            "matches": [list(ii_pair) for ii_pair in result.matches],
            "unmatched_pred": list(result.unmatched_pred),
            "unmatched_gt": list(result.unmatched_gt),
        }
