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
PandasEnum for providing the special string names used in polysynapse tables and files.
"""

from enum import Enum
from typing import Iterable

import pandas as pd


class PandasEnum(Enum):

    """
    Provides the strings for column names and JSON keys that polysynapse uses when reading and writing tables.

    These strings should not be used for other purposes.

    Meanings:
    PRE, POST - the pre-synaptic and post-synaptic body ids of a directed connectome edge.

    BODY_A, BODY_B - the two body ids of an undirected edge, with BODY_A < BODY_B.

    WEIGHT - the number of synapses forming an edge.

    THRESHOLD - the classifier confidence (or other sweep parameter) at which a precision/recall point was computed.

    GT_WEIGHT, PRED_WEIGHT - edge weights in the ground-truth and predicted connectomes.
    """

    # Connectome edges
    PRE = "pre"
    POST = "post"
    BODY_A = "a"
    BODY_B = "b"
    WEIGHT = "weight"

    # Precision/recall tables
    THRESHOLD = "threshold"
    PRECISION = "precision"
    RECALL = "recall"
    TRUE_POSITIVES = "tp"
    FALSE_POSITIVES = "fp"
    FALSE_NEGATIVES = "fn"
    PR_COLUMNS = [THRESHOLD, PRECISION, RECALL, TRUE_POSITIVES, FALSE_POSITIVES, FALSE_NEGATIVES]

    # Count comparison
    GT_WEIGHT = "gt_weight"
    PRED_WEIGHT = "pred_weight"
    WITHIN_BAND = "within_band"

    # Connections added/missed
    ADDED = "added"
    MISSED = "missed"
    NORMALIZER = "normalizer"

    # JSON keys of synapse files
    TBARS = "tbars"
    SYNAPSES = "synapses"
    TBAR = "tbar"
    PARTNERS = "partners"
    POS = "pos"
    BODY = "body"
    CONFIDENCE = "confidence"


def check_required_columns(df: pd.DataFrame, required_columns: Iterable[str], source: str = "table") -> None:
    """Raises KeyError naming the source and the first missing column."""
    for ii_column in required_columns:
        if ii_column not in df.columns:
            raise KeyError(f"{source}: missing column '{ii_column}' (found {list(df.columns)}).")
