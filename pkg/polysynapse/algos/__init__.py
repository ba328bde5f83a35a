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
Detection and classification algorithms.
"""

from polysynapse.algos.baseline import baseline_curve, proximity_baseline
from polysynapse.algos.psd_partners import (
    candidates_for_tbar,
    extract_features,
    interface_mask,
    mask_dark_voxels,
    predict_partners,
    psd_train,
)
from polysynapse.algos.scorers import FieldScorer, PatchMlpScorer, reference_scorer_train
from polysynapse.algos.tbar_detection import (
    detect_tbars,
    filter_tbars_by_confidence,
    make_voxel_labels,
    nms,
    shift_predictions,
)
from polysynapse.utilities.simple_functions import make_registry


# Voxel scorer implementations by their serialised "kind".
scorer_classes = {PatchMlpScorer.kind: PatchMlpScorer, FieldScorer.kind: FieldScorer}

# A dictionary of the available algorithms per pipeline stage, with their default parameters.
algorithm_functions = {
    "tbar": make_registry(
        [make_voxel_labels, reference_scorer_train, nms, shift_predictions, detect_tbars, filter_tbars_by_confidence]
    ),
    "psd": make_registry(
        [mask_dark_voxels, candidates_for_tbar, interface_mask, extract_features, psd_train, predict_partners]
    ),
    "baseline": make_registry([proximity_baseline, baseline_curve]),
}
