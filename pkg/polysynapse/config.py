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
The configuration of every pipeline stage in one object, read from and written to the JSON given to `--config`.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

from polysynapse.algos.baseline import BaselineConfig
from polysynapse.algos.mlp import TrainSpec
from polysynapse.algos.psd_partners import PartnerConfig
from polysynapse.algos.tbar_detection import DetectorConfig
from polysynapse.base import LabelVolume
from polysynapse.data.simulate_data import SynthConfig
from polysynapse.utilities.performance import MatchSpec


@dataclass(frozen=True)
class MatchConfig:
    """File-level part of MatchSpec; the segmentation is supplied at run time."""

    max_distance: float = 27.0

    def __post_init__(self):
        if not math.isfinite(self.max_distance) or self.max_distance < 0:
            raise ValueError(f"max_distance must be non-negative, got {self.max_distance}.")

    def spec(self, segmentation: Optional[LabelVolume] = None) -> MatchSpec:
        return MatchSpec(self.max_distance, segmentation is not None, segmentation)


@dataclass(frozen=True)
class PipelineConfig:
    """All stage configurations. Section names are the JSON keys."""

    detector: DetectorConfig = field(default_factory=DetectorConfig)
    tbar_train: TrainSpec = field(default_factory=TrainSpec)
    partners: PartnerConfig = field(default_factory=PartnerConfig)
    psd_train: TrainSpec = field(default_factory=TrainSpec)
    match: MatchConfig = field(default_factory=MatchConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    @classmethod
    def section_types(cls) -> dict:
        return {ii_field.name: ii_field.default_factory for ii_field in dataclasses.fields(cls)}

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        """
        Builds a config from nested dictionaries; missing sections and values take their defaults.

        Raises:
            KeyError: on an unknown section or an unknown key inside a section.
        """
        sections = cls.section_types()
        values = {}
        for ii_section, ii_values in data.items():
            if ii_section not in sections:
                raise KeyError(f"Unknown config section '{ii_section}', expected one of {sorted(sections)}.")
            known = {ii_field.name for ii_field in dataclasses.fields(sections[ii_section])}
            unknown = sorted(set(ii_values) - known)
            if unknown:
                raise KeyError(f"Unknown key '{unknown[0]}' in config section '{ii_section}'.")
            values[ii_section] = sections[ii_section](**ii_values)
        return cls(**values)

    def to_dict(self) -> dict:
        """Nested JSON-serialisable dictionaries; tuples become lists."""
        result = {}
        for ii_section in self.section_types():
            section = dataclasses.asdict(getattr(self, ii_section))
            result[ii_section] = {
                ii_key: list(ii_value) if isinstance(ii_value, tuple) else ii_value
                for ii_key, ii_value in section.items()
            }
        return result

    def override(self, section: str, **values) -> "PipelineConfig":
        """A copy with some values of one section replaced; None values are ignored."""
        values = {ii_key: ii_value for ii_key, ii_value in values.items() if ii_value is not None}
        if not values:
            return self
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **values)})


# Settings under which the trained pipeline recovers the default scenes of `synth` (64^3 voxels, 8 bodies, 12 T-bars,
# noise sigma 10). Positives and suppression match the blob radius of 2. No candidate sphere around a shifted T-bar may
# reach the PSDs of another T-bar, and PSDs keep clear of third bodies by at least the largest dilation radius.
PLANTED_SCENE_SETTINGS = {
    "detector": {"positive_radius": 2.0, "nms_radius": 8.0},
    "partners": {"candidate_radius": 10.0},
    "psd_train": {"learning_rate": 0.5, "epochs": 300},
    "synth": {"min_tbar_spacing": 20.0, "psd_clearance": 2.0, "min_psd_voxels": 8},
}


def planted_scene_config() -> PipelineConfig:
    """The pipeline configuration for scenes generated by `synth`; write its to_dict() to a file for --config."""
    return PipelineConfig.from_dict(PLANTED_SCENE_SETTINGS)
