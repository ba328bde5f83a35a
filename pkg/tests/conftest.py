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
Top level configuration for testing.
"""

import numpy as np
import pytest

from polysynapse.base import GrayVolume, LabelVolume
from polysynapse.data.simulate_data import SynthConfig, SynthScene, simulated_scene


SMALL_SCENE_CONFIG = SynthConfig(dims=(40, 40, 40), n_bodies=6, n_tbars=4, min_tbar_spacing=10.0, seed=3)


@pytest.fixture(scope="session")
def small_scene() -> SynthScene:
    """A small synthetic scene shared by the slower tests."""
    return simulated_scene(SMALL_SCENE_CONFIG)


@pytest.fixture()
def two_body_labels() -> LabelVolume:
    """A 10 x 6 x 4 volume split at x = 5 into body 1 (left) and body 2 (right)."""
    data = np.ones((4, 6, 10), dtype=np.uint32)
    data[:, :, 5:] = 2
    return LabelVolume(data)


@pytest.fixture()
def flat_gray() -> GrayVolume:
    """A uniform 10 x 6 x 4 gray volume at intensity 100."""
    return GrayVolume(np.full((4, 6, 10), 100, dtype=np.uint8))
