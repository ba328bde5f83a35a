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
Base directory for the package

Files and sub-directory information:

/algos - T-bar detection, partner classification and the proximity baseline
/data - synthetic volumes with planted synapses
/utilities - connectome graphs, morphology, performance calculations and file formats
api.py - API functionality for the package
cli.py - the polysynapse command line
config.py - configuration of every pipeline stage
__init__.py - package identifier
_version - package version number.
"""

from polysynapse.base import *
from polysynapse.algos import *
from polysynapse.api import *
