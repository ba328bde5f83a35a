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
Base volume containers used by every other part of the package.

Volumes hold a numpy array of shape (nz, ny, nx) in C order, so the x index varies fastest in memory and in the raw
files written by `polysynapse.utilities.export`. Dimensions are always reported as (nx, ny, nz) and a voxel at
Point3(x, y, z) is `data[z, y, x]`.
"""

from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np


Dims = Tuple[int, int, int]


class Point3(NamedTuple):
    """Integer voxel coordinate."""

    x: int
    y: int
    z: int

    def as_index(self) -> Tuple[int, int, int]:
        """Numpy index (z, y, x) of the point."""
        return self.z, self.y, self.x

    def distance_to(self, other: "Point3") -> float:
        """Euclidean distance in voxel units."""
        return float(np.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2))


def as_point(values: Iterable[int]) -> Point3:
    """Builds a Point3 from any length-three sequence of integers."""
    values = list(values)
    if len(values) != 3:
        raise ValueError(f"A point needs exactly three coordinates, got {values}.")
    return Point3(int(values[0]), int(values[1]), int(values[2]))


def _validate_dims(dims: Sequence[int]) -> Dims:
    """Checks dims are three positive integers."""
    if len(dims) != 3:
        raise ValueError(f"Volume dims must have three entries, got {list(dims)}.")
    if any(int(ii_dim) != ii_dim or ii_dim <= 0 for ii_dim in dims):
        raise ValueError(f"Volume dims must be positive integers, got {list(dims)}.")
    return int(dims[0]), int(dims[1]), int(dims[2])


def shape_from_dims(dims: Sequence[int]) -> Tuple[int, int, int]:
    """Numpy shape (nz, ny, nx) for dims (nx, ny, nz)."""
    nx, ny, nz = _validate_dims(dims)
    return nz, ny, nx


class Volume:
    """Shared behaviour of the three dense grids: immutability, dims and bounds checks."""

    dtype = None

    def __init__(self, data: np.ndarray):
        data = np.asarray(data)
        if data.ndim != 3:
            raise ValueError(f"{type(self).__name__} needs a 3D array, got {data.ndim} dimensions.")
        if 0 in data.shape:
            raise ValueError(f"{type(self).__name__} dims must be positive, got shape {data.shape}.")
        data = self._check_values(data)
        data = np.ascontiguousarray(data, dtype=self.dtype)
        data.setflags(write=False)
        self._data = data

    @classmethod
    def from_flat(cls, dims: Sequence[int], values: Sequence) -> "Volume":
        """Builds a volume from dims (nx, ny, nz) and a flat x-fastest sequence."""
        shape = shape_from_dims(dims)
        values = np.asarray(values)
        if values.size != shape[0] * shape[1] * shape[2]:
            raise ValueError(f"Data length {values.size} does not match dims {list(dims)}.")
        return cls(values.reshape(shape))

    @staticmethod
    def _check_values(data: np.ndarray) -> np.ndarray:
        return data

    @property
    def data(self) -> np.ndarray:
        """Read-only array of shape (nz, ny, nx)."""
        return self._data

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self._data.shape

    @property
    def dims(self) -> Dims:
        """Volume size as (nx, ny, nz)."""
        nz, ny, nx = self._data.shape
        return nx, ny, nz

    def contains(self, point: Point3) -> bool:
        """Whether the point lies inside the volume."""
        nx, ny, nz = self.dims
        return 0 <= point.x < nx and 0 <= point.y < ny and 0 <= point.z < nz

    def check_contains(self, point: Point3, name: str = "point") -> None:
        """Raises ValueError naming the point if it is out of bounds."""
        if not self.contains(point):
            raise ValueError(f"The {name} {tuple(point)} lies outside volume of dims {self.dims}.")

    def __getitem__(self, point: Point3):
        return self._data[point.z, point.y, point.x]

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and np.array_equal(self._data, other._data)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dims={self.dims})"


class GrayVolume(Volume):
    """Grayscale EM intensities, integers in [0, 255]."""

    dtype = np.uint8

    @staticmethod
    def _check_values(data: np.ndarray) -> np.ndarray:
        if data.dtype != np.uint8:
            if not np.all(np.isfinite(data)) or np.any(data < 0) or np.any(data > 255):
                raise ValueError("Gray intensities must lie in [0, 255].")
            if np.issubdtype(data.dtype, np.floating) and np.any(data != np.round(data)):
                raise ValueError("Gray intensities must be integers.")
        return data


class LabelVolume(Volume):
    """Segment ids per voxel; id 0 means ignored/unassigned."""

    dtype = np.uint32

    @staticmethod
    def _check_values(data: np.ndarray) -> np.ndarray:
        if np.issubdtype(data.dtype, np.signedinteger) and np.any(data < 0):
            raise ValueError("Segment ids must be non-negative.")
        if np.issubdtype(data.dtype, np.floating):
            raise TypeError("Segment ids must be integers.")
        return data

    def body_ids(self) -> np.ndarray:
        """Sorted non-zero segment ids present in the volume."""
        ids = np.unique(self._data)
        return ids[ids != 0]

    def body_at(self, point: Point3) -> int:
        """Segment id at a point (0 if unassigned)."""
        self.check_contains(point)
        return int(self[point])


class ScalarField(Volume):
    """Real-valued per-voxel score, e.g. the output of a voxel scorer."""

    dtype = np.float64

    @staticmethod
    def _check_values(data: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(data)):
            raise ValueError("Scalar field values must be finite.")
        return data


def check_same_dims(*volumes: Volume) -> None:
    """Raises ValueError if the volumes do not share dims."""
    dims = {ii_volume.dims for ii_volume in volumes}
    if len(dims) > 1:
        raise ValueError(f"Volumes must share dims, got {sorted(dims)}.")


@dataclass(frozen=True)
class TbarPrediction:
    """A pre-synaptic T-bar point with its detector confidence in [0, 1]."""

    pos: Point3
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pos", as_point(self.pos))
        confidence = float(self.confidence)
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"T-bar confidence must lie in [0, 1], got {confidence} at {tuple(self.pos)}.")
        object.__setattr__(self, "confidence", confidence)


@dataclass(frozen=True)
class Partner:
    """A post-synaptic partner: a body id and classifier confidence, optionally with an annotated PSD point."""

    body: int
    confidence: float = 1.0
    pos: Optional[Point3] = None

    def __post_init__(self):
        object.__setattr__(self, "body", int(self.body))
        if self.body < 0:
            raise ValueError(f"Partner body ids must be non-negative, got {self.body}.")
        confidence = float(self.confidence)
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"Partner confidence must lie in [0, 1], got {confidence}.")
        object.__setattr__(self, "confidence", confidence)
        if self.pos is not None:
            object.__setattr__(self, "pos", as_point(self.pos))


@dataclass(frozen=True)
class Synapse:
    """One polyadic synapse: a T-bar and its post-synaptic partners."""

    tbar: TbarPrediction
    partners: Tuple[Partner, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "partners", tuple(self.partners))

    def partner_bodies(self) -> List[int]:
        return [ii_partner.body for ii_partner in self.partners]


@dataclass(frozen=True)
class SynapseSet:
    """
    A list of synapses.

    Predicted sets satisfy `is_collapsed`: partner bodies are distinct within a synapse and never equal the T-bar's
    own body. Ground-truth sets may break this until `polysynapse.utilities.connectome.collapse_ground_truth`.
    """

    synapses: Tuple[Synapse, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "synapses", tuple(self.synapses))

    def __len__(self) -> int:
        return len(self.synapses)

    def __iter__(self):
        return iter(self.synapses)

    @property
    def tbars(self) -> List[TbarPrediction]:
        return [ii_synapse.tbar for ii_synapse in self.synapses]

    def is_collapsed(self, labels: Optional[LabelVolume] = None) -> bool:
        """Whether partner bodies are distinct per synapse and, given labels, never the T-bar's own body."""
        for ii_synapse in self.synapses:
            bodies = ii_synapse.partner_bodies()
            if len(bodies) != len(set(bodies)):
                return False
            if labels is not None and labels.body_at(ii_synapse.tbar.pos) in bodies:
                return False
        return True
