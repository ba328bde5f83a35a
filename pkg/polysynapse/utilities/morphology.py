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
Filtering and morphology primitives on volumes: smoothing, ball structuring elements, dilation, sphere queries and
segment boundary enumeration.

All radii are in voxel units and balls use the Euclidean metric.
"""

import math
from typing import Set, Tuple

import numpy as np
from scipy import ndimage

from polysynapse.base import GrayVolume, LabelVolume, Point3, ScalarField


Window = Tuple[slice, slice, slice]


def check_radius(radius: float, name: str = "radius") -> float:
    """Returns the radius as float, raising ValueError if it is negative or not finite."""
    if not math.isfinite(radius) or radius < 0:
        raise ValueError(f"The {name} must be finite and non-negative, got {radius}.")
    return float(radius)


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalised 1D Gaussian kernel truncated at ceil(3 * sigma) taps each side."""
    if not math.isfinite(sigma) or sigma <= 0:
        raise ValueError(f"Smoothing sigma must be finite and positive, got {sigma}.")
    half_width = int(math.ceil(3.0 * sigma))
    taps = np.arange(-half_width, half_width + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (taps / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_smooth(field: ScalarField, sigma: float) -> ScalarField:
    """
    Separable Gaussian smoothing with edge replication at the volume faces.

    Args:
        field: the scores to smooth.
        sigma: standard deviation of the kernel in voxels.

    Returns:
        A ScalarField with the same dims.
    """
    kernel = gaussian_kernel_1d(sigma)
    smoothed = np.asarray(field.data, dtype=np.float64)
    for ii_axis in range(3):
        smoothed = ndimage.correlate1d(smoothed, kernel, axis=ii_axis, output=np.float64, mode="nearest")
    return ScalarField(smoothed)


def ball_footprint(radius: float) -> np.ndarray:
    """Boolean cube of side 2 * floor(radius) + 1 that is True inside the ball."""
    radius = check_radius(radius)
    half_width = int(math.floor(radius))
    zz, yy, xx = np.ogrid[-half_width : half_width + 1, -half_width : half_width + 1, -half_width : half_width + 1]
    return (xx ** 2 + yy ** 2 + zz ** 2) <= radius ** 2


def ball_mask(radius: float) -> np.ndarray:
    """
    All integer offsets within a ball.

    Returns:
        An int array of shape (n, 3) whose rows are (dx, dy, dz) with dx^2 + dy^2 + dz^2 <= radius^2.
    """
    footprint = ball_footprint(radius)
    half_width = footprint.shape[0] // 2
    offsets_zyx = np.argwhere(footprint) - half_width
    return offsets_zyx[:, ::-1].astype(np.int64)


def ball_window(shape: Tuple[int, int, int], center: Point3, radius: float) -> Tuple[Window, np.ndarray]:
    """
    The clipped box around a ball and a boolean mask of the ball voxels inside that box.

    The box is returned as numpy slices in (z, y, x) order so it can index volume data directly.
    """
    radius = check_radius(radius)
    half_width = int(math.floor(radius))
    window = box_window(shape, center, half_width)
    zz, yy, xx = np.ogrid[window[0], window[1], window[2]]
    inside = ((xx - center.x) ** 2 + (yy - center.y) ** 2 + (zz - center.z) ** 2) <= radius ** 2
    return window, inside


def box_window(shape: Tuple[int, int, int], center: Point3, margin: int) -> Window:
    """Slices of the box center +/- margin clipped to a volume of the given numpy shape."""
    nz, ny, nx = shape
    return (
        slice(max(center.z - margin, 0), min(center.z + margin + 1, nz)),
        slice(max(center.y - margin, 0), min(center.y + margin + 1, ny)),
        slice(max(center.x - margin, 0), min(center.x + margin + 1, nx)),
    )


def dilate_mask(mask: np.ndarray, radius: float) -> np.ndarray:
    """Binary dilation by a ball; voxels beyond the array faces count as background."""
    radius = check_radius(radius)
    mask = np.asarray(mask, dtype=bool)
    if radius < 1:
        # The ball holds only its center below radius 1.
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=ball_footprint(radius))


def dilate_segment(labels: LabelVolume, body: int, radius: float) -> np.ndarray:
    """Mask of voxels within radius of any voxel of the body."""
    if body == 0:
        raise ValueError("Cannot dilate segment id 0, it marks ignored voxels.")
    return dilate_mask(labels.data == body, radius)


def bodies_in_sphere(labels: LabelVolume, center: Point3, radius: float) -> Set[int]:
    """Non-zero segment ids that intersect the ball of the given radius around center."""
    labels.check_contains(center, "sphere center")
    window, inside = ball_window(labels.shape, center, radius)
    ids = np.unique(labels.data[window][inside])
    return {int(ii_id) for ii_id in ids if ii_id != 0}


def brightest_in_ball(gray: GrayVolume, center: Point3, radius: float) -> Point3:
    """
    The brightest voxel within radius of center.

    Ties go to the voxel with the smallest (z, y, x), so repeated calls always agree.
    """
    gray.check_contains(center, "center")
    window, inside = ball_window(gray.shape, center, radius)
    values = np.where(inside, gray.data[window].astype(np.int64), -1)
    # argmax returns the first maximum in C order, which is lexicographic (z, y, x) within the box.
    z, y, x = np.unravel_index(int(np.argmax(values)), values.shape)
    return Point3(int(x + window[2].start), int(y + window[1].start), int(z + window[0].start))


def boundary_voxel_pairs(labels: LabelVolume) -> np.ndarray:
    """
    Every pair of 6-adjacent voxels carrying two different non-zero segment ids.

    Returns:
        An int array of shape (n, 2, 3). Pair i holds (u, v) as (x, y, z) coordinates where v is u plus one unit step
        along x, y or z, so every unordered adjacent pair appears exactly once.
    """
    data = labels.data
    all_pairs = []
    # Numpy axes 2, 1, 0 are x, y, z.
    for ii_axis, step in ((2, (1, 0, 0)), (1, (0, 1, 0)), (0, (0, 0, 1))):
        length = data.shape[ii_axis]
        lower = np.take(data, np.arange(0, length - 1), axis=ii_axis)
        upper = np.take(data, np.arange(1, length), axis=ii_axis)
        differs = (lower != upper) & (lower != 0) & (upper != 0)
        u_xyz = np.argwhere(differs)[:, ::-1]
        v_xyz = u_xyz + np.asarray(step)
        all_pairs.append(np.stack([u_xyz, v_xyz], axis=1))
    return np.concatenate(all_pairs, axis=0).astype(np.int64)


def pair_labels(labels: LabelVolume, pairs: np.ndarray) -> np.ndarray:
    """Segment ids of both ends of each voxel pair, as an (n, 2) array."""
    data = labels.data
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    first = data[pairs[:, 0, 2], pairs[:, 0, 1], pairs[:, 0, 0]]
    second = data[pairs[:, 1, 2], pairs[:, 1, 1], pairs[:, 1, 0]]
    return np.stack([first, second], axis=1).astype(np.int64)
