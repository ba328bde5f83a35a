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
Synthetic test data generator: a Voronoi segmentation with membranes, bright T-bar blobs and dark PSDs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from polysynapse.base import GrayVolume, LabelVolume, Partner, Point3, Synapse, SynapseSet, TbarPrediction
from polysynapse.utilities.morphology import ball_window, dilate_mask


logger = logging.getLogger(__name__)

# Range of distances from the nearest membrane voxel at which T-bars are planted.
_TBAR_MEMBRANE_DISTANCE = (3.0, 4.5)
# Partner voxels must touch the pre-synaptic body within this distance.
_CONTACT_RADIUS = 1.5


@dataclass(frozen=True)
class SynthConfig:
    """
    Description of a synthetic scene. Intensities are in [0, 255] and lengths in voxels.

    PSD voxels closer than psd_clearance to a third body are left undarkened, and only neighbours with at least
    min_psd_voxels darkened voxels can become partners. The defaults darken the whole contact.
    """

    dims: Tuple[int, int, int] = (64, 64, 64)
    n_bodies: int = 8
    n_tbars: int = 12
    min_partners: int = 1
    max_partners: int = 3
    noise_sigma: float = 10.0
    seed: int = 0
    blob_radius: float = 2.0
    blob_intensity: int = 250
    interior_intensity: int = 150
    membrane_intensity: int = 90
    psd_intensity: int = 30
    psd_reach: float = 6.0
    min_tbar_spacing: float = 12.0
    split_bodies: int = 0
    psd_clearance: float = 0.0
    min_psd_voxels: int = 1

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(ii_dim) for ii_dim in self.dims))
        if len(self.dims) != 3 or min(self.dims) < 8:
            raise ValueError(f"Synthetic volumes need three dims of at least 8 voxels, got {list(self.dims)}.")
        if self.n_bodies < 2:
            raise ValueError(f"n_bodies must be at least 2, got {self.n_bodies}.")
        if self.n_bodies > self.dims[0] * self.dims[1] * self.dims[2]:
            raise ValueError(f"Cannot place {self.n_bodies} bodies in dims {list(self.dims)}.")
        if self.n_tbars < 0:
            raise ValueError(f"n_tbars must be non-negative, got {self.n_tbars}.")
        if not 1 <= self.min_partners <= self.max_partners:
            raise ValueError(f"Need 1 <= min_partners <= max_partners, got {self.min_partners}, {self.max_partners}.")
        if not math.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}.")
        for ii_name in ["blob_intensity", "interior_intensity", "membrane_intensity", "psd_intensity"]:
            if not 0 <= getattr(self, ii_name) <= 255:
                raise ValueError(f"{ii_name} must lie in [0, 255], got {getattr(self, ii_name)}.")
        if not 0 <= self.split_bodies <= self.n_bodies:
            raise ValueError(f"split_bodies must lie in [0, n_bodies], got {self.split_bodies}.")
        if not math.isfinite(self.psd_clearance) or self.psd_clearance < 0:
            raise ValueError(f"psd_clearance must be non-negative, got {self.psd_clearance}.")
        if self.min_psd_voxels < 1:
            raise ValueError(f"min_psd_voxels must be at least 1, got {self.min_psd_voxels}.")


@dataclass(frozen=True)
class SynthScene:
    """A generated image, its segmentation, the planted synapses and optionally a perturbed segmentation."""

    gray: GrayVolume
    labels: LabelVolume
    ground_truth: SynapseSet
    predicted_labels: Optional[LabelVolume] = None


def voronoi_labels(shape: Tuple[int, int, int], n_bodies: int, rng: np.random.Generator) -> np.ndarray:
    """Labels 1..n_bodies by nearest seed voxel; seeds are distinct random voxels."""
    seeds = rng.choice(shape[0] * shape[1] * shape[2], size=n_bodies, replace=False)
    seed_ids = np.zeros(shape, dtype=np.uint32)
    seed_ids[np.unravel_index(seeds, shape)] = np.arange(1, n_bodies + 1, dtype=np.uint32)
    nearest = ndimage.distance_transform_edt(seed_ids == 0, return_distances=False, return_indices=True)
    return seed_ids[tuple(nearest)]


def membrane_mask(labels: np.ndarray) -> np.ndarray:
    """Voxels with a 6-neighbour carrying a different label."""
    membrane = np.zeros(labels.shape, dtype=bool)
    for ii_axis in range(3):
        differs = np.diff(labels, axis=ii_axis) != 0
        lower = [slice(None)] * 3
        upper = [slice(None)] * 3
        lower[ii_axis] = slice(0, -1)
        upper[ii_axis] = slice(1, None)
        membrane[tuple(lower)] |= differs
        membrane[tuple(upper)] |= differs
    return membrane


def _tbar_sites(labels: np.ndarray, membrane: np.ndarray, margin: int, rng: np.random.Generator) -> np.ndarray:
    """Shuffled flat indices of voxels at the planting distance from membranes and at least margin from the faces."""
    distance = ndimage.distance_transform_edt(~membrane)
    low, high = _TBAR_MEMBRANE_DISTANCE
    eligible = (distance >= low) & (distance < high) & (labels != 0)
    interior = np.zeros(labels.shape, dtype=bool)
    interior[margin:-margin, margin:-margin, margin:-margin] = True
    sites = np.flatnonzero(eligible & interior)
    return rng.permutation(sites)


def _contacts(
    labels: np.ndarray, near_body: np.ndarray, center: Point3, body: int, reach: float
) -> Tuple[Tuple[slice, slice, slice], np.ndarray]:
    """Window around center and mask of voxels within reach that touch the body but belong to another one."""
    window, inside = ball_window(labels.shape, center, reach)
    local = labels[window]
    return window, inside & near_body[window] & (local != body) & (local != 0)


def _crowded(labels: np.ndarray, window: Tuple[slice, slice, slice], bodies: List[int], clearance: float) -> np.ndarray:
    """Voxels of window within clearance of a voxel whose body is not in bodies."""
    margin = int(math.ceil(clearance))
    outer = tuple(
        slice(max(ii_slice.start - margin, 0), min(ii_slice.stop + margin, ii_size))
        for ii_slice, ii_size in zip(window, labels.shape)
    )
    near = dilate_mask(~np.isin(labels[outer], bodies), clearance)
    inner = tuple(
        slice(ii_slice.start - ii_outer.start, ii_slice.stop - ii_outer.start)
        for ii_slice, ii_outer in zip(window, outer)
    )
    return near[inner]


def _psd_masks(
    labels: np.ndarray, window: Tuple[slice, slice, slice], contact: np.ndarray, body: int, cfg: SynthConfig
) -> Dict[int, np.ndarray]:
    """Voxels to darken for each neighbour that has at least cfg.min_psd_voxels of them."""
    local = labels[window]
    masks = {}
    for ii_neighbour in sorted(int(ii_id) for ii_id in np.unique(local[contact])):
        psd = contact & (local == ii_neighbour)
        if cfg.psd_clearance > 0:
            psd &= ~_crowded(labels, window, [body, ii_neighbour], cfg.psd_clearance)
        if np.sum(psd) >= cfg.min_psd_voxels:
            masks[ii_neighbour] = psd
    return masks


def split_labels(labels: np.ndarray, n_split: int, rng: np.random.Generator) -> np.ndarray:
    """Cuts n_split randomly chosen bodies in two at the median of their longest axis; new ids follow the maximum."""
    split = labels.copy()
    bodies = [int(ii_id) for ii_id in np.unique(labels) if ii_id != 0]
    next_id = max(bodies) + 1
    for ii_body in sorted(rng.choice(bodies, size=n_split, replace=False)):
        coordinates = np.argwhere(labels == ii_body)
        if len(coordinates) < 2:
            continue
        extent = coordinates.max(axis=0) - coordinates.min(axis=0)
        axis = int(np.argmax(extent))
        cut = np.median(coordinates[:, axis])
        upper = coordinates[coordinates[:, axis] > cut]
        if len(upper) == 0:
            continue
        split[tuple(upper.T)] = next_id
        next_id += 1
    return split


def simulated_scene(cfg: SynthConfig = SynthConfig()) -> SynthScene:
    """
    Generates a synthetic scene deterministically from cfg.seed.

    Bodies are Voronoi cells separated by membrane voxels. Each T-bar is a bright ball inside its body, placed a few
    voxels from a membrane. Its partners are 1 to 3 neighbouring bodies touching the T-bar's body nearby, and their
    contact voxels near the T-bar are darkened as PSDs. Ground-truth partners carry both their body and the PSD voxel
    closest to the T-bar.

    Raises:
        ValueError: if the requested number of T-bars cannot be placed.
    """
    rng = np.random.default_rng(cfg.seed)
    nx, ny, nz = cfg.dims
    shape = (nz, ny, nx)
    labels = voronoi_labels(shape, cfg.n_bodies, rng)
    membrane = membrane_mask(labels)

    intensity = np.full(shape, float(cfg.interior_intensity))
    intensity[membrane] = cfg.membrane_intensity

    margin = int(math.ceil(cfg.blob_radius)) + 2
    sites = _tbar_sites(labels, membrane, margin, rng)
    near_body: Dict[int, np.ndarray] = {}
    placed: List[Point3] = []
    synapses = []
    for ii_site in sites:
        if len(synapses) == cfg.n_tbars:
            break
        z, y, x = np.unravel_index(ii_site, shape)
        center = Point3(int(x), int(y), int(z))
        if any(center.distance_to(ii_other) < cfg.min_tbar_spacing for ii_other in placed):
            continue
        body = int(labels[z, y, x])
        if body not in near_body:
            near_body[body] = dilate_mask(labels == body, _CONTACT_RADIUS)
        window, contact = _contacts(labels, near_body[body], center, body, cfg.psd_reach)
        psd_masks = _psd_masks(labels, window, contact, body, cfg)
        neighbours = sorted(psd_masks)
        if not neighbours:
            continue

        n_partners = int(rng.integers(cfg.min_partners, cfg.max_partners + 1))
        n_partners = min(n_partners, len(neighbours))
        partner_bodies = sorted(int(ii_id) for ii_id in rng.choice(neighbours, size=n_partners, replace=False))

        partners = []
        offsets = np.array([window[0].start, window[1].start, window[2].start])
        for ii_partner in partner_bodies:
            psd = psd_masks[ii_partner]
            intensity[window][psd] = cfg.psd_intensity
            voxels = np.argwhere(psd) + offsets
            squared = ((voxels - np.array([center.z, center.y, center.x])) ** 2).sum(axis=1)
            nearest = voxels[int(np.argmin(squared))]
            partners.append(Partner(ii_partner, 1.0, Point3(int(nearest[2]), int(nearest[1]), int(nearest[0]))))

        blob_window, blob = ball_window(shape, center, cfg.blob_radius)
        blob &= labels[blob_window] == body
        intensity[blob_window][blob] = cfg.blob_intensity

        placed.append(center)
        synapses.append(Synapse(TbarPrediction(center, 1.0), partners))

    if len(synapses) < cfg.n_tbars:
        raise ValueError(f"Only {len(synapses)} of {cfg.n_tbars} T-bars fit in the synthetic volume.")

    if cfg.noise_sigma > 0:
        intensity = intensity + rng.normal(0.0, cfg.noise_sigma, size=shape)
    gray = np.clip(np.round(intensity), 0, 255).astype(np.uint8)

    predicted = None
    if cfg.split_bodies > 0:
        predicted = LabelVolume(split_labels(labels, cfg.split_bodies, rng))
    logger.info("Synthesised %d bodies and %d T-bars.", cfg.n_bodies, len(synapses))
    return SynthScene(GrayVolume(gray), LabelVolume(labels), SynapseSet(synapses), predicted)
