"""Occupancy belief: log-odds voxel grid with unknown-voxel classification.

Voxels start UNKNOWN and never return to it. Free/occupied follow the clamped
log-odds, so voxels occupied by a moving obstacle are erased again after a few
contradicting observations.
"""

from __future__ import annotations

from enum import IntEnum
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import Box, Pose, segments_intersect_aabbs
from .traversal import visit_all
from .world import Scan

HIT_LOGODDS = 0.85
MISS_LOGODDS = -0.4
LOGODDS_MIN = -2.0
LOGODDS_MAX = 3.5
OCCUPIED_THRESHOLD = 0.0

_SURFACE_EPS = 1e-6  # meters; nudges hit points across the surface they lie on


class VoxelState(IntEnum):
    UNKNOWN = 0
    FREE = 1
    OCCUPIED = 2


class UnknownClass(IntEnum):
    NORMAL = 0
    FRONTIER = 1
    SURFACE = 2


class OccupancyMap:
    def __init__(self, origin, resolution: float, dims):
        self.origin = np.asarray(origin, dtype=float).reshape(3)
        self.resolution = float(resolution)
        self.dims = np.asarray(dims, dtype=np.int64).reshape(3)
        if np.any(self.dims < 1):
            raise ValueError(f"bad grid dims {dims}")
        shape = tuple(int(d) for d in self.dims)
        self.log_odds = np.zeros(shape, dtype=np.float64)
        self.states = np.full(shape, VoxelState.UNKNOWN, dtype=np.uint8)

    @classmethod
    def for_bounds(cls, bounds: Box, resolution: float) -> "OccupancyMap":
        dims = np.ceil(bounds.extents / resolution - 1e-9).astype(np.int64)
        return cls(bounds.lo, resolution, dims)

    # -- geometry helpers --------------------------------------------------

    @property
    def bounds(self) -> Box:
        return Box(self.origin.copy(), self.origin + self.dims * self.resolution)

    def world_to_index(self, points: np.ndarray) -> np.ndarray:
        return np.floor((np.atleast_2d(points) - self.origin) / self.resolution).astype(np.int64)

    def index_to_center(self, idx: np.ndarray) -> np.ndarray:
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def contains(self, point: np.ndarray) -> bool:
        return self.bounds.contains(point)

    def flat_states(self) -> np.ndarray:
        return self.states.reshape(-1)

    def state_at(self, point: np.ndarray) -> VoxelState:
        idx = self.world_to_index(point)[0]
        if np.any(idx < 0) or np.any(idx >= self.dims):
            raise ValueError(f"point {point} outside map")
        return VoxelState(self.states[tuple(idx)])

    def counts(self) -> tuple[int, int, int]:
        flat = self.states.reshape(-1)
        occ = int(np.count_nonzero(flat == VoxelState.OCCUPIED))
        free = int(np.count_nonzero(flat == VoxelState.FREE))
        return flat.size - occ - free, free, occ

    # -- scan integration ---------------------------------------------------

    def integrate_scan(self, pose: Pose, scan: Scan) -> np.ndarray:
        """Carve one depth scan into the grid; returns changed flat voxel ids.

        Each voxel receives at most one update per scan: a hit update if any
        ray ends in it, otherwise a miss update if any ray passes through it.
        """
        origin_pos = pose.position
        dirs = scan.directions
        ranges = scan.ranges
        hits = np.isfinite(ranges)

        carve_len = np.where(hits, np.maximum(ranges - _SURFACE_EPS, 0.0), scan.max_range)
        carve_ends = origin_pos + dirs * carve_len[:, None]
        upper = self.origin + self.dims * self.resolution - 1e-9
        np.clip(carve_ends, self.origin + 1e-9, upper, out=carve_ends)

        starts = np.broadcast_to(origin_pos, carve_ends.shape)
        _, visited = visit_all(starts, carve_ends, self.origin, self.resolution, self.dims)
        miss_ids = np.unique(visited)

        hit_ids = np.empty(0, dtype=np.int64)
        if np.any(hits):
            hit_pts = origin_pos + dirs[hits] * (ranges[hits] + _SURFACE_EPS)[:, None]
            idx = self.world_to_index(hit_pts)
            np.clip(idx, 0, self.dims - 1, out=idx)
            hit_ids = np.unique((idx[:, 0] * self.dims[1] + idx[:, 1]) * self.dims[2] + idx[:, 2])
            miss_ids = np.setdiff1d(miss_ids, hit_ids, assume_unique=True)

        lo = self.log_odds.reshape(-1)
        st = self.states.reshape(-1)
        updated = np.concatenate([miss_ids, hit_ids])
        before = st[updated].copy()
        lo[miss_ids] = np.maximum(lo[miss_ids] + MISS_LOGODDS, LOGODDS_MIN)
        lo[hit_ids] = np.minimum(lo[hit_ids] + HIT_LOGODDS, LOGODDS_MAX)
        st[updated] = np.where(lo[updated] > OCCUPIED_THRESHOLD, VoxelState.OCCUPIED, VoxelState.FREE)
        return updated[st[updated] != before]

    # -- unknown classification ----------------------------------------------

    def classify_unknown(self, index) -> UnknownClass:
        idx = np.asarray(index, dtype=np.int64).reshape(3)
        if np.any(idx < 0) or np.any(idx >= self.dims):
            raise ValueError(f"index {index} outside grid")
        if self.states[tuple(idx)] != VoxelState.UNKNOWN:
            raise ValueError(f"voxel {index} is not unknown")
        has_free = False
        has_occ = False
        for axis in range(3):
            for d in (-1, 1):
                nb = idx.copy()
                nb[axis] += d
                if nb[axis] < 0 or nb[axis] >= self.dims[axis]:
                    continue
                s = self.states[tuple(nb)]
                has_free |= s == VoxelState.FREE
                has_occ |= s == VoxelState.OCCUPIED
        if has_free and has_occ:
            return UnknownClass.SURFACE
        if has_free:
            return UnknownClass.FRONTIER
        return UnknownClass.NORMAL

    def unknown_class_grid(self) -> np.ndarray:
        """Class codes for every unknown voxel (other voxels get 255)."""
        free = self.states == VoxelState.FREE
        occ = self.states == VoxelState.OCCUPIED
        free_nb = _any_face_neighbor(free)
        occ_nb = _any_face_neighbor(occ)
        unknown = self.states == VoxelState.UNKNOWN
        out = np.full(self.states.shape, 255, dtype=np.uint8)
        out[unknown] = UnknownClass.NORMAL
        out[unknown & free_nb] = UnknownClass.FRONTIER
        out[unknown & free_nb & occ_nb] = UnknownClass.SURFACE
        return out

    # -- traversability -------------------------------------------------------

    def is_segment_traversable(self, a: np.ndarray, b: np.ndarray, collision_box) -> bool:
        """True iff the robot box swept from a to b only overlaps FREE voxels."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        half = 0.5 * np.asarray(collision_box, dtype=float)
        if not (self.contains(a) and self.contains(b)):
            return False
        sweep_lo = np.minimum(a, b) - half
        sweep_hi = np.maximum(a, b) + half
        upper = self.origin + self.dims * self.resolution
        if np.any(sweep_lo < self.origin - 1e-9) or np.any(sweep_hi > upper + 1e-9):
            return False

        i0 = np.floor((sweep_lo - self.origin) / self.resolution + 1e-9).astype(np.int64)
        i1 = np.floor((sweep_hi - self.origin) / self.resolution - 1e-9).astype(np.int64)
        np.clip(i0, 0, self.dims - 1, out=i0)
        np.clip(i1, 0, self.dims - 1, out=i1)
        sub = self.states[i0[0]:i1[0] + 1, i0[1]:i1[1] + 1, i0[2]:i1[2] + 1]
        bad = np.argwhere(sub != VoxelState.FREE)
        if bad.size == 0:
            return True
        idx = bad + i0
        # A voxel is overlapped by the swept box iff the segment hits the voxel
        # inflated by the robot half-extents (Minkowski sum).
        lo_v = self.origin + idx * self.resolution - half
        hi_v = self.origin + (idx + 1) * self.resolution + half
        return not bool(np.any(segments_intersect_aabbs(a, b, lo_v, hi_v)))

    def clear_free_mask(self, collision_box) -> np.ndarray:
        """Voxels where the robot box fits in FREE space at any in-voxel position.

        Conservative: requires the full neighborhood the jittered box could
        touch to be free, which also rules out placements poking past the map
        boundary.
        """
        half = 0.5 * np.asarray(collision_box, dtype=float)
        reach = np.ceil(half / self.resolution - 1e-9).astype(int)
        size = tuple(int(2 * k + 1) for k in reach)
        free = (self.states == VoxelState.FREE).astype(np.uint8)
        return ndimage.minimum_filter(free, size=size, mode="constant", cval=0).astype(bool)

    # -- snapshots -------------------------------------------------------------

    def write_snapshot(self, path) -> None:
        chars = np.array(["U", "F", "O"])
        path = Path(path)
        with path.open("w", encoding="utf-8") as f:
            f.write("occupancy-grid v1\n")
            f.write(f"origin {self.origin[0]} {self.origin[1]} {self.origin[2]}\n")
            f.write(f"resolution {self.resolution}\n")
            f.write(f"dims {self.dims[0]} {self.dims[1]} {self.dims[2]}\n")
            for z in range(int(self.dims[2])):
                for y in range(int(self.dims[1])):
                    f.write("".join(chars[self.states[:, y, z]]) + "\n")

    @classmethod
    def read_snapshot(cls, path) -> "OccupancyMap":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != "occupancy-grid v1":
            raise ValueError("not an occupancy snapshot")
        origin = np.array([float(v) for v in lines[1].split()[1:]])
        resolution = float(lines[2].split()[1])
        dims = [int(v) for v in lines[3].split()[1:]]
        grid = cls(origin, resolution, dims)
        lookup = {"U": VoxelState.UNKNOWN, "F": VoxelState.FREE, "O": VoxelState.OCCUPIED}
        row = 4
        for z in range(dims[2]):
            for y in range(dims[1]):
                vals = [lookup[c] for c in lines[row]]
                grid.states[:, y, z] = vals
                row += 1
        grid.log_odds[grid.states == VoxelState.OCCUPIED] = HIT_LOGODDS
        grid.log_odds[grid.states == VoxelState.FREE] = MISS_LOGODDS
        return grid


def _any_face_neighbor(mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mask)
    out[1:, :, :] |= mask[:-1, :, :]
    out[:-1, :, :] |= mask[1:, :, :]
    out[:, 1:, :] |= mask[:, :-1, :]
    out[:, :-1, :] |= mask[:, 1:, :]
    out[:, :, 1:] |= mask[:, :, :-1]
    out[:, :, :-1] |= mask[:, :, 1:]
    return out
