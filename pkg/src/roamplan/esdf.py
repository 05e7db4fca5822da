"""Distance-to-obstacle field derived from the occupancy belief.

Obstacles are OCCUPIED and UNKNOWN voxels plus everything outside the grid, so
optimization never pulls trajectories toward unobserved space or the walls.
Distances are exact center-to-center Euclidean values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .mapping import OccupancyMap, VoxelState


@dataclass
class EsdfGrid:
    origin: np.ndarray
    resolution: float
    dims: np.ndarray
    dist: np.ndarray

    def query_distance(self, points: np.ndarray) -> np.ndarray | float:
        """Trilinear interpolation over voxel centers; scalar in, scalar out."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        upper = self.origin + self.dims * self.resolution
        if np.any(pts < self.origin - 1e-9) or np.any(pts > upper + 1e-9):
            raise ValueError("query point outside grid bounds")
        g = (pts - self.origin) / self.resolution - 0.5
        g = np.clip(g, 0.0, self.dims - 1.0)
        i0 = np.minimum(np.floor(g).astype(np.int64), np.maximum(self.dims - 2, 0))
        f = g - i0
        d = self.dist
        x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
        x1 = np.minimum(x0 + 1, self.dims[0] - 1)
        y1 = np.minimum(y0 + 1, self.dims[1] - 1)
        z1 = np.minimum(z0 + 1, self.dims[2] - 1)
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
        c00 = d[x0, y0, z0] * (1 - fx) + d[x1, y0, z0] * fx
        c10 = d[x0, y1, z0] * (1 - fx) + d[x1, y1, z0] * fx
        c01 = d[x0, y0, z1] * (1 - fx) + d[x1, y0, z1] * fx
        c11 = d[x0, y1, z1] * (1 - fx) + d[x1, y1, z1] * fx
        c0 = c00 * (1 - fy) + c10 * fy
        c1 = c01 * (1 - fy) + c11 * fy
        vals = c0 * (1 - fz) + c1 * fz
        if np.asarray(points).ndim == 1:
            return float(vals[0])
        return vals


def rebuild(occ_map: OccupancyMap) -> EsdfGrid:
    """Exact Euclidean distance transform of the obstacle set.

    The grid is padded by one ring of obstacle so the boundary acts as an
    occupied surface; for any interior voxel the nearest out-of-grid obstacle
    center lies in that ring.
    """
    obstacle = occ_map.states != VoxelState.FREE
    padded = np.pad(obstacle, 1, constant_values=True)
    dist = ndimage.distance_transform_edt(~padded)
    core = dist[1:-1, 1:-1, 1:-1] * occ_map.resolution
    return EsdfGrid(occ_map.origin.copy(), occ_map.resolution, occ_map.dims.copy(), core)


def average_trajectory_distance(esdf: EsdfGrid, positions: np.ndarray) -> float:
    """Mean obstacle distance over the polyline sampled at grid resolution.

    Each segment is subdivided uniformly with spacing at most one resolution,
    endpoints included once, so the value is invariant under reversal.
    """
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("empty trajectory")
    if pts.shape[0] == 1:
        return float(esdf.query_distance(pts[0]))
    samples = [pts[0]]
    for i in range(pts.shape[0] - 1):
        a, b = pts[i], pts[i + 1]
        length = float(np.linalg.norm(b - a))
        n = max(int(np.ceil(length / esdf.resolution - 1e-9)), 1)
        ts = np.arange(1, n + 1) / n
        samples.append(a + ts[:, None] * (b - a))
    all_pts = np.vstack([np.atleast_2d(s) for s in samples])
    return float(np.mean(esdf.query_distance(all_pts)))
