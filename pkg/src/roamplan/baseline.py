"""Greedy frontier-seeking baseline: fly to the nearest cluster of free voxels
that border unknown space, repeat until none remain. Grid search runs over
free voxels eroded by the robot box, so the baseline only ever occupies free
space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import azimuth_of
from .mapping import OccupancyMap, VoxelState, _any_face_neighbor

_STRUCT26 = np.ones((3, 3, 3), dtype=bool)


@dataclass
class FrontierTarget:
    waypoints: list[np.ndarray]
    centroid: np.ndarray
    final_yaw: float


def frontier_observation_mask(occ_map: OccupancyMap) -> np.ndarray:
    """Free voxels with at least one unknown face neighbor."""
    unknown_nb = _any_face_neighbor(occ_map.states == VoxelState.UNKNOWN)
    return (occ_map.states == VoxelState.FREE) & unknown_nb


def plan_frontier_target(occ_map: OccupancyMap, robot_position: np.ndarray,
                         collision_box, min_cluster_size: int = 3) -> FrontierTarget | None:
    """Path to the nearest reachable frontier cluster, None when exploration is done."""
    boundary = frontier_observation_mask(occ_map)
    labels, n_clusters = ndimage.label(boundary, structure=_STRUCT26)
    if n_clusters == 0:
        return None
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=range(1, n_clusters + 1))
    keep = [i + 1 for i, s in enumerate(sizes) if s >= min_cluster_size]
    if not keep:
        return None

    passable = occ_map.clear_free_mask(collision_box)
    start = occ_map.world_to_index(robot_position)[0]
    if not passable[tuple(start)]:
        # Robot sits closer to geometry than the conservative erosion allows;
        # admit its own voxel so the search can leave it.
        passable = passable.copy()
        passable[tuple(start)] = True
    dist = _bfs_distances(passable, tuple(start))

    centroids = ndimage.center_of_mass(boundary, labels, index=keep)
    robot_idx = (np.asarray(robot_position) - occ_map.origin) / occ_map.resolution - 0.5
    order = np.argsort([float(np.linalg.norm(np.asarray(c) - robot_idx)) for c in centroids])

    for rank in order:
        label = keep[rank]
        cluster = labels == label
        # Goal cells: passable voxels within two steps of the cluster.
        near = ndimage.binary_dilation(cluster, structure=_STRUCT26, iterations=2)
        goal_mask = near & passable & np.isfinite(dist)
        if not goal_mask.any():
            continue
        goals = np.argwhere(goal_mask)
        best = goals[np.argmin(dist[tuple(goals.T)])]
        path_idx = _backtrack(dist, tuple(best), tuple(start))
        waypoints = [occ_map.index_to_center(i) for i in _decimate(path_idx)]
        centroid = occ_map.index_to_center(np.asarray(centroids[rank]))
        look = centroid - waypoints[-1]
        final_yaw = azimuth_of(look) if np.linalg.norm(look[:2]) > 1e-9 else 0.0
        return FrontierTarget(waypoints, centroid, final_yaw)
    return None


def _bfs_distances(passable: np.ndarray, start: tuple) -> np.ndarray:
    """26-connected wavefront distances from the start voxel (inf = unreachable)."""
    dist = np.full(passable.shape, np.inf)
    if not passable[start]:
        return dist
    frontier = np.zeros_like(passable)
    frontier[start] = True
    visited = frontier.copy()
    dist[start] = 0.0
    step = 0
    while frontier.any():
        step += 1
        grown = ndimage.binary_dilation(frontier, structure=_STRUCT26) & passable & ~visited
        if not grown.any():
            break
        dist[grown] = step
        visited |= grown
        frontier = grown
    return dist


_NEIGHBOR_OFFSETS = [np.array(o) for o in np.ndindex(3, 3, 3) if tuple(o) != (1, 1, 1)]
_NEIGHBOR_OFFSETS = [o - 1 for o in _NEIGHBOR_OFFSETS]


def _backtrack(dist: np.ndarray, goal: tuple, start: tuple) -> list[np.ndarray]:
    path = [np.asarray(goal)]
    cur = np.asarray(goal)
    d = dist[goal]
    dims = np.asarray(dist.shape)
    while d > 0:
        for off in _NEIGHBOR_OFFSETS:
            nb = cur + off
            if np.any(nb < 0) or np.any(nb >= dims):
                continue
            if dist[tuple(nb)] == d - 1:
                cur = nb
                d -= 1
                path.append(cur)
                break
        else:
            raise RuntimeError("broken distance field during backtrack")
    path.reverse()
    return path


def _decimate(path_idx: list[np.ndarray]) -> list[np.ndarray]:
    """Drop interior voxels that continue in the same direction."""
    if len(path_idx) <= 2:
        return path_idx
    out = [path_idx[0]]
    for i in range(1, len(path_idx) - 1):
        d_prev = path_idx[i] - out[-1]
        d_next = path_idx[i + 1] - path_idx[i]
        n_prev = d_prev / max(np.linalg.norm(d_prev), 1e-9)
        n_next = d_next / max(np.linalg.norm(d_next), 1e-9)
        if not np.allclose(n_prev, n_next, atol=1e-9):
            out.append(path_idx[i])
    out.append(path_idx[-1])
    return out
