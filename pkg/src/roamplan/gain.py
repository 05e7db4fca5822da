"""Viewpoint utility: weighted counts of visible unknown voxels per yaw sector.

A voxel counts when its center is within planner range, inside the vertical
field-of-view band, and the straight line to it crosses no occupied voxel
(unknown voxels do not block, they are expected visible). Each counted voxel
lands in exactly one azimuth sector, so sector sums are yaw-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import GainConfig, UpdateRuleConfig
from .geometry import polyline_point_distances, wrap_angle
from .mapping import OccupancyMap, UnknownClass, VoxelState
from .roadmap import Roadmap, RoadmapNode
from .traversal import segments_blocked

TWO_PI = 2.0 * math.pi


@dataclass
class GainResult:
    sector_gains: np.ndarray
    total_gain: float
    class_counts: tuple[int, int, int]  # normal, frontier, surface


@dataclass
class UpdateStats:
    zeroed: int
    reevaluated: int
    considered: int


class _GainContext:
    """Per-map precomputation shared across a batch of node evaluations."""

    def __init__(self, occ_map: OccupancyMap):
        self.occ_map = occ_map
        self.unknown_idx = np.argwhere(occ_map.states == VoxelState.UNKNOWN)
        self.centers = occ_map.index_to_center(self.unknown_idx)
        class_grid = occ_map.unknown_class_grid()
        self.classes = class_grid[tuple(self.unknown_idx.T)] if self.unknown_idx.size else np.empty(0, np.uint8)
        self.occupied_flat = (occ_map.states == VoxelState.OCCUPIED).reshape(-1)


def evaluate_node(occ_map: OccupancyMap, position: np.ndarray, cfg: GainConfig,
                  _ctx: _GainContext | None = None) -> GainResult:
    """Sector gains and their total for a viewpoint in free space."""
    position = np.asarray(position, dtype=float).reshape(3)
    if occ_map.state_at(position) != VoxelState.FREE:
        raise ValueError("gain evaluation requires a free-space position")
    ctx = _ctx if _ctx is not None else _GainContext(occ_map)

    empty = GainResult(np.zeros(cfg.n_sectors), 0.0, (0, 0, 0))
    if ctx.centers.shape[0] == 0:
        return empty
    delta = ctx.centers - position
    dist = np.linalg.norm(delta, axis=1)
    keep = dist <= cfg.planner_range
    if not keep.any():
        return empty
    delta = delta[keep]
    horiz = np.hypot(delta[:, 0], delta[:, 1])
    elev = np.arctan2(delta[:, 2], horiz)
    band = np.abs(elev) <= 0.5 * math.radians(cfg.fov_deg[1])
    if not band.any():
        return empty
    delta = delta[band]
    targets = ctx.centers[keep][band]
    classes = ctx.classes[keep][band]

    blocked = segments_blocked(position, targets, ctx.occupied_flat,
                               occ_map.origin, occ_map.resolution, occ_map.dims)
    if blocked.all():
        return empty
    delta = delta[~blocked]
    classes = classes[~blocked]

    weights = np.choose(classes, [cfg.w_normal, cfg.w_frontier, cfg.w_surface])
    azimuth = np.arctan2(delta[:, 1], delta[:, 0]) % TWO_PI
    sector = np.minimum((azimuth / cfg.sector_width).astype(np.int64), cfg.n_sectors - 1)
    sector_gains = np.bincount(sector, weights=weights, minlength=cfg.n_sectors).astype(float)
    counts = (int(np.count_nonzero(classes == UnknownClass.NORMAL)),
              int(np.count_nonzero(classes == UnknownClass.FRONTIER)),
              int(np.count_nonzero(classes == UnknownClass.SURFACE)))
    return GainResult(sector_gains, float(sector_gains.sum()), counts)


def evaluate_nodes(occ_map: OccupancyMap, roadmap: Roadmap, node_ids, cfg: GainConfig) -> None:
    """Evaluate a batch of nodes in place, sharing the per-map precomputation."""
    ctx = _GainContext(occ_map)
    for nid in node_ids:
        node = roadmap.nodes[nid]
        _write_gain(node, occ_map, cfg, ctx)


def _write_gain(node: RoadmapNode, occ_map: OccupancyMap, cfg: GainConfig, ctx: _GainContext) -> None:
    try:
        result = evaluate_node(occ_map, node.position, cfg, _ctx=ctx)
    except ValueError:
        # The node's voxel is no longer free (e.g. a walker parked there); it
        # has no viewpoint value until the map clears again.
        result = GainResult(np.zeros(cfg.n_sectors), 0.0, (0, 0, 0))
    node.sector_gains = result.sector_gains
    node.total_gain = result.total_gain
    node.needs_update = False


def sector_centers(cfg: GainConfig) -> np.ndarray:
    """Azimuths of sector midpoints, wrapped to [-pi, pi)."""
    return wrap_angle((np.arange(cfg.n_sectors) + 0.5) * cfg.sector_width)


def gain_at_yaw(node: RoadmapNode, yaw: float, cfg: GainConfig) -> float:
    """Gain visible inside the horizontal FoV centered at yaw.

    Sectors are weighted by their fractional angular overlap with the FoV
    window, which is the linear interpolation of the stored sector gains.
    """
    if node.needs_update:
        raise ValueError(f"node {node.id} has stale gains")
    half_fov = 0.5 * math.radians(cfg.fov_deg[0])
    width = cfg.sector_width
    offsets = np.abs(wrap_angle(sector_centers(cfg) - yaw))
    overlap = np.clip(half_fov + 0.5 * width - offsets, 0.0, width)
    return float(np.sum(node.sector_gains * (overlap / width)))


def best_yaw(node: RoadmapNode, cfg: GainConfig) -> tuple[float, float]:
    """Sector-center yaw maximizing the windowed gain (ties pick the first)."""
    centers = sector_centers(cfg)
    gains = np.array([gain_at_yaw(node, y, cfg) for y in centers])
    i = int(np.argmax(gains))
    return float(centers[i]), float(gains[i])


def update_after_execution(roadmap: Roadmap, occ_map: OccupancyMap, executed_positions,
                           cfg: GainConfig, update_cfg: UpdateRuleConfig,
                           exclude_ids=()) -> UpdateStats:
    """Selective refresh of nodes near the trajectory the robot just flew.

    Nodes in that set with near-zero prior gain or sitting almost on the
    trajectory are zeroed without any raycasting; the rest are re-evaluated.
    Nodes outside the set keep their stored gains.
    """
    executed = np.atleast_2d(np.asarray(executed_positions, dtype=float))
    if executed.shape[0] == 0:
        raise ValueError("empty executed trajectory")
    if len(roadmap) == 0:
        return UpdateStats(0, 0, 0)
    exclude = set(exclude_ids)
    dist = polyline_point_distances(roadmap.positions, executed)
    ids = [nid for nid in range(len(roadmap)) if nid not in exclude
           and dist[nid] <= update_cfg.trajectory_radius]
    zero_ids = [nid for nid in ids
                if roadmap.nodes[nid].total_gain < update_cfg.zero_gain_threshold
                or dist[nid] < update_cfg.zero_distance_threshold]
    reeval_ids = [nid for nid in ids if nid not in set(zero_ids)]
    for nid in zero_ids:
        node = roadmap.nodes[nid]
        node.sector_gains = np.zeros(roadmap.n_sectors)
        node.total_gain = 0.0
        node.needs_update = False
    if reeval_ids:
        evaluate_nodes(occ_map, roadmap, reeval_ids, cfg)
    return UpdateStats(len(zero_ids), len(reeval_ids), len(ids))
