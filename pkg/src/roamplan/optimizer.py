"""Local trajectory refinement against the distance field.

Seeded random-sampling coordinate descent: each waypoint (the first stays
fixed) may move inside a small box anchored at its pre-optimization position.
The objective trades normalized execution time against normalized inverse
obstacle distance; feasibility (traversability, sensor range, minimum spacing)
is enforced by rejection, and the incumbent position is always a candidate so
the result is never worse than the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import OptimizerConfig, SensorModel
from .esdf import EsdfGrid, average_trajectory_distance
from .mapping import OccupancyMap, VoxelState
from .planner import Trajectory, Waypoint, execution_time, motion_yaws
from .geometry import polyline_length

_REL_IMPROVEMENT_STOP = 1e-4


@dataclass
class OptimizationRecord:
    time_before: float
    time_after: float
    dist_before: float
    dist_after: float
    length_before: float
    length_after: float
    passes: int
    input_feasible: bool


def objective(positions: np.ndarray, t0: float, d0: float, esdf: EsdfGrid,
              cfg: OptimizerConfig) -> float:
    """w_t * t/t0 + w_d * d0/d with motion-direction yaws; +inf on an obstacle."""
    if t0 <= 0 or d0 <= 0:
        raise ValueError("normalizers must be positive")
    pts = np.atleast_2d(positions)
    t = execution_time(pts, motion_yaws(pts), cfg.v_max, cfg.omega_max)
    d = average_trajectory_distance(esdf, pts)
    if d <= 0.0:
        return float("inf")
    return cfg.time_weight * t / t0 + cfg.distance_weight * d0 / d


def feasible(positions: np.ndarray, occ_map: OccupancyMap, sensor: SensorModel,
             cfg: OptimizerConfig) -> bool:
    """All consecutive pairs traversable, within sensor range, and not too close."""
    pts = np.atleast_2d(positions)
    if pts.shape[0] < 2:
        raise ValueError("feasibility needs at least two waypoints")
    for i in range(pts.shape[0] - 1):
        if not _pair_feasible(pts[i], pts[i + 1], occ_map, sensor, cfg):
            return False
    return True


def _pair_feasible(a, b, occ_map, sensor, cfg) -> bool:
    length = float(np.linalg.norm(b - a))
    if length > sensor.planner_range or length < cfg.min_node_distance:
        return False
    return occ_map.is_segment_traversable(a, b, cfg.collision_box)


def optimize(traj: Trajectory, occ_map: OccupancyMap, esdf: EsdfGrid, sensor: SensorModel,
             cfg: OptimizerConfig, rng: np.random.Generator) -> tuple[Trajectory, OptimizationRecord]:
    """Refine a feasible trajectory; the first waypoint (robot attachment) is pinned.

    Infeasible inputs are returned unchanged with a warning flag. Candidate
    boxes are centered on the original waypoints, so the output stays inside
    the local region of the input regardless of how many passes run.
    """
    positions = traj.positions.copy()
    n = positions.shape[0]
    t0 = execution_time(positions, motion_yaws(positions), cfg.v_max, cfg.omega_max)
    d0 = average_trajectory_distance(esdf, positions)
    len0 = polyline_length(positions)
    if n < 2:
        record = OptimizationRecord(t0, t0, d0, d0, len0, len0, 0, True)
        return traj, record
    if d0 <= 0.0 or not feasible(positions, occ_map, sensor, cfg):
        record = OptimizationRecord(t0, t0, d0, d0, len0, len0, 0, False)
        out = Trajectory(traj.waypoints, traj.exec_time, traj.score, traj.total_gain,
                         goal_id=traj.goal_id, warning="input trajectory infeasible")
        return out, record

    orig = positions.copy()
    half_box = 0.5 * np.asarray(cfg.local_box, dtype=float)
    upper = occ_map.origin + occ_map.dims * occ_map.resolution
    current_obj = cfg.time_weight + cfg.distance_weight  # both ratios are 1 at the input
    passes = 0
    for _ in range(cfg.max_passes):
        passes += 1
        for i in range(1, n):
            cands = orig[i] + rng.uniform(-1.0, 1.0, (cfg.samples_per_node, 3)) * half_box
            inside = np.all((cands > occ_map.origin) & (cands < upper), axis=1)
            cands = cands[inside]
            if cands.shape[0]:
                idx = occ_map.world_to_index(cands)
                free = occ_map.states[idx[:, 0], idx[:, 1], idx[:, 2]] == VoxelState.FREE
                cands = cands[free]
            options = [positions[i].copy()] + [c for c in cands]
            scored = []
            for j, cand in enumerate(options):
                positions[i] = cand
                scored.append((objective(positions, t0, d0, esdf, cfg), j))
            scored.sort()
            accepted = None
            for obj_val, j in scored:
                if not np.isfinite(obj_val):
                    break
                positions[i] = options[j]
                ok = _pair_feasible(positions[i - 1], positions[i], occ_map, sensor, cfg)
                if ok and i + 1 < n:
                    ok = _pair_feasible(positions[i], positions[i + 1], occ_map, sensor, cfg)
                if ok:
                    accepted = j
                    break
            positions[i] = options[accepted if accepted is not None else 0]
        new_obj = objective(positions, t0, d0, esdf, cfg)
        if current_obj - new_obj < _REL_IMPROVEMENT_STOP * max(current_obj, 1e-12):
            current_obj = min(current_obj, new_obj)
            break
        current_obj = new_obj

    final_yaw = traj.waypoints[-1].yaw
    yaws = motion_yaws(positions, final_yaw=final_yaw)
    exec_time = execution_time(positions, yaws, cfg.v_max, cfg.omega_max)
    t_after = execution_time(positions, motion_yaws(positions), cfg.v_max, cfg.omega_max)
    d_after = average_trajectory_distance(esdf, positions)
    waypoints = [Waypoint(w.node_id, p.copy(), float(y))
                 for w, p, y in zip(traj.waypoints, positions, yaws)]
    score = traj.total_gain / exec_time if exec_time > 0 else traj.score
    out = Trajectory(waypoints, exec_time, score, traj.total_gain, goal_id=traj.goal_id)
    record = OptimizationRecord(t0, t_after, d0, d_after, len0, polyline_length(positions),
                                passes, True)
    return out, record
