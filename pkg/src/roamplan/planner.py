"""Trajectory generation: goal candidates, gain-rate scoring, dynamic replanning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GainConfig, PlannerConfig
from .gain import best_yaw, gain_at_yaw
from .geometry import azimuth_of, angle_difference, polyline_length
from .mapping import OccupancyMap
from .roadmap import Roadmap, dijkstra


@dataclass
class Waypoint:
    node_id: int | None
    position: np.ndarray
    yaw: float


@dataclass
class Trajectory:
    waypoints: list[Waypoint]
    exec_time: float
    score: float
    total_gain: float
    goal_id: int | None = None
    warning: str | None = None

    @property
    def positions(self) -> np.ndarray:
        return np.array([w.position for w in self.waypoints])

    @property
    def yaws(self) -> np.ndarray:
        return np.array([w.yaw for w in self.waypoints])

    @property
    def length(self) -> float:
        return polyline_length(self.positions)

    def follower_waypoints(self) -> list[tuple[np.ndarray, float]]:
        return [(w.position, w.yaw) for w in self.waypoints]


@dataclass
class Conflict:
    """A predicted meeting between the robot and a tracked obstacle."""

    position: np.ndarray
    time: float
    obstacle_index: int
    radius: float


def goal_candidates(roadmap: Roadmap, cutoff: float) -> list[int]:
    """Node ids whose gain reaches cutoff * max gain, best first (ties by id).

    An all-zero roadmap yields no candidates, which is the caller's signal to
    check for exploration completion.
    """
    if len(roadmap) == 0:
        raise ValueError("empty roadmap")
    gains = np.array([roadmap.nodes[i].total_gain for i in range(len(roadmap))])
    top = float(gains.max())
    if top <= 0.0:
        return []
    ids = np.nonzero(gains >= cutoff * top)[0]
    order = np.lexsort((ids, -gains[ids]))
    return [int(i) for i in ids[order]]


def execution_time(positions: np.ndarray, yaws, v_max: float, omega_max: float) -> float:
    """Rotate-then-translate time: segment lengths at v_max plus yaw changes at omega_max."""
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    yaws = np.asarray(yaws, dtype=float)
    t = 0.0
    if pts.shape[0] >= 2:
        t += float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()) / v_max
    if yaws.size >= 2:
        t += float(np.abs(angle_difference(yaws[1:], yaws[:-1])).sum()) / omega_max
    return t


def motion_yaws(positions: np.ndarray, final_yaw: float | None = None) -> np.ndarray:
    """Waypoint yaws aligned with the motion direction; final yaw optionally pinned."""
    pts = np.atleast_2d(positions)
    n = pts.shape[0]
    yaws = np.zeros(n)
    for i in range(n - 1):
        delta = pts[i + 1] - pts[i]
        yaws[i] = azimuth_of(delta) if np.linalg.norm(delta[:2]) > 1e-12 else (yaws[i - 1] if i else 0.0)
    if n >= 2:
        yaws[-1] = yaws[-2] if final_yaw is None else final_yaw
    elif final_yaw is not None:
        yaws[0] = final_yaw
    return yaws


def plan(roadmap: Roadmap, occ_map: OccupancyMap, robot_node: int, cutoff: float,
         cfg: PlannerConfig, gain_cfg: GainConfig, collision_box,
         blocked_edges: set[frozenset] | None = None,
         start_links: list[tuple[int, float]] | None = None,
         start_position: np.ndarray | None = None) -> Trajectory | None:
    """Best gain-per-second trajectory from the robot's attachment to a goal candidate.

    Paths are re-validated edge by edge against the current map and dropped if
    any edge fails. Interior yaws follow the motion direction; the goal yaw is
    the sector-center argmax of its stored gains. When `start_links` is given,
    the search starts from a virtual node at `start_position` connected through
    those (node id, cost) links instead of from `robot_node`.
    """
    if start_links is None and robot_node not in roadmap.nodes:
        raise ValueError(f"unknown robot node {robot_node}")
    candidates = goal_candidates(roadmap, cutoff)
    if cfg.candidate_cap is not None:
        candidates = candidates[:cfg.candidate_cap]

    best: Trajectory | None = None
    best_key: tuple[float, float, int] | None = None
    for goal in candidates:
        if start_links is not None:
            sources = [(cost, (nid,)) for nid, cost in start_links]
            path = dijkstra(roadmap, sources, goal, blocked_edges)
        else:
            path = dijkstra(roadmap, [(0.0, (robot_node,))], goal, blocked_edges)
        if path is None:
            continue
        positions = [roadmap.nodes[n].position for n in path]
        node_ids: list[int | None] = list(path)
        if start_links is not None and start_position is not None:
            positions = [np.asarray(start_position, dtype=float)] + positions
            node_ids = [None] + node_ids
        pts = np.array(positions)
        if not _edges_traversable(occ_map, pts, collision_box):
            continue
        goal_yaw, _ = best_yaw(roadmap.nodes[goal], gain_cfg)
        yaws = motion_yaws(pts, final_yaw=goal_yaw)
        t = execution_time(pts, yaws, cfg.v_max, cfg.omega_max)
        total = 0.0
        for nid, yaw in zip(node_ids, yaws):
            if nid is not None:
                total += gain_at_yaw(roadmap.nodes[nid], yaw, gain_cfg)
        score = total / max(t, cfg.score_time_floor)
        key = (-score, t, goal)
        if best_key is None or key < best_key:
            best_key = key
            best = Trajectory(
                waypoints=[Waypoint(n, p.copy(), float(y)) for n, p, y in zip(node_ids, pts, yaws)],
                exec_time=t, score=score, total_gain=total, goal_id=goal)
    return best


def _edges_traversable(occ_map: OccupancyMap, pts: np.ndarray, collision_box) -> bool:
    for i in range(pts.shape[0] - 1):
        if not occ_map.is_segment_traversable(pts[i], pts[i + 1], collision_box):
            return False
    return True


def replan(roadmap: Roadmap, occ_map: OccupancyMap, robot_node: int,
           blocked_edges: set[frozenset], cfg: PlannerConfig, gain_cfg: GainConfig,
           collision_box, start_links=None, start_position=None) -> Trajectory | None:
    """Fast alternative trajectory on the existing roadmap.

    Identical to plan() with the raised cutoff and the conflicting edges
    excluded; no sampling and no gain re-evaluation happen here, which is what
    makes replanning cheap.
    """
    return plan(roadmap, occ_map, robot_node, cfg.cutoff_replan, cfg, gain_cfg,
                collision_box, blocked_edges=blocked_edges,
                start_links=start_links, start_position=start_position)


def predict_collision(robot_positions: np.ndarray, obstacles, horizon: float, dt: float,
                      robot_half_extents, margin: float = 0.0) -> Conflict | None:
    """Constant-velocity extrapolation of tracked obstacles against the robot's
    own predicted positions; the first overlapping sample wins.

    `robot_positions` holds samples at t = 0, dt, ..., horizon (the robot holds
    its last pose beyond trajectory end). The robot box is inflated by each
    obstacle's radius plus an optional safety margin.
    """
    if not obstacles:
        return None
    robot = np.atleast_2d(robot_positions)
    steps = int(round(horizon / dt))
    half = np.asarray(robot_half_extents, dtype=float)
    for k in range(min(steps + 1, robot.shape[0])):
        t = k * dt
        rp = robot[k]
        for obs in obstacles:
            center = obs.position + obs.velocity * t
            dx = abs(center[0] - rp[0])
            dy = abs(center[1] - rp[1])
            dz = abs(center[2] - rp[2])
            if (dx <= half[0] + obs.radius + margin and dy <= half[1] + obs.radius + margin
                    and dz <= half[2] + 0.5 * obs.height + margin):
                return Conflict(center.copy(), t, obs.index, obs.radius)
    return None


def check_termination(new_node_history, termination_steps: int) -> bool:
    """True once the last `termination_steps` iterations each added zero nodes."""
    history = list(new_node_history)
    if len(history) < termination_steps:
        return False
    return all(count == 0 for count in history[-termination_steps:])
