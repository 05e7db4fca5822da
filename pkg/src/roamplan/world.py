"""Deterministic ground-truth world: static boxes, scripted walkers, depth scans.

The world boundary counts as an occupied surface for scans, so bounded rooms
need no explicit enclosing walls. Everything here is a pure function of its
inputs; the only state lives in TrajectoryFollower.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Config, SensorModel
from .geometry import (
    Box,
    Pose,
    angle_difference,
    azimuth_of,
    box_exit_distance,
    boxes_overlap,
    cylinder_box_overlap,
    first_hit_boxes,
    ray_cylinder_entry,
    wrap_angle,
)


@dataclass
class DynamicObstacle:
    """Vertical cylinder following a piecewise-linear waypoint script.

    `waypoints` entries are (center position, hold seconds). The script is
    independent of the robot and of the scenario seed.
    """

    radius: float
    height: float
    speed: float
    loop: bool
    waypoints: list[tuple[np.ndarray, float]]
    _legs: list[tuple[float, float, np.ndarray, np.ndarray]] = field(init=False, repr=False)
    period: float = field(init=False)

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("obstacle script needs at least one waypoint")
        self.waypoints = [(np.asarray(p, dtype=float).reshape(3), float(h)) for p, h in self.waypoints]
        if len(self.waypoints) > 1 and self.speed <= 0:
            raise ValueError("moving obstacle needs positive speed")
        legs: list[tuple[float, float, np.ndarray, np.ndarray]] = []
        t = 0.0
        pts = [p for p, _ in self.waypoints]
        holds = [h for _, h in self.waypoints]
        n = len(pts)
        hops = n - 1 + (1 if self.loop and n > 1 else 0)
        for i in range(n):
            if holds[i] > 0:
                legs.append((t, t + holds[i], pts[i], pts[i]))
                t += holds[i]
            if i < hops:
                a, b = pts[i], pts[(i + 1) % n]
                dur = float(np.linalg.norm(b - a)) / self.speed if self.speed > 0 else 0.0
                if dur > 0:
                    legs.append((t, t + dur, a, b))
                    t += dur
        self._legs = legs
        self.period = t

    def position_at(self, t: float) -> np.ndarray:
        if not self._legs:
            return self.waypoints[0][0].copy()
        if self.loop:
            t = t % self.period if self.period > 0 else 0.0
        else:
            t = min(max(t, 0.0), self.period)
        for t0, t1, a, b in self._legs:
            if t <= t1:
                if t1 <= t0:
                    return a.copy()
                frac = (t - t0) / (t1 - t0)
                return a + frac * (b - a)
        return self._legs[-1][3].copy()

    @property
    def half_height(self) -> float:
        return 0.5 * self.height


@dataclass
class Scenario:
    """Ground-truth world description plus the full parameter bundle."""

    name: str
    bounds: Box
    static_solids: list[Box]
    dynamic_obstacles: list[DynamicObstacle]
    robot_start: Pose
    seed: int
    config: Config

    def validate(self) -> None:
        half = self.config.robot.half_extents
        if not self.bounds.contains(self.robot_start.position, margin=float(half.max())):
            raise ValueError("robot start too close to or outside the bounds")
        for solid in self.static_solids:
            if boxes_overlap(self.robot_start.position - half, self.robot_start.position + half,
                             solid.lo, solid.hi):
                raise ValueError("robot start collides with a static solid")
        for obs in self.dynamic_obstacles:
            for p, _ in obs.waypoints:
                margin = np.array([obs.radius, obs.radius, obs.half_height])
                if np.any(p - margin < self.bounds.lo) or np.any(p + margin > self.bounds.hi):
                    raise ValueError(f"obstacle waypoint {p} leaves the bounds")

    def solid_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.static_solids:
            return np.empty((0, 3)), np.empty((0, 3))
        return (np.stack([s.lo for s in self.static_solids]),
                np.stack([s.hi for s in self.static_solids]))


@dataclass
class Scan:
    """One simulated depth image: unit ray directions plus hit ranges (inf = miss)."""

    directions: np.ndarray
    ranges: np.ndarray
    max_range: float

    @property
    def hit_mask(self) -> np.ndarray:
        return np.isfinite(self.ranges)


def frustum_directions(sensor: SensorModel, yaw: float) -> np.ndarray:
    """World-frame unit directions on the sensor's angular grid.

    Rays sit at the centers of a uniform (elevation-major, azimuth-minor)
    partition of the field of view.
    """
    fov_h, fov_v = sensor.fov_rad
    n_h, n_v = sensor.ray_grid
    az = yaw + (-0.5 * fov_h + (np.arange(n_h) + 0.5) * fov_h / n_h)
    el = -0.5 * fov_v + (np.arange(n_v) + 0.5) * fov_v / n_v
    az_g, el_g = np.meshgrid(az, el)  # rows: elevation, cols: azimuth
    cos_el = np.cos(el_g)
    dirs = np.stack([cos_el * np.cos(az_g), cos_el * np.sin(az_g), np.sin(el_g)], axis=-1)
    return dirs.reshape(-1, 3)


def simulate_scan(scenario: Scenario, pose: Pose, time: float) -> Scan:
    """First-intersection depth scan at `pose` with obstacles at scripted `time`."""
    if not scenario.bounds.contains(pose.position):
        raise ValueError(f"scan pose {pose.position} outside bounds")
    sensor = scenario.config.sensor
    dirs = frustum_directions(sensor, pose.yaw)
    lo, hi = scenario.solid_arrays()
    ranges = first_hit_boxes(pose.position, dirs, lo, hi)
    for obs in scenario.dynamic_obstacles:
        center = obs.position_at(time)
        ranges = np.minimum(ranges, ray_cylinder_entry(pose.position, dirs, center,
                                                       obs.radius, obs.half_height))
    ranges = np.minimum(ranges, box_exit_distance(pose.position, dirs,
                                                  scenario.bounds.lo, scenario.bounds.hi))
    ranges = np.where(ranges <= sensor.max_range, ranges, np.inf)
    return Scan(dirs, ranges, sensor.max_range)


def check_ground_truth_collision(scenario: Scenario, pose: Pose, time: float) -> bool:
    """Robot collision box vs solids, scripted obstacles, and the bounds."""
    half = scenario.config.robot.half_extents
    lo = pose.position - half
    hi = pose.position + half
    if np.any(lo < scenario.bounds.lo) or np.any(hi > scenario.bounds.hi):
        return True
    for solid in scenario.static_solids:
        if boxes_overlap(lo, hi, solid.lo, solid.hi):
            return True
    for obs in scenario.dynamic_obstacles:
        center = obs.position_at(time)
        if cylinder_box_overlap(center, obs.radius, obs.half_height, lo, hi):
            return True
    return False


@dataclass
class DetectedObstacle:
    """What the robot currently knows about one visible walker."""

    index: int
    position: np.ndarray
    radius: float
    height: float
    velocity: np.ndarray


def visible_dynamic_obstacles(scenario: Scenario, pose: Pose, time: float) -> list[DetectedObstacle]:
    """Obstacles with any part of their cylinder inside the frustum and a clear
    line of sight to it past the static geometry.

    Velocity estimates are the caller's job (finite differences over frames);
    entries here carry zero velocity.
    """
    sensor = scenario.config.sensor
    fov_h, fov_v = sensor.fov_rad
    lo, hi = scenario.solid_arrays()
    out = []
    for i, obs in enumerate(scenario.dynamic_obstacles):
        center = obs.position_at(time)
        dxy = center[:2] - pose.position[:2]
        dist_xy = float(np.hypot(dxy[0], dxy[1]))
        z_lo = center[2] - obs.half_height
        z_hi = center[2] + obs.half_height
        nearest = np.array([center[0], center[1],
                            min(max(pose.position[2], z_lo), z_hi)])
        dist = float(np.linalg.norm(nearest - pose.position))
        if dist - obs.radius > sensor.max_range:
            continue
        if dist_xy > obs.radius:
            az_slack = math.asin(min(obs.radius / dist_xy, 1.0))
            if abs(angle_difference(azimuth_of(dxy), pose.yaw)) > 0.5 * fov_h + az_slack:
                continue
        flat = max(dist_xy, 1e-9)
        elev_lo = math.atan2(z_lo - pose.position[2], flat)
        elev_hi = math.atan2(z_hi - pose.position[2], flat)
        if elev_lo > 0.5 * fov_v or elev_hi < -0.5 * fov_v:
            continue
        if lo.shape[0] and dist > 1e-9:
            ray = ((nearest - pose.position) / dist)[None, :]
            blockers = first_hit_boxes(pose.position, ray, lo, hi)
            if blockers[0] < dist - obs.radius:
                continue
        out.append(DetectedObstacle(i, center, obs.radius, obs.height, np.zeros(3)))
    return out


class TrajectoryFollower:
    """Rotate-then-translate execution of a waypoint polyline.

    At each waypoint the robot first turns in place to the waypoint's yaw, then
    translates along the next segment. Positions snap exactly onto waypoints so
    replays are bit-identical.
    """

    def __init__(self, waypoints: list[tuple[np.ndarray, float]], v_max: float,
                 omega_max: float, start_yaw: float | None = None):
        if not waypoints:
            raise ValueError("empty trajectory")
        self._pts = [np.asarray(p, dtype=float).reshape(3) for p, _ in waypoints]
        self._yaws = [float(wrap_angle(y)) for _, y in waypoints]
        self.v_max = float(v_max)
        self.omega_max = float(omega_max)
        self._idx = 0
        self._phase = "rotate"
        self._offset = 0.0
        self._pos = self._pts[0].copy()
        self._yaw = self._yaws[0] if start_yaw is None else float(wrap_angle(start_yaw))
        self._done = False
        self.distance_traveled = 0.0
        self._check_done()

    @classmethod
    def from_pose(cls, waypoints, v_max, omega_max, pose: Pose) -> "TrajectoryFollower":
        """Place a follower at an arbitrary pose already lying on the polyline."""
        f = cls(waypoints, v_max, omega_max, start_yaw=pose.yaw)
        pts = f._pts
        for i, p in enumerate(pts):
            if np.linalg.norm(pose.position - p) <= 1e-9:
                f._idx = i
                f._phase = "rotate"
                f._offset = 0.0
                f._pos = p.copy()
                f._done = False
                f._check_done()
                return f
        for i in range(len(pts) - 1):
            seg = pts[i + 1] - pts[i]
            length = float(np.linalg.norm(seg))
            if length <= 1e-12:
                continue
            proj = float((pose.position - pts[i]) @ seg) / length
            if -1e-9 <= proj <= length + 1e-9:
                closest = pts[i] + seg / length * proj
                if np.linalg.norm(pose.position - closest) <= 1e-9:
                    f._idx = i
                    f._phase = "translate"
                    f._offset = min(max(proj, 0.0), length)
                    f._pos = pose.position.copy()
                    f._done = False
                    return f
        raise ValueError("pose does not lie on the trajectory")

    @property
    def pose(self) -> Pose:
        return Pose(self._pos.copy(), self._yaw)

    @property
    def done(self) -> bool:
        return self._done

    def _check_done(self):
        if self._idx == len(self._pts) - 1 and self._phase == "rotate":
            if abs(angle_difference(self._yaws[-1], self._yaw)) <= 1e-12:
                self._yaw = self._yaws[-1]
                self._done = True

    def step(self, dt: float) -> Pose:
        budget = float(dt)
        while budget > 1e-12 and not self._done:
            if self._phase == "rotate":
                delta = float(angle_difference(self._yaws[self._idx], self._yaw))
                need = abs(delta) / self.omega_max if self.omega_max > 0 else 0.0
                if need <= budget:
                    self._yaw = self._yaws[self._idx]
                    budget -= need
                    if self._idx == len(self._pts) - 1:
                        self._done = True
                    else:
                        self._phase = "translate"
                        self._offset = 0.0
                else:
                    self._yaw = float(wrap_angle(self._yaw + math.copysign(self.omega_max * budget, delta)))
                    budget = 0.0
            else:
                seg = self._pts[self._idx + 1] - self._pts[self._idx]
                length = float(np.linalg.norm(seg))
                if length <= 1e-12:
                    self._pos = self._pts[self._idx + 1].copy()
                    self._idx += 1
                    self._phase = "rotate"
                    continue
                remain = length - self._offset
                advance = self.v_max * budget
                if advance >= remain - 1e-12:
                    self._pos = self._pts[self._idx + 1].copy()
                    self.distance_traveled += remain
                    budget -= remain / self.v_max if self.v_max > 0 else budget
                    self._idx += 1
                    self._phase = "rotate"
                else:
                    self._offset += advance
                    self.distance_traveled += advance
                    self._pos = self._pts[self._idx] + seg / length * self._offset
                    budget = 0.0
        return self.pose

    def clone(self) -> "TrajectoryFollower":
        f = TrajectoryFollower.__new__(TrajectoryFollower)
        f._pts = self._pts
        f._yaws = self._yaws
        f.v_max = self.v_max
        f.omega_max = self.omega_max
        f._idx = self._idx
        f._phase = self._phase
        f._offset = self._offset
        f._pos = self._pos.copy()
        f._yaw = self._yaw
        f._done = self._done
        f.distance_traveled = self.distance_traveled
        return f

    def future_positions(self, horizon: float, dt: float) -> np.ndarray:
        """Predicted positions at t = 0, dt, ..., horizon (holds at the end)."""
        clone = self.clone()
        steps = int(round(horizon / dt))
        out = np.empty((steps + 1, 3))
        out[0] = clone._pos
        for k in range(1, steps + 1):
            clone.step(dt)
            out[k] = clone._pos
        return out


def step_robot(pose: Pose, waypoints, dt: float, v_max: float, omega_max: float) -> Pose:
    """Advance a pose lying on a trajectory by one time step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    follower = TrajectoryFollower.from_pose(waypoints, v_max, omega_max, pose)
    return follower.step(dt)
