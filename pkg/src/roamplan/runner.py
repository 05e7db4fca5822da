"""End-to-end exploration runs, metrics, and suite aggregation.

One run drives the sense -> integrate -> sample -> evaluate -> plan -> optimize
-> execute loop with per-tick collision prediction and replanning, until the
no-new-nodes termination criterion fires, the baseline runs out of frontiers,
or the wall-clock budget expires.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import baseline as frontier_mod
from . import gain as gain_mod
from . import optimizer as opt_mod
from . import planner as planner_mod
from .esdf import rebuild
from .geometry import Pose, azimuth_of, segment_point_distances, wrap_angle
from .mapping import OccupancyMap, VoxelState
from .planner import Trajectory, Waypoint
from .roadmap import Roadmap, connect_new_nodes, sample_incremental, validate_invariants
from .roadmap import dijkstra as roadmap_dijkstra
from .world import (
    Scenario,
    TrajectoryFollower,
    check_ground_truth_collision,
    simulate_scan,
    visible_dynamic_obstacles,
)

PLANNER_KINDS = ("prm", "prm-noopt", "frontier")

_RATE_EVERY_TICKS = 10


@dataclass
class IterationRecord:
    index: int
    new_nodes: int
    edges_added: int
    candidates: int
    goal_id: int | None
    score: float
    t_sample: float
    t_gain: float
    t_search: float
    t_optimize: float

    @property
    def total_time(self) -> float:
        return self.t_sample + self.t_gain + self.t_search + self.t_optimize


@dataclass
class RunMetrics:
    scenario: str
    planner: str
    seed: int
    completed: bool = False
    termination: str = "budget"
    exploration_time: float = 0.0        # simulated seconds
    path_length: float = 0.0             # integral of per-tick displacement
    executed_length: float = 0.0         # arc length advanced along followers
    computational_time: float = 0.0      # wall s: sample+evaluate+search+optimize
    replanning_events: int = 0
    replanning_times: list[float] = field(default_factory=list)   # wall s
    replanning_sim_times: list[float] = field(default_factory=list)
    collisions: int = 0
    mapped_fraction: float = 0.0
    rate_curve: list[tuple[float, float]] = field(default_factory=list)
    iterations: list[IterationRecord] = field(default_factory=list)
    optimization: list[opt_mod.OptimizationRecord] = field(default_factory=list)
    update_stats: list[tuple[int, int, int]] = field(default_factory=list)
    invariant_violations: int = 0
    nodes_total: int = 0
    edges_total: int = 0
    recoveries: int = 0

    def deterministic_digest(self) -> str:
        """Digest of every simulation-derived field; wall-clock fields excluded."""
        payload = {
            "scenario": self.scenario,
            "planner": self.planner,
            "seed": self.seed,
            "completed": self.completed,
            "termination": self.termination,
            "exploration_time": round(self.exploration_time, 9),
            "path_length": repr(self.path_length),
            "executed_length": repr(self.executed_length),
            "replanning_events": self.replanning_events,
            "replanning_sim_times": [round(t, 9) for t in self.replanning_sim_times],
            "collisions": self.collisions,
            "mapped_fraction": repr(self.mapped_fraction),
            "rate_curve": [(round(t, 9), repr(f)) for t, f in self.rate_curve],
            "iterations": [(r.index, r.new_nodes, r.edges_added, r.candidates,
                            r.goal_id, repr(r.score)) for r in self.iterations],
            "optimization": [(repr(r.time_before), repr(r.time_after), repr(r.dist_before),
                              repr(r.dist_after), r.passes) for r in self.optimization],
            "update_stats": self.update_stats,
            "invariant_violations": self.invariant_violations,
            "nodes_total": self.nodes_total,
            "edges_total": self.edges_total,
            "recoveries": self.recoveries,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_row(self) -> dict:
        return {
            "scenario": self.scenario,
            "planner": self.planner,
            "seed": self.seed,
            "completed": int(self.completed),
            "termination": self.termination,
            "exploration_time_s": f"{self.exploration_time:.1f}",
            "path_length_m": f"{self.path_length:.3f}",
            "computational_time_s": f"{self.computational_time:.3f}",
            "replanning_events": self.replanning_events,
            "collisions": self.collisions,
            "mapped_fraction": f"{self.mapped_fraction:.4f}",
            "nodes": self.nodes_total,
            "edges": self.edges_total,
        }


def ground_truth_reachable_mask(scenario: Scenario) -> np.ndarray:
    """Non-solid voxels flood-filled (6-connected) from the robot start.

    This fixes the denominator of the mapped fraction; sealed chambers drop out.
    """
    occ = OccupancyMap.for_bounds(scenario.bounds, scenario.config.resolution)
    centers_x = occ.origin[0] + (np.arange(occ.dims[0]) + 0.5) * occ.resolution
    centers_y = occ.origin[1] + (np.arange(occ.dims[1]) + 0.5) * occ.resolution
    centers_z = occ.origin[2] + (np.arange(occ.dims[2]) + 0.5) * occ.resolution
    solid = np.zeros(tuple(int(d) for d in occ.dims), dtype=bool)
    for s in scenario.static_solids:
        ix = (centers_x > s.lo[0]) & (centers_x < s.hi[0])
        iy = (centers_y > s.lo[1]) & (centers_y < s.hi[1])
        iz = (centers_z > s.lo[2]) & (centers_z < s.hi[2])
        solid |= ix[:, None, None] & iy[None, :, None] & iz[None, None, :]
    structure = ndimage.generate_binary_structure(3, 1)
    labels, _ = ndimage.label(~solid, structure=structure)
    start = occ.world_to_index(scenario.robot_start.position)[0]
    return labels == labels[tuple(start)]


def mapped_fraction(occ_map: OccupancyMap, reachable: np.ndarray) -> float:
    known = occ_map.states != VoxelState.UNKNOWN
    total = int(np.count_nonzero(reachable))
    return float(np.count_nonzero(known & reachable)) / max(total, 1)


class _Tracker:
    """Finite-difference velocity estimates for currently visible walkers."""

    def __init__(self, dt: float):
        self.dt = dt
        self._last: dict[int, tuple[float, np.ndarray]] = {}

    def update(self, detections, sim_time: float):
        out = []
        for det in detections:
            prev = self._last.get(det.index)
            if prev is not None and abs(sim_time - prev[0] - self.dt) < 1e-9:
                det.velocity = (det.position - prev[1]) / self.dt
            self._last[det.index] = (sim_time, det.position.copy())
            out.append(det)
        return out


class _Run:
    def __init__(self, scenario: Scenario, planner_kind: str, seed: int | None,
                 budget_s: float, check_invariants: bool, log_file=None):
        if planner_kind not in PLANNER_KINDS:
            raise ValueError(f"unknown planner kind {planner_kind!r}")
        scenario.validate()
        self.scenario = scenario
        self.kind = planner_kind
        self.cfg = scenario.config
        self.seed = scenario.seed if seed is None else int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.budget_s = float(budget_s)
        self.check_invariants = check_invariants
        self.log_file = log_file

        self.occ = OccupancyMap.for_bounds(scenario.bounds, self.cfg.resolution)
        self.roadmap = Roadmap(self.cfg.gain.n_sectors)
        self.pose = scenario.robot_start.copy()
        self.sim_time = 0.0
        self.tick = 0
        self.reachable = ground_truth_reachable_mask(scenario)
        self.metrics = RunMetrics(scenario.name, planner_kind, self.seed)
        self.tracker = _Tracker(self.cfg.sim_dt)
        self.in_collision = False
        self._wall_start = _time.perf_counter()
        self._new_node_history: list[int] = []
        self._executed: list[np.ndarray] = [self.pose.position.copy()]

    # -- bookkeeping -----------------------------------------------------------

    def _over_budget(self) -> bool:
        return _time.perf_counter() - self._wall_start > self.budget_s

    def _log(self, line: str) -> None:
        if self.log_file is not None:
            self.log_file.write(line + "\n")

    def _sample_rate(self, force: bool = False) -> None:
        if force or self.tick % _RATE_EVERY_TICKS == 0:
            self.metrics.rate_curve.append((self.sim_time, mapped_fraction(self.occ, self.reachable)))

    def _trace_executed(self, force: bool = False) -> None:
        """Decimated polyline of the path actually flown (feeds the update rule)."""
        gap = float(np.linalg.norm(self.pose.position - self._executed[-1]))
        if gap >= 0.4 or (force and gap > 1e-9):
            self._executed.append(self.pose.position.copy())

    def _advance_tick(self, new_pose: Pose) -> None:
        self.metrics.path_length += float(np.linalg.norm(new_pose.position - self.pose.position))
        self.pose = new_pose
        self.sim_time += self.cfg.sim_dt
        self.tick += 1
        scan = simulate_scan(self.scenario, self.pose, self.sim_time)
        self.occ.integrate_scan(self.pose, scan)
        colliding = check_ground_truth_collision(self.scenario, self.pose, self.sim_time)
        if colliding and not self.in_collision:
            self.metrics.collisions += 1
        self.in_collision = colliding
        self._sample_rate()

    # -- robot attachment -------------------------------------------------------

    def _attachment(self):
        """Nearest traversable roadmap node, or virtual links for this query."""
        box = self.cfg.robot.collision_box
        nid = self.roadmap.nearest_node(self.pose.position)
        npos = self.roadmap.nodes[nid].position
        if np.linalg.norm(npos - self.pose.position) < 1e-9 or \
                self.occ.is_segment_traversable(self.pose.position, npos, box):
            return nid, None
        links = []
        for other in self.roadmap.within_radius(self.pose.position, self.cfg.sampler.max_edge_distance):
            other = int(other)
            opos = self.roadmap.nodes[other].position
            if self.occ.is_segment_traversable(self.pose.position, opos, box):
                links.append((other, float(np.linalg.norm(opos - self.pose.position))))
        return nid, (links or None)

    def _plan_trajectory(self, cutoff: float, blocked: set | None = None) -> Trajectory | None:
        nid, links = self._attachment()
        kwargs = dict(blocked_edges=blocked)
        if links is not None:
            kwargs.update(start_links=links, start_position=self.pose.position)
        try:
            return planner_mod.plan(self.roadmap, self.occ, nid, cutoff, self.cfg.planner,
                                    self.cfg.gain, self.cfg.robot.collision_box, **kwargs)
        except ValueError:
            return None

    def _follower_for(self, traj: Trajectory) -> TrajectoryFollower:
        wps = traj.follower_waypoints()
        first_pos = wps[0][0]
        if np.linalg.norm(first_pos - self.pose.position) > 1e-9:
            approach_yaw = azimuth_of(first_pos - self.pose.position)
            wps = [(self.pose.position.copy(), approach_yaw)] + wps
        return TrajectoryFollower(wps, self.cfg.robot.v_max, self.cfg.robot.omega_max,
                                  start_yaw=self.pose.yaw)

    def _hold_pose(self, conflict: planner_mod.Conflict | None) -> Pose:
        """Holding in place: face a visible threat, otherwise keep spinning.

        The spin keeps watch on all approach directions and re-observes the
        stale occupancy trails walkers leave behind, which is what unblocks the
        next replanning attempt.
        """
        max_step = self.cfg.robot.omega_max * self.cfg.sim_dt
        detections = visible_dynamic_obstacles(self.scenario, self.pose, self.sim_time)
        if detections:
            deltas = [d.position - self.pose.position for d in detections]
            target = min(deltas, key=lambda v: float(np.linalg.norm(v)))
            if np.linalg.norm(target[:2]) > 1e-9:
                delta = float(wrap_angle(azimuth_of(target) - self.pose.yaw))
                step = math.copysign(min(abs(delta), max_step), delta)
                return Pose(self.pose.position.copy(), self.pose.yaw + step)
        return Pose(self.pose.position.copy(), self.pose.yaw + max_step)

    def _blocked_edges(self, conflict: planner_mod.Conflict, detections=()) -> set[frozenset]:
        """Edges within one obstacle diameter of the predicted conflict region.

        The region is the conflicting obstacle's extrapolated sweep over the
        prediction horizon (falls back to the conflict point when the obstacle
        is no longer tracked).
        """
        points = [conflict.position]
        for det in detections:
            if det.index == conflict.obstacle_index:
                horizon = self.cfg.planner.prediction_horizon
                ts = np.arange(0.0, horizon + 1e-9, 0.5)
                points = list(det.position + ts[:, None] * det.velocity)
                break
        sweep = np.array(points)
        blocked = set()
        reach = 2.0 * conflict.radius
        for u, v in self.roadmap.edges():
            a = self.roadmap.nodes[u].position
            b = self.roadmap.nodes[v].position
            if float(segment_point_distances(sweep, a, b).min()) < reach:
                blocked.add(frozenset((u, v)))
        return blocked

    # -- execution ---------------------------------------------------------------

    _COMMIT_WINDOW = 2.0   # s; stick with an adopted escape at least this long
    _IMMINENT = 1.2        # s; conflicts closer than this always interrupt

    def _candidate_ok(self, traj: Trajectory, detections) -> bool:
        """Would this trajectory immediately run into a tracked obstacle?"""
        probe = self._follower_for(traj)
        horizon = self.cfg.planner.prediction_horizon
        future = probe.future_positions(horizon, self.cfg.sim_dt)
        hit = planner_mod.predict_collision(future, detections, horizon, self.cfg.sim_dt,
                                            self.cfg.robot.half_extents,
                                            margin=self.cfg.planner.prediction_margin)
        return hit is None or hit.time > self._COMMIT_WINDOW

    def _execute(self, traj: Trajectory) -> bool:
        """Fly a trajectory with per-tick monitoring; False when budget ran out."""
        follower = self._follower_for(traj)
        holding = False
        hold_conflict: planner_mod.Conflict | None = None
        committed_until = -np.inf
        horizon = self.cfg.planner.prediction_horizon
        dt = self.cfg.sim_dt
        half = self.cfg.robot.half_extents

        while True:
            if self._over_budget():
                return False
            if not holding and follower.done:
                self._trace_executed(force=True)
                return True
            if holding:
                new_pose = self._hold_pose(hold_conflict)
            else:
                before = follower.distance_traveled
                new_pose = follower.step(dt)
                self.metrics.executed_length += follower.distance_traveled - before
            self._advance_tick(new_pose)
            self._trace_executed()

            detections = self.tracker.update(
                visible_dynamic_obstacles(self.scenario, self.pose, self.sim_time), self.sim_time)
            conflict = None
            if detections:
                if holding:
                    future = np.tile(self.pose.position, (int(round(horizon / dt)) + 1, 1))
                else:
                    future = follower.future_positions(horizon, dt)
                conflict = planner_mod.predict_collision(future, detections, horizon, dt, half,
                                                         margin=self.cfg.planner.prediction_margin)

            actionable = conflict is not None and (
                holding or self.sim_time >= committed_until or conflict.time < self._IMMINENT)
            if actionable:
                self._trace_executed(force=True)
                self.metrics.replanning_events += 1
                self.metrics.replanning_sim_times.append(self.sim_time)
                blocked = self._blocked_edges(conflict, detections)
                t0 = _time.perf_counter()
                new_traj = self._replan(blocked)
                self.metrics.replanning_times.append(_time.perf_counter() - t0)
                if new_traj is not None and not self._candidate_ok(new_traj, detections):
                    new_traj = None
                if new_traj is None:
                    new_traj = self._evade(conflict, detections, blocked)
                    if new_traj is not None and not self._candidate_ok(new_traj, detections):
                        new_traj = None
                if new_traj is not None:
                    follower = self._follower_for(new_traj)
                    holding = False
                    committed_until = self.sim_time + self._COMMIT_WINDOW
                else:
                    holding = True
                    hold_conflict = conflict
            elif conflict is None and holding:
                # Threat has passed (or moved); take any trajectory to get going.
                new_traj = self._replan(self._blocked_edges(hold_conflict, detections)
                                        if hold_conflict else set())
                if new_traj is not None and self._candidate_ok(new_traj, detections):
                    self.metrics.recoveries += 1
                    follower = self._follower_for(new_traj)
                    holding = False
                    hold_conflict = None
                    committed_until = self.sim_time + self._COMMIT_WINDOW
                else:
                    # No route on the current roadmap; hand control back to the
                    # planning loop for a fresh sampling round.
                    self._trace_executed(force=True)
                    return True

    def _replan(self, blocked: set[frozenset]) -> Trajectory | None:
        if len(self.roadmap) == 0:
            return None
        nid, links = self._attachment()
        try:
            return planner_mod.replan(self.roadmap, self.occ, nid, blocked, self.cfg.planner,
                                      self.cfg.gain, self.cfg.robot.collision_box,
                                      start_links=links,
                                      start_position=self.pose.position if links else None)
        except ValueError:
            return None

    def _evade(self, conflict: planner_mod.Conflict, detections,
               blocked: set[frozenset]) -> Trajectory | None:
        """Safety fallback when no gain-bearing trajectory exists: shortest route
        to a nearby node clear of the conflicting obstacle's predicted sweep."""
        if len(self.roadmap) == 0:
            return None
        sweep = [conflict.position]
        for det in detections:
            if det.index == conflict.obstacle_index:
                ts = np.arange(0.0, self.cfg.planner.prediction_horizon + 1e-9, 0.5)
                sweep = list(det.position + ts[:, None] * det.velocity)
        sweep = np.array(sweep)
        pos = self.roadmap.positions
        clearances = np.full(len(self.roadmap), np.inf)
        for p in sweep:
            clearances = np.minimum(clearances, np.linalg.norm(pos - p, axis=1))
        order = np.argsort(np.linalg.norm(pos - self.pose.position, axis=1))
        nid, links = self._attachment()
        sources = ([(cost, (n,)) for n, cost in links] if links
                   else [(0.0, (nid,))])
        box = self.cfg.robot.collision_box
        tiers = (2.0 * conflict.radius + 0.5, conflict.radius + 0.3)
        for safe_radius in tiers:
            tried = 0
            for cand in order:
                cand = int(cand)
                if clearances[cand] < safe_radius:
                    continue
                tried += 1
                if tried > 25:
                    break
                path = roadmap_dijkstra(self.roadmap, sources, cand, blocked)
                if path is None:
                    continue
                pts = [self.pose.position.copy()] if links else []
                pts += [self.roadmap.nodes[n].position for n in path]
                pts_arr = np.array(pts)
                if not all(self.occ.is_segment_traversable(pts_arr[i], pts_arr[i + 1], box)
                           for i in range(len(pts) - 1)):
                    continue
                yaws = planner_mod.motion_yaws(pts_arr)
                ids = ([None] if links else []) + list(path)
                wps = [Waypoint(n, p.copy(), float(y)) for n, p, y in zip(ids, pts_arr, yaws)]
                t = planner_mod.execution_time(pts_arr, yaws, self.cfg.robot.v_max,
                                               self.cfg.robot.omega_max)
                return Trajectory(wps, t, 0.0, 0.0, goal_id=cand)
        return None

    def _spin(self, angle: float) -> bool:
        """In-place turn through `angle`, scanning every tick."""
        yaw0 = self.pose.yaw
        thirds = max(int(math.ceil(abs(angle) / (2 * math.pi / 3))), 1)
        spin = [(self.pose.position.copy(), wrap_angle(yaw0 + angle * (k + 1) / thirds))
                for k in range(thirds)]
        traj = Trajectory([Waypoint(None, p, float(y)) for p, y in spin],
                          exec_time=abs(angle) / self.cfg.robot.omega_max, score=0.0,
                          total_gain=0.0)
        return self._execute(traj)

    def _bootstrap_spin(self) -> bool:
        """Initial full turn so the first sampling round has mapped space."""
        return self._spin(2 * math.pi)

    # -- main loops -----------------------------------------------------------------

    def run(self) -> RunMetrics:
        scan = simulate_scan(self.scenario, self.pose, self.sim_time)
        self.occ.integrate_scan(self.pose, scan)
        self._sample_rate(force=True)
        ok = self._bootstrap_spin()
        if ok:
            if self.kind == "frontier":
                self._run_frontier()
            else:
                self._run_roadmap()
        m = self.metrics
        m.exploration_time = self.sim_time
        m.mapped_fraction = mapped_fraction(self.occ, self.reachable)
        m.nodes_total = len(self.roadmap)
        m.edges_total = self.roadmap.edge_count()
        self._sample_rate(force=True)
        return m

    def _run_roadmap(self) -> None:
        cfg = self.cfg
        iteration = 0
        while True:
            if self._over_budget():
                self.metrics.termination = "budget"
                return
            iteration += 1

            t0 = _time.perf_counter()
            new_ids = sample_incremental(self.roadmap, self.occ, self.pose, cfg.sampler,
                                         cfg.robot.collision_box, self.rng)
            edges_added = connect_new_nodes(self.roadmap, self.occ, new_ids, cfg.sensor,
                                            cfg.sampler, cfg.robot.collision_box)
            t_sample = _time.perf_counter() - t0

            if self.check_invariants:
                new_edges = [(u, v) for u in new_ids for v in self.roadmap.nodes[u].adjacency]
                issues = validate_invariants(self.roadmap, self.occ, cfg.sensor, cfg.sampler,
                                             cfg.robot.collision_box, new_edges=new_edges)
                self.metrics.invariant_violations += len(issues)
                for issue in issues:
                    self._log(f"invariant-violation iter={iteration} {issue}")

            t0 = _time.perf_counter()
            if new_ids:
                gain_mod.evaluate_nodes(self.occ, self.roadmap, new_ids, cfg.gain)
            stats = gain_mod.update_after_execution(self.roadmap, self.occ,
                                                    np.array(self._executed), cfg.gain,
                                                    cfg.update, exclude_ids=new_ids)
            self.metrics.update_stats.append((stats.zeroed, stats.reevaluated, stats.considered))
            t_gain = _time.perf_counter() - t0

            t0 = _time.perf_counter()
            traj = self._plan_trajectory(cfg.planner.cutoff_regular)
            t_search = _time.perf_counter() - t0

            t_optimize = 0.0
            if traj is not None and self.kind == "prm" and len(traj.waypoints) >= 2:
                t0 = _time.perf_counter()
                esdf = rebuild(self.occ)
                traj_out, record = opt_mod.optimize(traj, self.occ, esdf, cfg.sensor,
                                                    cfg.optimizer, self.rng)
                t_optimize = _time.perf_counter() - t0
                self.metrics.optimization.append(record)
                traj = traj_out

            self._new_node_history.append(len(new_ids))
            rec = IterationRecord(iteration, len(new_ids), edges_added,
                                  len(planner_mod.goal_candidates(self.roadmap, cfg.planner.cutoff_regular))
                                  if len(self.roadmap) else 0,
                                  traj.goal_id if traj else None,
                                  traj.score if traj else 0.0,
                                  t_sample, t_gain, t_search, t_optimize)
            self.metrics.iterations.append(rec)
            self.metrics.computational_time += rec.total_time
            self._log(f"iter={iteration} new_nodes={len(new_ids)} edges={edges_added} "
                      f"candidates={rec.candidates} goal={rec.goal_id} score={rec.score:.3f} "
                      f"t_sample={t_sample:.4f} t_gain={t_gain:.4f} t_search={t_search:.4f} "
                      f"t_optimize={t_optimize:.4f}")

            if planner_mod.check_termination(self._new_node_history, cfg.planner.termination_steps):
                self.metrics.completed = True
                self.metrics.termination = "explored"
                return

            if traj is None:
                # Nothing reachable right now. Look around in place so time
                # passes, walkers move on, and stale obstacle trails get
                # re-observed before the next round.
                self._executed = [self.pose.position.copy()]
                if not self._spin(2 * math.pi / 3):
                    self.metrics.termination = "budget"
                    return
                continue
            self._executed = [self.pose.position.copy()]
            if not self._execute(traj):
                self.metrics.termination = "budget"
                return

    def _run_frontier(self) -> None:
        cfg = self.cfg
        iteration = 0
        while True:
            if self._over_budget():
                self.metrics.termination = "budget"
                return
            iteration += 1
            t0 = _time.perf_counter()
            target = frontier_mod.plan_frontier_target(self.occ, self.pose.position,
                                                       cfg.robot.collision_box)
            t_search = _time.perf_counter() - t0
            self.metrics.computational_time += t_search
            rec = IterationRecord(iteration, 0, 0, 0, None, 0.0, 0.0, 0.0, t_search, 0.0)
            self.metrics.iterations.append(rec)
            if target is None:
                self.metrics.completed = True
                self.metrics.termination = "no-frontiers"
                return
            yaws = planner_mod.motion_yaws(np.array(target.waypoints), final_yaw=target.final_yaw)
            traj = Trajectory([Waypoint(None, p, float(y))
                               for p, y in zip(target.waypoints, yaws)], 0.0, 0.0, 0.0)
            self._executed = [self.pose.position.copy()]
            if not self._execute(traj):
                self.metrics.termination = "budget"
                return


def run_exploration(scenario: Scenario, planner_kind: str = "prm", seed: int | None = None,
                    budget_s: float = 600.0, check_invariants: bool = False,
                    log_path=None) -> RunMetrics:
    """Run one exploration to termination; see RunMetrics for what is recorded."""
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        run = _Run(scenario, planner_kind, seed, budget_s, check_invariants, log_file)
        return run.run()
    finally:
        if log_file is not None:
            log_file.close()


def final_state(scenario: Scenario, planner_kind: str = "prm", seed: int | None = None,
                budget_s: float = 600.0) -> tuple[RunMetrics, OccupancyMap, Roadmap]:
    """Like run_exploration but also hands back the map and roadmap for export."""
    run = _Run(scenario, planner_kind, seed, budget_s, False, None)
    metrics = run.run()
    return metrics, run.occ, run.roadmap


# -- suites ------------------------------------------------------------------------

def run_suite(scenarios: list[Scenario], kinds: list[str], seeds: list[int], out_dir,
              budget_s: float = 600.0) -> list[RunMetrics]:
    """Batch runs with per-run rows, aggregate stats, and optimization ratios.

    Writes runs.csv (one row per run), summary.csv (mean/std per scenario and
    planner), ratios.csv (per-iteration optimized/unoptimized trajectory
    ratios), and one rate_*.csv per run. computational_time counts planner
    phases only (sample + evaluate + search + optimize).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: list[RunMetrics] = []
    for scn in scenarios:
        for kind in kinds:
            for seed in seeds:
                try:
                    m = run_exploration(scn, kind, seed, budget_s)
                except Exception as exc:  # keep the suite going, record the failure
                    m = RunMetrics(scn.name, kind, seed, termination=f"error: {exc}")
                results.append(m)
                rate_path = out / f"rate_{scn.name}_{kind}_{seed}.csv"
                with rate_path.open("w", newline="", encoding="utf-8") as f:
                    w = csv.writer(f)
                    w.writerow(["sim_time_s", "mapped_fraction"])
                    w.writerows(m.rate_curve)

    rows = [m.to_row() for m in results]
    if rows:
        with (out / "runs.csv").open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)

    _write_summary(results, out / "summary.csv")
    _write_ratios(results, out / "ratios.csv")
    return results


def _write_summary(results: list[RunMetrics], path: Path) -> None:
    groups: dict[tuple[str, str], list[RunMetrics]] = {}
    for m in results:
        groups.setdefault((m.scenario, m.planner), []).append(m)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["scenario", "planner", "runs",
                    "exploration_time_mean_s", "exploration_time_std_s",
                    "path_length_mean_m", "path_length_std_m",
                    "computational_time_mean_s", "computational_time_std_s",
                    "collisions_total"])
        for (scn, kind), ms in sorted(groups.items()):
            times = np.array([m.exploration_time for m in ms])
            lengths = np.array([m.path_length for m in ms])
            comp = np.array([m.computational_time for m in ms])
            w.writerow([scn, kind, len(ms),
                        f"{times.mean():.2f}", f"{times.std():.2f}",
                        f"{lengths.mean():.2f}", f"{lengths.std():.2f}",
                        f"{comp.mean():.3f}", f"{comp.std():.3f}",
                        sum(m.collisions for m in ms)])


def _write_ratios(results: list[RunMetrics], path: Path) -> None:
    groups: dict[str, list[opt_mod.OptimizationRecord]] = {}
    for m in results:
        if m.planner == "prm":
            groups.setdefault(m.scenario, []).extend(
                r for r in m.optimization if r.input_feasible and r.passes > 0)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["scenario", "iterations",
                    "time_ratio_pct", "length_ratio_pct", "distance_ratio_pct"])
        for scn, recs in sorted(groups.items()):
            if not recs:
                continue
            t = np.mean([r.time_after / r.time_before for r in recs if r.time_before > 0])
            l = np.mean([r.length_after / r.length_before for r in recs if r.length_before > 0])
            d = np.mean([r.dist_after / r.dist_before for r in recs if r.dist_before > 0])
            w.writerow([scn, len(recs), f"{100 * t:.2f}", f"{100 * l:.2f}", f"{100 * d:.2f}"])


def optimization_ratios(results: list[RunMetrics]) -> tuple[float, float, float] | None:
    """Mean per-iteration (time, length, distance) ratios over prm runs."""
    recs = [r for m in results if m.planner == "prm"
            for r in m.optimization if r.input_feasible and r.passes > 0
            and r.time_before > 0 and r.length_before > 0 and r.dist_before > 0]
    if not recs:
        return None
    t = float(np.mean([r.time_after / r.time_before for r in recs]))
    l = float(np.mean([r.length_after / r.length_before for r in recs]))
    d = float(np.mean([r.dist_after / r.dist_before for r in recs]))
    return t, l, d
